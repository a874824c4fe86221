"""Backend selection for the hot loops.

The compiled extension ``fracspec._ckernels`` is used when it imports;
otherwise, or when ``FRACSPEC_PURE=1`` is set, the numpy versions in
``fracspec._kernels_py`` are used. Both expose the same functions.
"""

import os

from fracspec import _kernels_py

_impl = _kernels_py
if os.environ.get("FRACSPEC_PURE", "") not in ("1", "true", "yes"):
    try:
        from fracspec import _ckernels as _impl  # noqa: F811
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
shell_sum = _impl.shell_sum
step_fode = _impl.step_fode


def use(name):
    """Switch backend at runtime: ``"compiled"`` or ``"python"``."""
    global _impl, BACKEND, shell_sum, step_fode
    if name == "python":
        _impl = _kernels_py
    elif name == "compiled":
        from fracspec import _ckernels
        _impl = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = _impl.BACKEND
    shell_sum = _impl.shell_sum
    step_fode = _impl.step_fode


def available():
    names = ["python"]
    try:
        from fracspec import _ckernels  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    return names
