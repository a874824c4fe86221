"""Positive operators with a known discrete spectrum and their eigen-expansions.

Each ``SpectralOperator`` carries its eigenvalues (ascending), an evaluator for
the orthonormal eigenfunctions, a quadrature rule on its domain and a
finite-difference version of the differential operator it diagonalizes (used
only for residual checks).

Coefficients are plain real vectors wrapped in ``SpectralCoefficients``; mode
indices are 0-based positions in the ascending eigenvalue list.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from fracspec.errors import GridMismatchError, ParameterError, ResolutionError

GRAM_TOL = 1e-8
TAIL_TOL = 1e-10
DEFAULT_N = 64
HERMITE_MIN_BOX = 8.0


def simpson_weights(n, h):
    """Composite Simpson weights for ``n`` (odd) equally spaced points."""
    if n < 3 or n % 2 == 0:
        raise ParameterError("n_points", "Simpson's rule needs an odd number of points >= 3")
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """Truncated eigen-decomposition of a positive self-adjoint operator.

    ``basis(x)`` returns the (N, len(x)) matrix of eigenfunction values.
    ``apply(f, x)`` applies the differential operator to a callable ``f`` by
    central differences. ``periodic`` selects the trapezoid rule.
    """

    eigenvalues: np.ndarray
    basis: object
    domain: tuple
    label: str
    apply: object = None
    modes: tuple = ()
    periodic: bool = False
    n_points: int = 0
    weight: object = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size < 1:
            raise ParameterError("N", "need at least one mode")
        if np.any(ev < 0) or np.any(np.diff(ev) < 0):
            raise ParameterError("eigenvalues", "must be non-negative and ascending")
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)
        if not self.modes:
            object.__setattr__(self, "modes", tuple(range(ev.size)))
        if not self.n_points:
            object.__setattr__(self, "n_points", _default_points(ev.size))

    @property
    def size(self):
        return self.eigenvalues.size

    @property
    def zero_in_spectrum(self):
        return bool(abs(self.eigenvalues[0]) <= 1e-14)

    def eigenfunction(self, k, x):
        """Values of eigenfunction ``k`` (0-based) at ``x``."""
        return self.basis(np.atleast_1d(np.asarray(x, dtype=float)))[k]

    @cached_property
    def grid(self):
        """Quadrature nodes and weights ``(x, w)`` at the default resolution."""
        return self.quadrature(self.n_points)

    def quadrature(self, n_points):
        a, b = self.domain
        if self.periodic:
            x = a + (b - a) * np.arange(n_points) / n_points
            w = np.full(n_points, (b - a) / n_points)
        else:
            n = n_points + (1 - n_points % 2)
            x = np.linspace(a, b, n)
            w = simpson_weights(n, (b - a) / (n - 1))
        if self.weight is not None:
            w = w * self.weight(x)
        return x, w

    def gram(self, x=None, w=None):
        if x is None:
            x, w = self.grid
        B = self.basis(x)
        return (B * w) @ B.T

    @cached_property
    def gram_defect(self):
        return float(np.abs(self.gram() - np.eye(self.size)).max())


def _default_points(N):
    # comfortably more than 8 points per oscillation of the highest mode
    return max(1025, 64 * N + 1)


@dataclass(frozen=True)
class SpectralCoefficients:
    values: np.ndarray
    operator_label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ParameterError("values", "coefficients must be a vector")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size


def _second_difference(f, x, h):
    # fourth-order central difference for f''
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


FD_STEP = 1e-3


def _check_count(N):
    N = int(N)
    if N < 1:
        raise ParameterError("N", "need at least one mode")
    return N


def dirichlet_laplacian(L=math.pi, N=DEFAULT_N, n_points=None):
    """``-d^2/dx^2`` on (0, L) with zero boundary values."""
    if not L > 0:
        raise ParameterError("L", "interval length must be positive")
    N = _check_count(N)
    k = np.arange(1, N + 1)
    scale = math.sqrt(2.0 / L)

    def basis(x):
        return scale * np.sin(np.outer(k * math.pi / L, x))

    def apply(f, x):
        return -_second_difference(f, x, FD_STEP)

    return SpectralOperator((k * math.pi / L) ** 2, basis, (0.0, float(L)), "dirichlet", apply,
                            modes=tuple(int(i) for i in k), n_points=n_points or 0, params={"L": float(L)})


def periodic_laplacian(N=DEFAULT_N, n_points=None):
    """``-d^2/dx^2`` on [0, 2 pi) with periodic boundary conditions.

    Mode 0 is the constant; afterwards cos(kx) comes before sin(kx).
    """
    N = _check_count(N)
    idx = np.arange(N)
    freq = (idx + 1) // 2
    is_cos = (idx % 2 == 1)

    def basis(x):
        arg = np.outer(freq, x)
        out = np.where(is_cos[:, None], np.cos(arg), np.sin(arg)) / math.sqrt(math.pi)
        out[0] = 1.0 / math.sqrt(2.0 * math.pi)
        return out

    def apply(f, x):
        return -_second_difference(f, x, FD_STEP)

    return SpectralOperator(freq.astype(float) ** 2, basis, (0.0, 2.0 * math.pi), "periodic", apply,
                            modes=tuple(("cos" if c else "sin", int(q)) if q else ("const", 0)
                                        for q, c in zip(freq, is_cos)),
                            periodic=True, n_points=n_points or 0)


def hermite_functions(N, x):
    """Normalized Hermite functions psi_0..psi_{N-1} at ``x`` (stable recurrence)."""
    x = np.asarray(x, dtype=float)
    out = np.empty((N, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if N > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, N - 1):
        out[k + 1] = x * math.sqrt(2.0 / (k + 1)) * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def harmonic_oscillator(N=DEFAULT_N, X=None, n_points=None):
    """``-d^2/dx^2 + x^2`` on the line, with quadrature on the box [-X, X].

    The default box is twice the classical turning point of the highest state,
    but never smaller than 8 so the low states have negligible mass outside.
    """
    N = _check_count(N)
    if X is None:
        X = max(2.0 * math.sqrt(2 * N + 1), HERMITE_MIN_BOX)
    if not X > 0:
        raise ParameterError("X", "box half-width must be positive")

    def basis(x):
        return hermite_functions(N, x)

    def apply(f, x):
        return -_second_difference(f, x, FD_STEP) + x * x * f(x)

    if n_points is None:
        # about 32 points per local wavelength of the highest state at the centre
        n_points = max(1025, int(32 * 2 * X * math.sqrt(2 * N + 1) / (2 * math.pi)) | 1)
    return SpectralOperator(2.0 * np.arange(N) + 1.0, basis, (-float(X), float(X)), "hermite", apply,
                            n_points=n_points, params={"X": float(X)})


def involution_operator(epsilon, N=DEFAULT_N, n_points=None):
    """``-(v''(x) - epsilon v''(pi - x))`` on (0, pi) with zero boundary values.

    The eigenfunctions sqrt(2/pi) sin(kx), k = 1..N, have eigenvalues
    k^2 (1 + (-1)^k epsilon). These are not monotone in k, so the modes are
    stored sorted by eigenvalue; ``modes`` records the wavenumber of each.
    """
    epsilon = float(epsilon)
    if not abs(epsilon) < 1.0:
        raise ParameterError("epsilon", f"|epsilon| must be < 1, got {epsilon}")
    N = _check_count(N)
    k = np.arange(1, N + 1)
    ev = k ** 2 * (1.0 + (-1.0) ** k * epsilon)
    order = np.argsort(ev, kind="stable")
    ks = k[order]
    scale = math.sqrt(2.0 / math.pi)

    def basis(x):
        return scale * np.sin(np.outer(ks, x))

    def apply(f, x):
        return -(_second_difference(f, x, FD_STEP) - epsilon * _second_difference(f, math.pi - x, FD_STEP))

    return SpectralOperator(ev[order], basis, (0.0, math.pi), f"involution:{epsilon:g}", apply,
                            modes=tuple(int(i) for i in ks), n_points=n_points or 0,
                            params={"epsilon": epsilon})


def by_name(name, N=DEFAULT_N, **kw):
    """Build an operator from its short name: dirichlet, periodic, hermite, involution:<eps>."""
    name = str(name).strip()
    if name == "dirichlet":
        return dirichlet_laplacian(kw.get("L", math.pi), N)
    if name == "periodic":
        return periodic_laplacian(N)
    if name == "hermite":
        return harmonic_oscillator(N, kw.get("X"))
    if name.startswith("involution"):
        _, _, eps = name.partition(":")
        try:
            eps = float(eps) if eps else 0.0
        except ValueError:
            raise ParameterError("operator", f"bad epsilon in {name!r}") from None
        return involution_operator(eps, N)
    raise ParameterError("operator", f"unknown operator {name!r} (dirichlet, periodic, hermite, involution:<eps>)")


def _samples_and_weights(op, f, x):
    if x is None:
        x, w = op.grid
        defect = op.gram_defect
    else:
        x = np.asarray(x, dtype=float)
        if x.size < 3:
            raise GridMismatchError("need at least 3 sample points")
        h = np.diff(x)
        if not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise GridMismatchError("sample points must be equally spaced")
        if op.periodic:
            w = np.full(x.size, h[0])
        else:
            if x.size % 2 == 0:
                raise GridMismatchError("Simpson's rule needs an odd number of samples")
            w = simpson_weights(x.size, h[0])
        if op.weight is not None:
            w = w * op.weight(x)
        defect = float(np.abs(op.gram(x, w) - np.eye(op.size)).max())
    if defect > GRAM_TOL:
        raise ResolutionError(f"Gram matrix of {op.label} is off by {defect:.2e} on {x.size} points")
    vals = f(x) if callable(f) else np.asarray(f, dtype=float)
    if vals.shape != x.shape:
        raise GridMismatchError(f"{vals.size} samples for {x.size} quadrature points")
    return x, w, vals


def analyze(op, f, x=None):
    """Expansion coefficients (f, e_k) by quadrature.

    ``f`` is a callable or samples on ``x`` (default: the operator's own grid).
    """
    x, w, vals = _samples_and_weights(op, f, x)
    return SpectralCoefficients(op.basis(x) @ (w * vals), op.label)


def synthesize(op, c, x=None):
    """Samples of sum_k c_k e_k at ``x`` (default: the operator's grid)."""
    values = c.values if isinstance(c, SpectralCoefficients) else np.asarray(c, dtype=float)
    if values.size != op.size:
        raise GridMismatchError(f"{values.size} coefficients for {op.size} modes")
    if x is None:
        x = op.grid[0]
    return values @ op.basis(np.atleast_1d(np.asarray(x, dtype=float)))


def l2_norm_samples(op, f, x=None):
    x, w, vals = _samples_and_weights(op, f, x)
    return math.sqrt(max(float(np.dot(w, vals * vals)), 0.0))


def representation_tail(op, f, c=None, x=None):
    """l2 norm of the part of ``f`` not captured by the truncated basis.

    Measured directly as the quadrature norm of ``f - sum c_k e_k`` (the
    difference of squared norms would lose everything below ~1e-8).
    """
    x, w, vals = _samples_and_weights(op, f, x)
    if c is None:
        c = SpectralCoefficients(op.basis(x) @ (w * vals), op.label)
    r = vals - c.values @ op.basis(x)
    return math.sqrt(float(np.dot(w, r * r)))


def sobolev_norm(op, c, delta=0.0):
    """(sum_k (1 + lambda_k)^delta c_k^2)^(1/2)."""
    values = c.values if isinstance(c, SpectralCoefficients) else np.asarray(c, dtype=float)
    if values.size != op.size:
        raise GridMismatchError(f"{values.size} coefficients for {op.size} modes")
    delta = float(delta)
    if not math.isfinite(delta):
        raise ParameterError("delta", "Sobolev index must be finite")
    wgt = (1.0 + op.eigenvalues) ** delta
    return math.sqrt(float(np.dot(wgt, values * values)))


def eigen_residual(op, k, x=None):
    """Relative residual ||L e_k - lambda_k e_k|| / ||lambda_k e_k|| on interior points."""
    if op.apply is None:
        raise ParameterError("operator", f"{op.label} has no differential form")
    if x is None:
        a, b = op.domain
        span = b - a
        margin = 0.25 * span if op.label == "hermite" else 0.02 * span
        x = np.linspace(a + margin, b - margin, 401)

    def f(y):
        return op.eigenfunction(k, y)

    lhs = op.apply(f, x)
    rhs = op.eigenvalues[k] * f(x)
    scale = max(float(np.abs(rhs).max()), float(np.abs(f(x)).max()))
    return float(np.abs(lhs - rhs).max()) / scale
