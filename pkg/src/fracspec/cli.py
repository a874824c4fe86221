"""Command-line entry point: ``fracspec <command> [options]``.

Commands: ml-eval, solve, decay-study, oracle-compare, lplq-study.

Options may also come from ``--config FILE`` (JSON or YAML, keys spelled like
the long options with ``_`` or ``-``); flags given on the command line win.
Exit status: 0 success, 1 invalid configuration, 2 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time

import numpy as np

from fracspec import caputo_oracle, euclidean_multiplier, evolution, spectral_operator
from fracspec.errors import FracSpecError, NumericalError, ParameterError
from fracspec.mittag_leffler import ml_two

SUMMARY_FIELDS = ("command", "parameters", "fitted_slope", "slope_stderr", "sup_ratio", "runtime_seconds")


class ConfigError(Exception):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


def fmt(v):
    """17 significant digits, so values survive a round trip exactly."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


# -------------------------------------------------------------- parsing

_SPACE = re.compile(r"^\s*(logspace|linspace)\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)\s*$")


def parse_times(spec, field="times"):
    """``logspace(a,b,n)`` (decades), ``linspace(a,b,n)`` or a comma list."""
    if spec is None:
        return None
    if isinstance(spec, (list, tuple)):
        vals = [float(v) for v in spec]
    else:
        m = _SPACE.match(str(spec))
        try:
            if m:
                a, b, n = float(m.group(2)), float(m.group(3)), int(m.group(4))
                if n < 1:
                    raise ValueError
                vals = np.logspace(a, b, n) if m.group(1) == "logspace" else np.linspace(a, b, n)
            else:
                vals = [float(v) for v in str(spec).split(",") if v.strip()]
        except ValueError:
            raise ConfigError(field, f"cannot parse {spec!r}; use logspace(a,b,n), linspace(a,b,n) or a list") from None
    vals = np.asarray(vals, dtype=float)
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise ConfigError(field, "need at least one finite value")
    return vals


def parse_list(value, field):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [v for v in str(value).split(",") if v.strip()]
    try:
        return tuple(float(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(field, f"expected a comma-separated list of numbers, got {value!r}") from None


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    try:
        if path.endswith((".yaml", ".yml")):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except Exception as exc:  # both parsers raise their own error types
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


_ARG = re.compile(r"argument (?:-\w/)?(?:--)?([\w-]+)")
_UNRECOGNIZED = re.compile(r"unrecognized arguments: --?([\w-]+)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        m = _ARG.search(message) or _UNRECOGNIZED.search(message)
        field = m.group(1).replace("-", "_") if m else "arguments"
        raise ConfigError(field, message)


def _common(p):
    p.add_argument("--config", help="JSON or YAML file with option values")
    p.add_argument("--output", help="CSV output path (default: standard output)")
    p.add_argument("--summary", help="JSON summary path (default: <output>.json when --output is set)")


def _problem_args(p):
    p.add_argument("--kind", help="heat, wave, multiterm_heat or multiterm_wave")
    p.add_argument("--operator", help="dirichlet, periodic, hermite or involution:<eps>")
    p.add_argument("--modes", type=int, help="number of retained modes (default 64)")
    p.add_argument("--beta", type=float, help="leading order")
    p.add_argument("--sub-orders", help="lower orders, comma separated and decreasing")
    p.add_argument("--sub-weights", help="weights of the lower orders")
    p.add_argument("--horizon", type=float, help="final time T for multi-term problems")
    p.add_argument("--init", help="mode:<k>, gaussian:<sigma>, polynomial:x(L-x) or a CSV path (x,value)")
    p.add_argument("--init-velocity", help="same forms as --init, or zero (wave kinds)")
    p.add_argument("--tail-tol", type=float, help="largest l2 tail allowed for the initial data")
    p.add_argument("--times", help="logspace(a,b,n), linspace(a,b,n) or a list")
    p.add_argument("--deltas", help="Sobolev indices to report")
    p.add_argument("--bounds", help="estimate ids to evaluate, comma separated")


def build_parser():
    parser = _Parser(prog="fracspec", description="Mittag-Leffler spectral solvers")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    p = sub.add_parser("ml-eval", help="evaluate E_{alpha,rho}(z)")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--z", help="one value or a comma list / linspace(...)")
    for name in ("solve", "decay-study"):
        p = sub.add_parser(name)
        _common(p)
        _problem_args(p)
    p = sub.add_parser("oracle-compare", help="closed form against the direct time stepper")
    _common(p)
    _problem_args(p)
    p.add_argument("--steps", type=int, help="time steps M (default 4096)")
    p.add_argument("--grading", type=float, help="mesh grading exponent (default from beta)")
    p = sub.add_parser("lplq-study", help="L^p-L^q decay exponent on the line")
    _common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--times")
    p.add_argument("--data", help="critical[:excess] or gaussian:<sigma>")
    p.add_argument("--box", type=float, help="box half-width X")
    p.add_argument("--points", type=int, help="grid points M (power of two)")
    p.add_argument("--power", type=float, help="multiplier exponent a in |xi|^(2a)")
    return parser


DEFAULTS = {
    "rho": 1.0, "operator": "dirichlet", "modes": spectral_operator.DEFAULT_N, "sub_orders": "",
    "sub_weights": "", "horizon": evolution.DEFAULT_HORIZON, "init": "mode:1", "init_velocity": "zero",
    "tail_tol": spectral_operator.TAIL_TOL, "deltas": "0", "bounds": "", "steps": 4096,
    "p": 4.0 / 3.0, "q": 4.0, "data": "critical", "box": 200.0, "points": 2 ** 14, "power": 1.0,
}


def merge(ns):
    """Command-line values over config-file values over defaults."""
    cfg = load_config(ns.config) if ns.config else {}
    known = set(vars(ns)) - {"command", "config"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(unknown[0], f"unknown option in config file (command {ns.command})")
    out = {}
    for key in sorted(known):
        v = getattr(ns, key)
        if v is None:
            v = cfg.get(key, DEFAULTS.get(key))
        out[key] = v
    return out


def _need(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigError(k, "required")


def _num(cfg, key, kind=float):
    try:
        return kind(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {cfg[key]!r}") from None


# ---------------------------------------------------------- initial data

def initial_coefficients(op, spec, field, tail_tol):
    spec = str(spec).strip()
    if spec == "zero":
        return spectral_operator.SpectralCoefficients(np.zeros(op.size), op.label)
    kind, _, arg = spec.partition(":")
    a, b = op.domain
    if kind == "mode":
        try:
            k = int(arg)
        except ValueError:
            raise ConfigError(field, f"bad mode index in {spec!r}") from None
        if not 1 <= k <= op.size:
            raise ConfigError(field, f"mode index must lie in 1..{op.size}, got {k}")
        v = np.zeros(op.size)
        v[k - 1] = 1.0
        return spectral_operator.SpectralCoefficients(v, op.label)
    if kind == "gaussian":
        try:
            sigma = float(arg) if arg else 1.0
        except ValueError:
            raise ConfigError(field, f"bad width in {spec!r}") from None
        if not sigma > 0:
            raise ConfigError(field, "Gaussian width must be positive")
        mid = 0.5 * (a + b)
        f = lambda x: np.exp(-((x - mid) ** 2) / (2.0 * sigma * sigma))
    elif kind == "polynomial":
        if arg.replace(" ", "") not in ("", "x(L-x)", "x(L−x)"):
            raise ConfigError(field, f"only polynomial:x(L-x) is available, got {spec!r}")
        f = lambda x: (x - a) * (b - x)
    elif os.path.exists(spec):
        try:
            data = np.loadtxt(spec, delimiter=",", ndmin=2, comments="#")
        except ValueError:
            raise ConfigError(field, f"{spec} is not a two-column numeric CSV (x,value)") from None
        if data.shape[1] != 2:
            raise ConfigError(field, f"{spec} must have two columns (x,value)")
        xs, ys = data[:, 0], data[:, 1]
        f = lambda x: np.interp(x, xs, ys, left=0.0, right=0.0)
    else:
        raise ConfigError(field, f"unknown initial data {spec!r}")
    c = spectral_operator.analyze(op, f)
    tail = spectral_operator.representation_tail(op, f, c)
    if tail > tail_tol:
        raise ParameterError(field, f"{op.size} modes leave an l2 tail of {tail:.3g} > {tail_tol:g}; "
                                    "raise --modes or --tail-tol")
    return c


def build_problem(cfg):
    _need(cfg, "kind", "beta")
    kind = str(cfg["kind"])
    if kind not in evolution.KINDS:
        raise ConfigError("kind", f"expected one of {', '.join(evolution.KINDS)}, got {kind!r}")
    op = spectral_operator.by_name(cfg["operator"], _num(cfg, "modes", int))
    tol = _num(cfg, "tail_tol")
    w0 = initial_coefficients(op, cfg["init"], "init", tol)
    w1 = None
    if kind in ("wave", "multiterm_wave"):
        w1 = initial_coefficients(op, cfg["init_velocity"], "init_velocity", tol)
    problem = evolution.EvolutionProblem(kind, _num(cfg, "beta"), w0, w1,
                                         parse_list(cfg["sub_orders"], "sub_orders"),
                                         parse_list(cfg["sub_weights"], "sub_weights"),
                                         _num(cfg, "horizon"))
    return op, problem


def _bounds(cfg, op, problem):
    ids = [b.strip() for b in str(cfg["bounds"] or "").split(",") if b.strip()]
    for b in ids:
        if b not in evolution.ESTIMATES:
            raise ConfigError("bounds", f"unknown estimate id {b!r}")
    return ids


def default_bounds(op, problem):
    base = {"heat": evolution.HEAT_BOUNDS, "wave": evolution.WAVE_BOUNDS,
            "multiterm_heat": evolution.HEAT_BOUNDS, "multiterm_wave": evolution.WAVE_BOUNDS}[problem.kind]
    if problem.kind.startswith("multiterm"):
        base = tuple("multi-" + b for b in base)
    return [b for b in base if not (b in evolution.GAPPED and op.zero_in_spectrum)]


# ------------------------------------------------------------- commands

def cmd_ml_eval(cfg):
    _need(cfg, "alpha", "z")
    zs = parse_times(cfg["z"], "z")
    alpha, rho = _num(cfg, "alpha"), _num(cfg, "rho")
    rows = []
    for z in zs:
        r = ml_two(alpha, rho, float(z))
        rows.append([z, r.value, r.est_abs_error])
    return ["z", "value", "est_abs_error"], rows, {}


def _problem_table(op, problem, snaps, cfg, bounds):
    deltas = parse_list(cfg["deltas"], "deltas") or (0.0,)
    dn = evolution.DataNorms.from_problem(op, problem)
    header = ["t", "l2_norm"] + [f"sobolev_{fmt(d)}" for d in deltas]
    header += [f"bound_{b}" for b in bounds] + [f"ratio_{b}" for b in bounds]
    rows = []
    d0 = deltas[0]
    for s in snaps:
        row = [s.t, s.l2_norm] + [s.sobolev_norms[float(d)] for d in deltas]
        bvals = [evolution.decay_bound(b, op, d0, dn, s.t) for b in bounds]
        n = s.sobolev_norms[float(d0)]
        ratios = [0.0 if (math.isinf(v) or n == 0) else (math.inf if v == 0 else n / v) for v in bvals]
        rows.append(row + bvals + ratios)
    return header, rows, deltas, dn


def _problem_times(cfg, problem, default):
    times = parse_times(cfg["times"])
    return default if times is None else times


def cmd_solve(cfg):
    op, problem = build_problem(cfg)
    default = evolution.standard_times(problem.kind, problem.horizon)
    times = _problem_times(cfg, problem, default)
    deltas = parse_list(cfg["deltas"], "deltas") or (0.0,)
    snaps = evolution.solve(op, problem, times, deltas)
    bounds = _bounds(cfg, op, problem)
    header, rows, _, _ = _problem_table(op, problem, snaps, cfg, bounds)
    return header, rows, {}


def cmd_decay_study(cfg):
    op, problem = build_problem(cfg)
    times = _problem_times(cfg, problem, evolution.standard_times(problem.kind, problem.horizon))
    deltas = parse_list(cfg["deltas"], "deltas") or (0.0,)
    snaps = evolution.solve(op, problem, times, deltas)
    bounds = _bounds(cfg, op, problem) or default_bounds(op, problem)
    header, rows, deltas, dn = _problem_table(op, problem, snaps, cfg, bounds)
    extra = {"sup_ratio": {}}
    for b in bounds:
        res = evolution.verify_decay(snaps, b, deltas[0], dn, op)
        extra["sup_ratio"][b] = res.bound_constant_estimate
        extra["fitted_slope"] = res.fitted_slope
        extra["slope_stderr"] = res.slope_stderr
        extra.setdefault("bound_slopes", {})[b] = res.theorem_bound_slope
    return header, rows, extra


def cmd_oracle_compare(cfg):
    op, problem = build_problem(cfg)
    M = _num(cfg, "steps", int)
    r = caputo_oracle.default_grading(problem.beta) if cfg.get("grading") is None else _num(cfg, "grading")
    T = problem.horizon if problem.kind.startswith("multiterm") else 2.0
    if cfg["times"] is not None:
        T = float(parse_times(cfg["times"]).max())
    grid = caputo_oracle.TimeGrid.graded(T, M, r)
    snaps = evolution.solve(op, problem, grid.nodes)
    closed = np.array([s.coefficients.values for s in snaps])
    orders = (problem.beta,) + problem.sub_orders
    weights = (1.0,) + problem.sub_weights
    active = [k for k in range(op.size)
              if problem.w0.values[k] or (problem.w1 is not None and problem.w1.values[k])]
    err = np.zeros(grid.nodes.size)
    for k in active:
        u1 = None if problem.w1 is None else float(problem.w1.values[k])
        fode = caputo_oracle.ScalarFODE(orders, weights, float(op.eigenvalues[k]),
                                        float(problem.w0.values[k]), u1)
        u = caputo_oracle.solve_scalar_fode(fode, grid)
        err = np.maximum(err, np.abs(u - closed[:, k]))
    rows = [[t, e] for t, e in zip(grid.nodes, err)]
    return ["t", "max_abs_error"], rows, {"max_error": float(err.max()), "modes_compared": len(active)}


def cmd_lplq_study(cfg):
    _need(cfg, "alpha")
    times = parse_times(cfg["times"])
    kw = {} if times is None else {"times": tuple(times)}
    study = euclidean_multiplier.LpLqStudy(_num(cfg, "alpha"), _num(cfg, "p"), _num(cfg, "q"),
                                           data=str(cfg["data"]), X=_num(cfg, "box"),
                                           M=_num(cfg, "points", int), power=_num(cfg, "power"), **kw)
    res = euclidean_multiplier.run_lplq_study(study)
    rows = [[t, n, b, n / b] for t, n, b in zip(res.times, res.norms, res.bounds)]
    extra = {"fitted_slope": res.fitted_slope, "slope_stderr": res.slope_stderr,
             "sup_ratio": res.bound_constant_estimate, "predicted_slope": res.theorem_bound_slope}
    return ["t", "lq_norm", "bound_value", "ratio"], rows, extra


COMMANDS = {"ml-eval": cmd_ml_eval, "solve": cmd_solve, "decay-study": cmd_decay_study,
            "oracle-compare": cmd_oracle_compare, "lplq-study": cmd_lplq_study}


# ------------------------------------------------------------------ I/O

def render_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_csv(path_or_text):
    """Parse a CSV written by this tool: returns (header, float array)."""
    if os.path.exists(str(path_or_text)):
        with open(path_or_text) as fh:
            text = fh.read()
    else:
        text = str(path_or_text)
    lines = list(csv.reader(io.StringIO(text)))
    if not lines:
        raise ValueError("empty CSV")
    header = lines[0]
    data = np.array([[float(v) for v in row] for row in lines[1:]], dtype=float).reshape(-1, len(header))
    return header, data


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def run(argv=None, stdout=None, stderr=None):
    """Run one command; returns the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    start = time.perf_counter()
    try:
        ns = build_parser().parse_args(argv)
        if ns.command is None:
            raise ConfigError("command", f"choose one of {', '.join(COMMANDS)}")
        cfg = merge(ns)
        header, rows, extra = COMMANDS[ns.command](cfg)
    except (ConfigError, ParameterError) as exc:
        detail = str(exc).split(": ", 1)[-1]
        print(f"fracspec: invalid configuration, field '{exc.field}': {detail}", file=stderr)
        return 1
    except (NumericalError, OverflowError, ArithmeticError) as exc:
        print(f"fracspec: numerical failure ({type(exc).__name__}): {exc}", file=stderr)
        return 2
    except FracSpecError as exc:
        print(f"fracspec: {type(exc).__name__}: {exc}", file=stderr)
        return 1
    text = render_csv(header, rows)
    if ns.command == "ml-eval" and len(rows) == 1 and not cfg.get("output"):
        print(fmt(rows[0][1]), file=stdout)
    elif cfg.get("output"):
        with open(cfg["output"], "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    summary_path = cfg.get("summary") or (cfg["output"] + ".json" if cfg.get("output") else None)
    if summary_path:
        params = {k: v for k, v in cfg.items() if k not in ("output", "summary", "config")}
        summary = {"command": ns.command, "parameters": params}
        summary.update(extra)
        summary["runtime_seconds"] = time.perf_counter() - start
        with open(summary_path, "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
