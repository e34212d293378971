"""Command line driver: sweeps to CSV/JSON tables plus a replayable manifest.

Exit codes: 0 success, 1 invariant violation, 2 usage error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import bounds, montecarlo, multipliers, radial
from .multipliers import SymbolPair
from .numerics import DEFAULT_SPEC, ConvergenceError, DomainError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NONCONVERGENCE = 0, 1, 2, 3
SEED_ENV = "HDMAX_SEED"
DEFAULT_DIMS = "3,10,30,100,300,1000"

TOLERANCES = {
    "quad_abs_tol": DEFAULT_SPEC.abs_tol,
    "quad_rel_tol": DEFAULT_SPEC.rel_tol,
    "radial_abs_tol": radial.RADIAL_SPEC.abs_tol,
    "radial_rel_tol": radial.RADIAL_SPEC.rel_tol,
    "violation_tol": bounds.VIOLATION_TOL,
    "sup_bracket": 1e-4,
    "mc_sigmas": 3.0,
    "ratio_floor": 1e-9,
    "spd_unit_tol": 5e-4,
}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int
    tool_version: str = __version__
    wall_time_ms: int = 0
    tolerance_set: dict = field(default_factory=lambda: dict(TOLERANCES))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        data = json.loads(text)
        return cls(**data)


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    violated: bool = False


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _json_value(x):
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        recs = [{c: _json_value(v) for c, v in zip(table.columns, row)} for row in table.rows]
        return json.dumps(recs, indent=1) + "\n"
    out = io.StringIO()
    out.write(",".join(table.columns) + "\n")
    for row in table.rows:
        out.write(",".join(_cell(v) for v in row) + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------

def parse_int_list(text: str, minimum: int | None = None) -> list[int]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"not an integer list: {text!r}") from exc
    if not vals:
        raise UsageError("empty dimension list")
    if minimum is not None and min(vals) < minimum:
        raise UsageError(f"every d must be >= {minimum}, got {min(vals)}")
    return vals


def parse_float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"not a number list: {text!r}") from exc
    if not vals:
        raise UsageError("empty value list")
    return vals


def parse_r_spec(text: str) -> list[float]:
    """``a:step:b`` (inclusive), a comma list, or a single value."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range must be start:step:stop, got {text!r}")
        try:
            a, h, b = (float(x) for x in parts)
        except ValueError as exc:
            raise UsageError(f"bad range {text!r}") from exc
        if not (h > 0 and b >= a):
            raise UsageError(f"range needs step > 0 and stop >= start, got {text!r}")
        n = int(math.floor((b - a) / h + 1e-9)) + 1
        vals = [round(a + i * h, 12) for i in range(n)]
    else:
        vals = parse_float_list(text)
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise UsageError("radii must be finite and >= 0")
    return vals


def _pairs(text: str) -> list[SymbolPair]:
    try:
        return [SymbolPair(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"unknown pair in {text!r}") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

SYMBOL_NAMES = ("mu", "m", "g")


def cmd_symbols(args) -> Table:
    dims = parse_int_list(args.d, minimum=3)
    rs = parse_r_spec(args.r)
    which = [w.strip() for w in args.which.split(",") if w.strip()]
    names = []
    for w in which:
        if w == "differences":
            names.extend(p.value for p in SymbolPair)
        elif w in SYMBOL_NAMES:
            names.append(w)
        else:
            raise UsageError(f"unknown symbol {w!r}")
    names = sorted(set(names))
    table = Table(["d", "r", "symbol", "value", "error_estimate", "method"])
    for d in sorted(set(dims)):
        for r in sorted(set(rs)):
            for name in names:
                table.rows.append([d, r, name, *_symbol_value(name, r, d)])
    return table


def _symbol_value(name: str, r: float, d: int):
    if name == "mu":
        pt = multipliers.mu(r, d)
    elif name == "m":
        pt = multipliers.ball_multiplier(r, d)
    elif name == "g":
        pt = multipliers.gaussian_multiplier(r, d)
    else:
        left, right = name.split("_minus_")
        a = _symbol_value(left, r, d)
        b = _symbol_value(right, r, d)
        method = a[2] if a[2] == b[2] else multipliers.Method.QUADRATURE.value
        return a[0] - b[0], a[1] + b[1], method
    return pt.value, pt.error_estimate, pt.method.value


BOUND_COLUMNS = ["d", "kind", "name", "pair", "value", "argmax_r", "declared_constant",
                 "violated", "grid_min", "grid_max", "grid_count", "skipped"]


def _report_row(rep: bounds.BoundReport) -> list:
    g = rep.r_grid
    return [rep.d, "report", rep.inequality_id.value, rep.pair.value if rep.pair else "", rep.fitted_constant,
            rep.argmax_r, rep.declared_constant, rep.violated_at_threshold, g.r_min, g.r_max, g.count, rep.skipped]


def cmd_bounds(args) -> Table:
    dims = sorted(set(parse_int_list(args.d, minimum=3)))
    pairs = _pairs(args.pairs)
    table = Table(list(BOUND_COLUMNS))
    sups = {p: [] for p in pairs}
    for d in dims:
        for rep in bounds.check_mu_estimates(d):
            table.rows.append(_report_row(rep))
            table.violated |= rep.violated_at_threshold
        for pair in pairs:
            for rep in bounds.check_difference_estimates(pair, d):
                table.rows.append(_report_row(rep))
            sup = bounds.locate_sup(pair, d)
            sups[pair].append((d, sup.value))
            table.rows.append([d, "sup", "sup_norm", pair.value, sup.value, sup.argmax_r, None, False,
                               None, None, None, 0])
            table.rows.append([d, "sup", "tail_bound", pair.value, sup.tail_bound, bounds.r_max(d), None, False,
                               None, None, None, 0])
            if args.certificate:
                cert = bounds.dyadic_maximal_certificate(pair, d)
                table.rows.append([d, "certificate", "dyadic", pair.value, cert.value, None, None, False,
                                   None, None, None, 0])
                table.rows.append([d, "certificate", "K", pair.value, cert.K, None, None, False,
                                   None, None, None, 0])
        if args.osc:
            table.rows.append(_report_row(bounds.check_oscillatory_core(d)))
    if args.fit:
        for pair in pairs:
            pts = [(d, s) for d, s in sups[pair] if d >= 10]
            if len(pts) < 4:
                raise UsageError("--fit needs at least four dimensions >= 10")
            fit = bounds.fit_decay(*zip(*pts))
            for name, val in (("slope", fit.slope), ("intercept", fit.intercept), ("residual", fit.residual)):
                table.rows.append([None, "fit", name, pair.value, val, None, None, False, None, None, None, 0])
    return table


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from exc


MC_COLUMNS = ["quantity", "d", "r", "n", "seed", "mean", "stderr", "reference", "within_band"]


def cmd_mc(args) -> Table:
    seed = args.seed
    k = TOLERANCES["mc_sigmas"]
    if args.mc_command == "chisq":
        table = Table(["d", "alpha", "window", "n", "seed", "frequency", "stderr", "threshold", "exact",
                       "meets_threshold"])
        for d in sorted(set(parse_int_list(args.d, minimum=3))):
            est = montecarlo.chi_square_concentration(d, args.alpha, args.n, seed, args.window)
            thr = montecarlo.concentration_threshold(d, args.alpha)
            exact = montecarlo.exact_window_probability(d, args.alpha, args.window)
            ok = est.at_least(thr, k)
            table.violated |= not ok
            table.rows.append([d, args.alpha, args.window, est.n_samples, seed, est.mean, est.stderr, thr, exact, ok])
        return table
    table = Table(list(MC_COLUMNS))
    for d in sorted(set(parse_int_list(args.d, minimum=3))):
        for r in sorted(set(parse_r_spec(args.r))):
            if args.mc_command == "sphere":
                est = montecarlo.mc_sphere_symbol(r, d, args.n, seed)
                ref = multipliers.mu(r, d).value
            else:
                est = montecarlo.mc_gaussian_symbol(r, d, args.n, seed)
                ref = multipliers.gaussian_multiplier(r, d).value
            table.rows.append([args.mc_command, d, r, est.n_samples, seed, est.mean, est.stderr, ref,
                               est.agrees_with(ref, k)])
    return table


RATIO_COLUMNS = ["input_id", "p", "d", "ratio", "ratio_p_minus_one", "paper_bound", "bound_kind", "respects_bound"]


def _ratio_row(rep: radial.RadialRatioReport) -> tuple[list, bool]:
    ok = rep.respects_bound() and rep.ratio >= 1.0 - TOLERANCES["ratio_floor"]
    return [rep.input_id.value, rep.p.p, rep.d, rep.ratio, rep.excess, rep.paper_bound,
            rep.bound_kind.value, rep.respects_bound()], ok


def cmd_radial(args) -> Table:
    sub = args.radial_command
    if sub == "constants":
        c = radial.compute_constants()
        table = Table(["name", "value"])
        table.rows += [["c_infimum", c.c_infimum], ["p_star", c.p_star], ["x1_root", c.x1_root],
                       ["h_infimum", c.h_infimum], ["h_argmin", c.h_argmin]]
        table.rows += [[f"c_sharp[{p:g}]", v] for p, v in sorted(c.c_sharp_values.items())]
        table.violated = not (0.4 < c.c_infimum <= 1.0 and 0.198 < c.x1_root < 0.2 and c.h_infimum > -0.415)
        return table
    ps = parse_float_list(args.p)
    if sub == "homog":
        table = Table(["p", "value", "paper_bound", "meets_bound"])
        for p in sorted(set(ps)):
            val = radial.homogeneous_lower_bound_1d(p)
            bound = radial.homogeneous_1d_paper_bound(p)
            table.rows.append([p, val, bound, val >= bound])
            table.violated |= val < bound
        return table
    if sub == "gauss1d":
        table = Table(list(RATIO_COLUMNS))
        for p in sorted(set(ps)):
            row, ok = _ratio_row(radial.gauss_max_gaussian_ratio_1d(p))
            table.rows.append(row)
            table.violated |= not ok
        return table
    dims = sorted(set(parse_int_list(args.d, minimum=1 if sub == "gaussdd" else 3)))
    if sub == "spd":
        table = Table(["p", "d", "s", "argmax_r", "p_ge_d_over_d_minus_2", "consistent"])
        for d in dims:
            for p in sorted(set(ps)):
                s, r = radial.spd_eigenvalue(p, d)
                superharmonic = p >= d / (d - 2.0)
                tol = TOLERANCES["spd_unit_tol"]
                ok = s >= 1.0 - tol and (abs(s - 1.0) <= tol) == superharmonic
                table.rows.append([p, d, s, r, superharmonic, ok])
                table.violated |= not ok
        return table
    table = Table(list(RATIO_COLUMNS) + (["v"] if sub == "gaussdd" else []))
    for d in dims:
        for p in sorted(set(ps)):
            if sub == "gaussdd":
                rep = radial.gauss_max_gaussian_ratio_d(p, d)
                row, ok = _ratio_row(rep)
                row.append(rep.aux["v"])
            else:
                row, ok = _ratio_row(radial.spherical_indicator_ratio(p, d))
            table.rows.append(row)
            table.violated |= not ok
    return table


# ---------------------------------------------------------------------------
# parser and driver
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed_type(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _output_options(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write the table here (default: stdout)")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json when --out is given)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


OUTPUT_KEYS = {"out", "manifest", "func", "command", "mc_command", "radial_command"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hdmax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("symbols", help="tabulate mu, m, g and their differences")
    p.add_argument("--d", required=True, help="comma-separated dimensions")
    p.add_argument("--r", required=True, help="start:step:stop or comma list")
    p.add_argument("--which", default="mu,m,g", help="subset of mu,m,g,differences")
    _output_options(p)
    p.set_defaults(func=cmd_symbols)

    p = sub.add_parser("bounds", help="pointwise estimates, sup-norms and decay fits")
    p.add_argument("--d", default=DEFAULT_DIMS)
    p.add_argument("--pairs", default=",".join(x.value for x in SymbolPair))
    p.add_argument("--fit", action="store_true", help="append decay fits over d >= 10")
    p.add_argument("--certificate", action="store_true", help="append dyadic certificates")
    p.add_argument("--osc", action="store_true", help="append the oscillatory core report")
    _output_options(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("mc", help="Monte Carlo checks")
    mc_sub = p.add_subparsers(dest="mc_command", required=True, parser_class=_Parser)
    for name in ("sphere", "gauss"):
        q = mc_sub.add_parser(name)
        q.add_argument("--r", required=True)
        q.add_argument("--d", required=True)
        q.add_argument("--n", type=int, default=10 ** 6)
        q.add_argument("--seed", type=_seed_type)
        _output_options(q)
        q.set_defaults(func=cmd_mc)
    q = mc_sub.add_parser("chisq")
    q.add_argument("--d", required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--window", choices=("paper", "symmetric", "full"), default="paper")
    q.add_argument("--n", type=int, default=10 ** 6)
    q.add_argument("--seed", type=_seed_type)
    _output_options(q)
    q.set_defaults(func=cmd_mc)

    p = sub.add_parser("radial", help="radial test inputs and constants")
    r_sub = p.add_subparsers(dest="radial_command", required=True, parser_class=_Parser)
    q = r_sub.add_parser("constants")
    _output_options(q)
    q.set_defaults(func=cmd_radial)
    for name in ("gauss1d", "homog"):
        q = r_sub.add_parser(name)
        q.add_argument("--p", required=True)
        _output_options(q)
        q.set_defaults(func=cmd_radial)
    for name in ("gaussdd", "indicator", "spd"):
        q = r_sub.add_parser(name)
        q.add_argument("--p", required=True)
        q.add_argument("--d", required=True)
        _output_options(q)
        q.set_defaults(func=cmd_radial)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest_path")
    p.add_argument("--out", help="write the table here (default: stdout)")
    p.set_defaults(func=None)
    return parser


def _command_name(args) -> str:
    parts = [args.command]
    for key in ("mc_command", "radial_command"):
        if getattr(args, key, None):
            parts.append(getattr(args, key))
    return " ".join(parts)


def manifest_argv(man: RunManifest) -> list[str]:
    argv = man.command.split()
    for key, val in sorted(man.parameters.items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if val:
                argv.append(flag)
        elif val is not None:
            argv += [flag, str(val)]
    return argv


def _run(argv, out_override=None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        with open(args.manifest_path) as fh:
            man = RunManifest.from_json(fh.read())
        if man.tool_version != __version__:
            raise UsageError(f"manifest was written by version {man.tool_version}, this is {__version__}")
        if man.tolerance_set != TOLERANCES:
            raise UsageError("manifest tolerance set differs from this build")
        return _run(manifest_argv(man), out_override=args.out, stdout=stdout)
    if hasattr(args, "seed"):
        args.seed = _seed(args)
    params = {k: v for k, v in vars(args).items() if k not in OUTPUT_KEYS}
    start = time.perf_counter()
    table = args.func(args)
    elapsed = int(round(1000 * (time.perf_counter() - start)))
    text = render(table, args.format)
    out = out_override if out_override is not None else args.out
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    man_path = getattr(args, "manifest", None) or (out + ".manifest.json" if out else None)
    if man_path:
        man = RunManifest(_command_name(args), params, int(getattr(args, "seed", 0) or 0), wall_time_ms=elapsed)
        with open(man_path, "w") as fh:
            fh.write(man.to_json())
    return EXIT_VIOLATION if table.violated else EXIT_OK


def main(argv=None) -> int:
    try:
        return _run(sys.argv[1:] if argv is None else argv)
    except (UsageError, DomainError) as exc:
        print(f"hdmax: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, radial.UnimodalityError) as exc:
        print(f"hdmax: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
