"""Command-line front end: ``ctables <subcommand> ...``.

Exit codes: 0 ok, 1 invalid input, 2 resource limit, 3 no convergence,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import asymptotics as asy
from .checks import Config, Check, _timed, suite_checks
from .errors import (
    CTablesError, DomainError, ExactOverflowPolicy, InfeasibleBlock, InvalidMargins,
    NoConvergence, ResourceLimit,
)
from .exact_count import DEFAULT_STATE_LIMIT, count_tables
from .heuristic import correlation_ratio, independence_heuristic, log_heuristic_mp
from .margins import BarvinokParams, MarginPair, barvinok_margins, parse_int_list, validate
from .sweeps import critical_index, figure_rows, kink_location, scan, spike_location
from .typical import barvinok_bounds, solve_block_typical, solve_typical

EXIT_OK, EXIT_INVALID, EXIT_RESOURCE, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3, 4
SCHEMA_DIR = Path(__file__).parent / "schemas"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad usage is invalid input (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# --- small parsing helpers ---------------------------------------------------

def _int_list(text):
    try:
        return parse_int_list(text)
    except InvalidMargins as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}")


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def read_margins_file(path) -> MarginPair:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise InvalidMargins(f"{path}: empty margins file")
        return MarginPair.from_csv(lines[0])
    if not isinstance(data, dict):
        raise InvalidMargins(f"{path}: expected a JSON object with rows and cols")
    return MarginPair.from_dict(data)


def _barvinok(args) -> BarvinokParams | None:
    given = [v is not None for v in (args.n, args.B, args.C)]
    if not any(given):
        return None
    if not all(given):
        raise UsageError("Barvinok margins need --n, --B and --C (and optionally --delta)")
    return BarvinokParams(args.n, args.delta, args.B, args.C)


def get_margins(args) -> tuple[MarginPair, BarvinokParams | None]:
    params = _barvinok(args) if hasattr(args, "B") else None
    sources = sum([args.margins_file is not None, args.rows is not None or args.cols is not None,
                   params is not None])
    if sources != 1:
        raise UsageError("give exactly one of --rows/--cols, --margins-file or Barvinok parameters")
    if params is not None:
        return barvinok_margins(params), params
    if args.margins_file is not None:
        return read_margins_file(args.margins_file), None
    if args.rows is None or args.cols is None:
        raise UsageError("--rows and --cols go together")
    return validate(args.rows, args.cols), None


# --- output --------------------------------------------------------------------

def _round(obj, digits):
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: _round(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, digits) for v in obj]
    return obj


def _jsonable(obj):
    # JSON has no inf/nan; emit null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def fmt(x, digits) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{digits}g}"
    return str(x)


def csv_text(header, rows, digits) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in rows:
        w.writerow([fmt(v, digits) for v in row])
    return buf.getvalue()


def json_text(payload, digits) -> str:
    if digits != 17:
        payload = _round(payload, digits)
    return json.dumps(_jsonable(payload), indent=2, ensure_ascii=False) + "\n"


def emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _log_base(args):
    return math.log(2) if getattr(args, "log2", False) else 1.0


# --- subcommands -------------------------------------------------------------

def cmd_count(args) -> int:
    M, _ = get_margins(args)
    tc = count_tables(M, args.state_limit)
    base = _log_base(args)
    logv = tc.log() / base
    if args.format == "json":
        payload = {"rows": list(M.rows), "cols": list(M.cols), "count": str(tc.value),
                   "sci": tc.sci(6), "log": logv, "log_base": "2" if args.log2 else "e"}
        emit(args, json_text(payload, args.digits))
    elif args.format == "csv":
        emit(args, csv_text(["count", "sci", "log"], [[tc.value, tc.sci(6), logv]], args.digits))
    else:
        name = "log2" if args.log2 else "log"
        emit(args, f"{tc.value}\n{tc.sci(6)}\n{name} {fmt(logv, args.digits)}\n")
    return EXIT_OK


def cmd_heuristic(args) -> int:
    M, params = get_margins(args)
    base = _log_base(args)
    if args.log_T == "none":
        h = independence_heuristic(M, mode="exact" if args.exact else "log")
        payload = {"log_G": h.log_value / base}
        if h.exact is not None:
            payload["G_exact"] = f"{h.exact.numerator}/{h.exact.denominator}"
    else:
        if args.log_T == "exact":
            rep = correlation_ratio(M, params=params)
        else:
            g = (solve_block_typical(params).g_value if params is not None
                 else solve_typical(M, args.tol_margin, args.tol_dual, args.max_iter).g_value)
            rep = correlation_ratio(M, log_T=g, params=params, surrogate=True)
        payload = rep.to_dict()
        for key in ("log_T", "log_G", "log_ratio"):
            payload[key] /= base
    if params is not None:
        # predicted expansion of log G next to its exact value (natural log)
        rep = asy.ih_expansion_prediction(params, as_printed=args.as_printed)
        rep.fill(log_heuristic_mp(M))
        payload["expansion"] = rep.to_dict() | {"as_printed": args.as_printed}
    payload["log_base"] = "2" if args.log2 else "e"
    if args.format == "csv":
        keys = [k for k in ("log_T", "log_G", "log_ratio", "normalized", "source") if k in payload]
        emit(args, csv_text(keys, [[payload[k] for k in keys]], args.digits))
    else:
        emit(args, json_text(payload, args.digits))
    return EXIT_OK


def cmd_typical(args) -> int:
    M, params = get_margins(args)
    solver = args.solver or ("block" if params is not None else "full")
    if solver == "block":
        if params is None:
            raise UsageError("the block solver needs Barvinok parameters --n --delta --B --C")
        res = solve_block_typical(params)
        payload = res.to_dict()
        if args.format == "csv":
            d = payload
            emit(args, csv_text(["z11", "z12", "z22", "g_value", "residual", "iterations"],
                                [[d["z_blocks"]["z11"], d["z_blocks"]["z12"], d["z_blocks"]["z22"],
                                  d["g_value"], d["residual"], d["iterations"]]], args.digits))
            return EXIT_OK
    else:
        res = solve_typical(M, args.tol_margin, args.tol_dual, args.max_iter)
        payload = res.to_dict()
        if args.format == "csv":
            # matrix dump, one table row per line
            emit(args, csv_text(None, res.Z.entries.tolist(), args.digits))
            return EXIT_OK
    payload["solver"] = solver
    emit(args, json_text(payload, args.digits))
    return EXIT_OK


def cmd_bounds(args) -> int:
    M, _ = get_margins(args)
    lower, upper = barvinok_bounds(M, args.gamma, tol_margin=args.tol_margin,
                                   tol_dual=args.tol_dual, max_iter=args.max_iter)
    base = _log_base(args)
    payload = {"lower": lower / base, "upper": upper / base, "gamma": args.gamma,
               "log_base": "2" if args.log2 else "e"}
    if args.format == "csv":
        emit(args, csv_text(["lower", "upper", "gamma"], [[payload["lower"], payload["upper"], args.gamma]],
                            args.digits))
    else:
        emit(args, json_text(payload, args.digits))
    return EXIT_OK


def _check_n_list(ns):
    if not ns:
        raise UsageError("--n-list is empty")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError("--n-list must be strictly increasing")
    if ns[0] < 1:
        raise UsageError("--n-list entries must be positive")


def cmd_scan(args) -> int:
    _check_n_list(args.n_list)
    if args.B_max <= args.B_min:
        raise UsageError("need B-min < B-max")
    rows = scan(args.C, args.delta, args.B_min, args.B_max, args.B_steps, args.n_list,
                solver=args.solver, jobs=args.jobs)
    bc = asy.critical_b(args.C)
    marker = critical_index([r.B for r in rows], args.C)
    if args.format == "csv":
        header = ["B", "lambda", "regime", "bc_marker"] + [f"surrogate_n{n}" for n in args.n_list]
        body = [[r.B, r.lambda_closed_form, r.regime, int(i == marker)]
                + [r.surrogate_normalized.get(n) for n in args.n_list] for i, r in enumerate(rows)]
        emit(args, csv_text(header, body, args.digits))
    else:
        payload = {"C": args.C, "delta": args.delta, "B_c": bc, "n_list": args.n_list, "rows": [
            {"B": r.B, "lambda": r.lambda_closed_form, "regime": r.regime, "bc_marker": i == marker,
             "surrogate": {str(n): v for n, v in r.surrogate_normalized.items()},
             "errors": {str(n): e for n, e in r.errors.items()}}
            for i, r in enumerate(rows)]}
        emit(args, json_text(payload, args.digits))
    return EXIT_OK


def cmd_figure(args) -> int:
    if args.B_max <= args.B_min:
        raise UsageError("need B-min < B-max")
    if not args.C_list or any(not c > 0 for c in args.C_list):
        raise UsageError("--C-list needs positive values")
    rows = figure_rows(args.C_list, args.B_min, args.B_max, args.B_steps)
    if args.format == "csv":
        emit(args, csv_text(["C", "B", "lambda"], rows, args.digits))
        return EXIT_OK
    curves = []
    for C in args.C_list:
        pts = [(B, lam) for c, B, lam in rows if c == float(C)]
        bs, lams = [p[0] for p in pts], [p[1] for p in pts]
        curves.append({"C": float(C), "B_c": asy.critical_b(C), "kink": kink_location(bs, lams),
                       "spike": spike_location(bs, lams)})
    payload = {"rows": [{"C": c, "B": B, "lambda": lam} for c, B, lam in rows], "curves": curves}
    emit(args, json_text(payload, args.digits))
    return EXIT_OK


def _run_check(job):
    suite, cfg, i = job
    name, fn = suite_checks(suite, cfg)[i]
    return _timed(name, fn)


def tap_report(checks: list[Check]) -> str:
    out = [f"1..{len(checks)}"]
    for i, c in enumerate(checks, 1):
        status = "ok" if c.ok else "not ok"
        out.append(f"{status} {i} - {c.name} # {c.detail} ({c.seconds:.2f}s)")
    failed = sum(not c.ok for c in checks)
    out.append(f"# passed {len(checks) - failed}, failed {failed}")
    return "\n".join(out) + "\n"


def cmd_verify(args) -> int:
    cfg = Config(tol_margin=args.tol_margin, tol_dual=args.tol_dual, max_iter=args.max_iter,
                 seed=args.seed, state_limit=args.state_limit)
    jobs = [(args.suite, cfg, i) for i in range(len(suite_checks(args.suite, cfg)))]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            checks = list(pool.map(_run_check, jobs))
    else:
        checks = [_run_check(j) for j in jobs]
    failed = sum(not c.ok for c in checks)
    if args.format == "json":
        payload = {"suite": args.suite, "passed": len(checks) - failed, "failed": failed,
                   "checks": [{"name": c.name, "ok": c.ok, "detail": c.detail, "seconds": c.seconds}
                              for c in checks]}
        emit(args, json_text(payload, args.digits))
    elif args.format == "csv":
        emit(args, csv_text(["name", "ok", "seconds", "detail"],
                            [[c.name, int(c.ok), c.seconds, c.detail] for c in checks], args.digits))
    else:
        emit(args, tap_report(checks))
    return EXIT_VERIFY if failed else EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=None,
                        help="output format (default: json; plain text for count and verify)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--digits", type=int, default=17, help="significant digits for floats")

    margins = argparse.ArgumentParser(add_help=False)
    margins.add_argument("--rows", type=_int_list, help="comma-separated row sums")
    margins.add_argument("--cols", type=_int_list, help="comma-separated column sums")
    margins.add_argument("--margins-file", help="JSON {rows, cols} or one CSV record")

    barvinok = argparse.ArgumentParser(add_help=False)
    barvinok.add_argument("--n", type=int)
    barvinok.add_argument("--delta", type=float, default=0.5)
    barvinok.add_argument("--B", type=_positive)
    barvinok.add_argument("--C", type=_positive)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol-margin", type=_positive, default=1e-10)
    solver.add_argument("--tol-dual", type=_positive, default=1e-8)
    solver.add_argument("--max-iter", type=int, default=10_000)

    log2 = argparse.ArgumentParser(add_help=False)
    log2.add_argument("--log2", action="store_true", help="report logarithms in base 2")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--B-min", type=_positive, default=0.05)
    grid.add_argument("--B-max", type=_positive, default=6.0)
    grid.add_argument("--B-steps", type=int, default=600)

    p = _Parser(prog="ctables", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("count", parents=[common, margins, log2], help="exact number of tables")
    s.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
    s.set_defaults(func=cmd_count)

    s = sub.add_parser("heuristic", parents=[common, margins, barvinok, solver, log2],
                       help="independence heuristic G and log(T/G)")
    s.add_argument("--log-T", choices=["none", "exact", "surrogate"], default="none",
                   help="also report log T, exactly or via g(Z)")
    s.add_argument("--exact", action="store_true", help="also give G as an exact fraction")
    s.add_argument("--as-printed", action="store_true",
                   help="use the single-f(BC) n^(1+delta) coefficient in the log G expansion")
    s.set_defaults(func=cmd_heuristic)

    s = sub.add_parser("typical", parents=[common, margins, barvinok, solver], help="typical table")
    s.add_argument("--solver", choices=["full", "block"], default=None)
    s.set_defaults(func=cmd_typical)

    s = sub.add_parser("bounds", parents=[common, margins, solver, log2],
                       help="lower/upper bounds on log T from g(Z)")
    s.add_argument("--gamma", type=_positive, default=1.0)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("scan", parents=[common, grid], help="phase-transition sweep in B")
    s.add_argument("--C", type=_positive, required=True)
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--n-list", type=_int_list, default=[1000, 10000])
    s.add_argument("--solver", choices=["block", "full"], default="block")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("figure", parents=[common, grid], help="(C, B, lambda) curve data")
    s.add_argument("--C-list", type=_float_list, default=[0.5, 1.0, 2.0])
    s.add_argument("--delta", type=float, default=0.5, help="accepted for symmetry; lambda does not depend on it")
    s.set_defaults(func=cmd_figure)

    s = sub.add_parser("verify", parents=[common, solver], help="run invariant suites")
    s.add_argument("suite", nargs="?", default="all", choices=["all", "counting", "typical", "asymptotics"])
    s.add_argument("--seed", type=int, default=20200101)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code
    if args.format is None and args.command not in ("count", "verify"):
        args.format = "json"
    try:
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
        if not 1 <= args.digits <= 17:
            raise UsageError("--digits must be between 1 and 17")
        return args.func(args)
    except (UsageError, InvalidMargins, DomainError, InfeasibleBlock, ValueError, OSError) as exc:
        code, exc_ = EXIT_INVALID, exc
    except (ResourceLimit, ExactOverflowPolicy) as exc:
        code, exc_ = EXIT_RESOURCE, exc
    except NoConvergence as exc:
        code, exc_ = EXIT_CONVERGENCE, exc
    except CTablesError as exc:
        code, exc_ = EXIT_INVALID, exc
    print(f"ctables {args.command}: {type(exc_).__name__}: {exc_}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
