"""Command-line entry point: ``artifact <group> <command> [options]``.

Exit codes: 0 success, 1 integrity error, 2 parameter error (including a
malformed command line), 3 step cap reached before stabilization.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ..errors import IntegrityError, NotStabilized, ParameterError
from ..parallel import default_threads
from ..sampling import U64, SeededStream, entropy_seed
from .output import (INTERSECTION_HIST, LLN_CONVERGENCE, PHASE_SCAN, ResultTable, RunManifest,
                     dumps, emit_plot_data)

EXIT_OK, EXIT_INTEGRITY, EXIT_PARAMETER, EXIT_NOT_STABILIZED = 0, 1, 2, 3
SEED_ENV = "LL_SEED"


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _list(cast):
    def parse(text: str):
        try:
            return [cast(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a comma-separated list: {text!r}") from None
    parse.__name__ = f"{cast.__name__} list"
    return parse


def parse_params(tokens) -> dict[str, float]:
    """``["alpha=1", "lam=0.5,beta=2"]`` -> {"alpha": 1.0, "lam": 0.5, "beta": 2.0}."""
    out: dict[str, float] = {}
    for token in tokens or []:
        for part in token.split(","):
            if not part.strip():
                continue
            key, sep, val = part.partition("=")
            if not sep:
                raise ParameterError(f"parameter {part!r} is not of the form name=value")
            try:
                out[key.strip()] = float(val)
            except ValueError:
                raise ParameterError(f"parameter {key!r} has a non-numeric value {val!r}") from None
    return out


def _need(params: dict, *names: str) -> list[float]:
    missing = [n for n in names if n not in params]
    if missing:
        raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
    extra = sorted(set(params) - set(names))
    if extra:
        raise ParameterError(f"unexpected parameter(s): {', '.join(extra)}")
    return [params[n] for n in names]


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("output and reproducibility")
    g.add_argument("--seed", type=_u64, help=f"64-bit master seed (default: ${SEED_ENV}, else OS entropy)")
    g.add_argument("--threads", type=_positive_int, default=None,
                   help="worker pool size (default: logical cores); never changes results")
    g.add_argument("--json", action="store_true", help="print manifest and results as JSON on stdout")
    g.add_argument("--csv", metavar="PATH", help="write the result table as RFC-4180 CSV")
    g.add_argument("--plot-data", metavar="PATH", help="write plot-ready columns as CSV")
    g.add_argument("--quiet", action="store_true", help="suppress the human-readable summary")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True, metavar="{arw,bl,lpp}")

    arw = groups.add_parser("arw", help="activated random walk").add_subparsers(dest="command", required=True)
    p = arw.add_parser("stabilize", help="stabilize one Poisson configuration on [-M, M]")
    p.add_argument("--mu", type=float, required=True, help="particle density")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="sleep rate")
    p.add_argument("--p", type=float, default=0.5, help="right-jump probability (default 0.5)")
    p.add_argument("--M", type=int, required=True, help="box radius")
    p.add_argument("--policy", choices=("lowest_active", "round_robin", "uniform"),
                   default="lowest_active", help="label policy (default lowest_active)")
    p.add_argument("--step-cap", type=_positive_int, default=10**7)
    _common(p)
    p.set_defaults(run=cmd_arw_stabilize)

    p = arw.add_parser("scan", help="estimate P(R_0 >= r) over parameter grids")
    p.add_argument("--mu-grid", type=_list(float), required=True, metavar="MU[,MU...]")
    p.add_argument("--lambda-grid", type=_list(float), required=True, metavar="L[,L...]")
    p.add_argument("--M-grid", type=_list(int), required=True, metavar="M[,M...]")
    p.add_argument("--r-grid", type=_list(int), required=True, metavar="R[,R...]")
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--step-cap", type=_positive_int, default=10**7)
    p.add_argument("--window", type=int, default=0,
                   help="exploratory: count max R_x over |x| <= window instead of R_0")
    _common(p)
    p.set_defaults(run=cmd_arw_scan)

    p = arw.add_parser("traps", help="trap certificates with schedule replay")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--K", type=_positive_int, default=None,
                   help="sweep radius (default: chosen from the crossing criterion at --eps)")
    p.add_argument("--eps", type=float, default=0.01, help="target failure rate for choosing K")
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--step-cap", type=_positive_int, default=10**7)
    _common(p)
    p.set_defaults(run=cmd_arw_traps)

    bl = groups.add_parser("bl", help="broken-line flow fields").add_subparsers(dest="command", required=True)
    p = bl.add_parser("decompose", help="split a field into ordered crossing lines")
    p.add_argument("--input", required=True, metavar="FIELD.json")
    p.add_argument("--output", metavar="PATH", help="write the decomposition JSON here")
    _common(p)
    p.set_defaults(run=cmd_bl_decompose)

    for name, helptext in (("sample", "sample a reversible field"),
                           ("intersections", "count line crossings of a lattice line")):
        p = bl.add_parser(name, help=helptext)
        p.add_argument("--family", choices=("geo", "exp"))
        p.add_argument("--params", nargs="+", metavar="NAME=VALUE",
                       help="geo: lam or lam_plus,lam_minus; exp: alpha or alpha_plus,alpha_minus")
        p.add_argument("--N", type=_positive_int)
        p.add_argument("--M", type=_positive_int)
        p.add_argument("--chain", action="store_true",
                       help="geo only: build the field column by column with the reversible kernel")
        p.add_argument("--output", metavar="PATH", help="write the field JSON here")
        if name == "intersections":
            p.add_argument("--input", metavar="FIELD.json", help="use this field instead of sampling")
            p.add_argument("--line", choices=("NE", "SE", "vertical", "horizontal"), required=True)
            p.add_argument("--at", type=int, default=0,
                           help="x - t (NE), x + t (SE), t (vertical) or x (horizontal)")
            p.add_argument("--top", type=int, default=4, help="largest count tabulated (default 4)")
        _common(p)
        p.set_defaults(run=cmd_bl_sample if name == "sample" else cmd_bl_intersections)

    lpp = groups.add_parser("lpp", help="last-passage percolation").add_subparsers(dest="command", required=True)
    p = lpp.add_parser("solve", help="last-passage value and path of one instance")
    p.add_argument("--family", choices=("geo", "exp"))
    p.add_argument("--params", nargs="+", metavar="NAME=VALUE", help="exp: alpha; geo: lam")
    p.add_argument("--N", type=_positive_int)
    p.add_argument("--M", type=_positive_int)
    p.add_argument("--method", choices=("dp", "bl", "both"), default="both")
    p.add_argument("--input", metavar="INSTANCE.json", help="solve this instance instead of sampling")
    p.add_argument("--export", metavar="PATH", help="write the instance JSON here")
    _common(p)
    p.set_defaults(run=cmd_lpp_solve)

    p = lpp.add_parser("lln", help="G(N, floor(beta N)) / N against its limit")
    p.add_argument("--family", choices=("geo", "exp"), required=True)
    p.add_argument("--params", nargs="+", metavar="NAME=VALUE", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--N-list", type=_list(int), required=True, metavar="N[,N...]")
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--delta", type=float, default=0.1, help="tail threshold for |G/N - limit|")
    _common(p)
    p.set_defaults(run=cmd_lpp_lln)
    return parser


# --- subcommands: each returns (result dict, ResultTable, plot kind or None) ---------------

def cmd_arw_stabilize(args, stream: SeededStream):
    from ..arw import LabelPolicy, RandomStacks, init_state, stabilize

    state = init_state(args.mu, args.M, stream.spawn(0))
    stacks = RandomStacks(stream.spawn(1), args.lam, args.p)
    policy = {"lowest_active": LabelPolicy.lowest_active(), "round_robin": LabelPolicy.round_robin(),
              "uniform": LabelPolicy.uniform(stream.spawn(2))}[args.policy]
    final, steps = stabilize(state, stacks, policy, args.step_cap)
    sites = sorted(set(final.j) | set(final.R) | set(final.occupation()))
    occ = final.occupation()
    rows = [{"x": x, "j": final.jx(x), "R": final.Rx(x), "occupation": occ.get(x, 0)} for x in sites]
    table = ResultTable.from_records(rows, {"x": "int", "j": "int", "R": "int", "occupation": "int"},
                                     summary={"m": final.m, "steps": steps, "R0": final.Rx(0)})
    result = {"m": final.m, "steps": steps, "R0": final.Rx(0), "initial": state.to_dict(),
              "final": final.to_dict()}
    return result, table, None, "initial state: key (0); stacks: key (1, zigzag(x)); uniform labels: key (2)"


def cmd_arw_scan(args, stream: SeededStream):
    from ..arw import SCAN_COLUMNS, fixation_scan

    tab = fixation_scan(args.mu_grid, args.lambda_grid, args.M_grid, args.r_grid, args.trials,
                        stream, args.p, args.step_cap, threads=args.threads,
                        window=args.window)
    ints = {"M", "r", "trials", "hits", "not_stabilized"}
    types = {c: "int" if c in ints else "float" for c in SCAN_COLUMNS}
    table = ResultTable.from_records(tab.records(), types)
    return {"scan": tab.to_dict()}, table, PHASE_SCAN, "cell c (sorted grid order), trial t: key (c, t)"


def cmd_arw_traps(args, stream: SeededStream):
    from ..arw import certify, choose_K
    from ..parallel import parallel_map

    K = args.K if args.K is not None else choose_K(args.mu, args.lam, stream.spawn(0), args.eps, p=args.p)

    def run(t: int):
        return certify(args.mu, args.lam, K, stream.spawn(1, t), p=args.p, step_cap=args.step_cap)

    certs = parallel_map(run, range(args.trials), args.threads)
    rows = []
    for t, c in enumerate(certs):
        rows.append({"trial": t, "success": c.certificate.success,
                     "failed_stage": c.certificate.failed_stage, "r0": c.certificate.r0,
                     "replay_ok": c.certificate.replay_ok, "replay_r0": c.certificate.replay_r0,
                     "real_r0": c.real_r0})
    ok = [r for r in rows if r["success"]]
    bad_replay = sum(1 for r in ok if not r["replay_ok"] or r["replay_r0"] != r["r0"])
    bad_bound = sum(1 for r in ok if r["real_r0"] is not None and r["real_r0"] > r["r0"])
    summary = {"K": K, "trials": args.trials, "successes": len(ok),
               "failure_rate": 1.0 - len(ok) / args.trials, "replay_failures": bad_replay,
               "bound_violations": bad_bound}
    types = {"trial": "int", "success": "bool", "failed_stage": "int", "r0": "int",
             "replay_ok": "bool", "replay_r0": "int", "real_r0": "int"}
    table = ResultTable.from_records(rows, types, summary=summary)
    result = {"summary": summary, "certificates": [c.certificate.to_dict() for c in certs]}
    if bad_replay or bad_bound:
        result["integrity_error"] = "a successful certificate failed its replay or bound"
    return result, table, None, "K selection: key (0); trial t: key (1, t)"


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path} is not valid JSON: {exc}") from None


def _write_json(path: str, doc) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(doc) + "\n")


def cmd_bl_decompose(args, stream: SeededStream):
    from ..brokenline import FlowField, crossing_total, decompose

    field = FlowField.from_dict(_read_json(args.input))
    field.check_conservation()
    dec = decompose(field)
    total = crossing_total(field)
    rows = [{"line": k, "weight": w, "vertices": tr.n + 1, "x0": tr.x0, "x1": tr.x1}
            for k, (tr, w) in enumerate(zip(dec.traces, np.asarray(dec.weights).tolist()))]
    wtype = "int" if dec.mode == "int" else "float"
    table = ResultTable.from_records(rows, {"line": "int", "weight": wtype, "vertices": "int",
                                            "x0": "int", "x1": "int"},
                                     summary={"left": total.left, "right": total.right, "H": total.H})
    doc = dec.to_dict()
    if args.output:
        _write_json(args.output, doc)
    return {"crossing_total": list(total.as_tuple()), "decomposition": doc}, table, None, "no randomness"


def _sample_field(args, stream: SeededStream):
    from ..brokenline import (ExponentialFamily, GeometricFamily, RectDomain, flow_from_boundary,
                              run_geometric_chain, sample_reversible_boundary)
    from ..sampling import GeometricLaw, sample_geometric

    if args.family is None or args.N is None or args.M is None:
        raise ParameterError("sampling needs --family, --params, --N and --M")
    params = parse_params(args.params)
    domain = RectDomain(args.N, args.M)
    if args.family == "geo":
        if "lam" in params:
            (lam,) = _need(params, "lam")
            family = GeometricFamily(lam, lam)
        else:
            family = GeometricFamily(*_need(params, "lam_plus", "lam_minus"))
        if args.chain:
            if family.lam_plus != family.lam_minus:
                raise ParameterError("the column chain needs lam_plus = lam_minus")
            lam = family.lam_plus
            zp = sample_geometric(stream.spawn(0), GeometricLaw(lam), args.N)
            zm = sample_geometric(stream.spawn(1), GeometricLaw(lam), args.M)
            field, _ = run_geometric_chain(domain, zp, zm, lam, stream.spawn(3))
            return field, "entering flows: keys (0), (1); chain column t: key (3, t)"
    else:
        if args.chain:
            raise ParameterError("--chain applies to the geometric family only")
        if "alpha" in params:
            (a,) = _need(params, "alpha")
            family = ExponentialFamily(a, a)
        else:
            family = ExponentialFamily(*_need(params, "alpha_plus", "alpha_minus"))
    zp, zm, xi = sample_reversible_boundary(domain, family, stream)
    return flow_from_boundary(domain, zp, zm, xi), "zeta+: key (0); zeta-: key (1); births: key (2)"


def cmd_bl_sample(args, stream: SeededStream):
    field, streams = _sample_field(args, stream)
    doc = field.to_dict()
    if args.output:
        _write_json(args.output, doc)
    left, right = field.boundary_sums()
    vtype = "int" if field.mode == "int" else "float"
    table = ResultTable.from_records(doc["edges"], {"t": "int", "x": "int", "dir": "str", "value": vtype},
                                     summary={"left": left, "right": right})
    return {"crossing_sums": [left, right], "field": doc}, table, None, streams


def cmd_bl_intersections(args, stream: SeededStream):
    from ..brokenline import FlowField, horizontal_joint_pmf, intersection_stats

    if args.input:
        field, streams = FlowField.from_dict(_read_json(args.input)), "no randomness"
    else:
        field, streams = _sample_field(args, stream)
    if args.output:
        _write_json(args.output, field.to_dict())
    if args.top < 0:
        raise ParameterError("--top must be nonnegative")
    stats = intersection_stats(field, args.line, args.at)
    hist = stats.histogram(args.top)
    n = len(stats.sites)
    summary = {"kind": stats.kind, "at": stats.at, "sites": n, "total": stats.total,
               "time_span": stats.time_span}
    if stats.paired:
        lam = None
        if not args.input:
            params = parse_params(args.params)
            if "lam" in params and args.family == "geo":
                lam = params["lam"]
        rows = []
        for m in range(args.top + 1):
            for k in range(args.top + 1):
                exact = float(horizontal_joint_pmf(m, k, lam)) if lam is not None else None
                rows.append({"m": m, "n": k, "count": int(hist[m, k]),
                             "frequency": hist[m, k] / n, "exact": exact})
        table = ResultTable.from_records(rows, {"m": "int", "n": "int", "count": "int",
                                                "frequency": "float", "exact": "float"},
                                         summary=summary)
    else:
        rows = [{"value": v, "count": int(c), "frequency": c / n} for v, c in enumerate(hist)]
        table = ResultTable.from_records(rows, {"value": "int", "count": "int", "frequency": "float"},
                                         summary=summary)
    result = {"summary": summary, "sites": stats.sites, "values": stats.values}
    return result, table, INTERSECTION_HIST, streams


def cmd_lpp_solve(args, stream: SeededStream):
    from ..lpp import LppInstance, solve_brokenline, solve_dp, weights_from

    if args.input:
        inst = LppInstance.from_dict(_read_json(args.input))
        streams = "no randomness"
    else:
        if args.family is None or args.N is None or args.M is None:
            raise ParameterError("sampling needs --family, --params, --N and --M (or pass --input)")
        params = parse_params(args.params)
        (param,) = _need(params, "alpha" if args.family == "exp" else "lam")
        inst = LppInstance.sample(weights_from(args.family, param), args.N, args.M, stream.spawn(0))
        streams = "weights: key (0)"
    if args.export:
        _write_json(args.export, inst.to_dict())
    sols = []
    if args.method in ("dp", "both"):
        sols.append(solve_dp(inst))
    if args.method in ("bl", "both"):
        sols.append(solve_brokenline(inst))
    if len(sols) == 2:
        a, b = sols[0].value, sols[1].value
        tol = 0 if inst.mode == "int" else 1e-9 * max(1.0, abs(a))
        if abs(a - b) > tol:
            raise IntegrityError("dynamic programming and broken-line values differ", dp=a, bl=b)
    rows = [{"method": s.method, "value": s.value, "path_length": len(s.path)} for s in sols]
    vtype = "int" if inst.mode == "int" else "float"
    table = ResultTable.from_records(rows, {"method": "str", "value": vtype, "path_length": "int"},
                                     summary={"N": inst.N, "M": inst.M})
    result = {"N": inst.N, "M": inst.M, "mode": inst.mode,
              "solutions": [s.to_dict() for s in sols]}
    return result, table, None, streams


def cmd_lpp_lln(args, stream: SeededStream):
    from ..lpp import LLN_COLUMNS, lln_experiment, weights_from

    params = parse_params(args.params)
    (param,) = _need(params, "alpha" if args.family == "exp" else "lam")
    tab = lln_experiment(weights_from(args.family, param), args.beta, args.N_list, args.trials,
                         stream, args.delta, threads=args.threads)
    types = dict.fromkeys(LLN_COLUMNS, "float")
    types.update(family="str", N="int", M="int", trials="int")
    table = ResultTable.from_records(tab.records(), types)
    return {"lln": tab.to_dict()}, table, LLN_CONVERGENCE, "side N, trial t: key (N, t)"


# --- dispatch ------------------------------------------------------------------------------

def resolve_seed(flag: int | None) -> tuple[int, str]:
    if flag is not None:
        return flag, "flag"
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _u64(env), "env"
        except argparse.ArgumentTypeError as exc:
            raise ParameterError(f"{SEED_ENV}: {exc}") from None
    return entropy_seed(), "entropy"


def _params_of(args) -> dict:
    skip = {"run", "group", "command", "json", "csv", "quiet", "plot_data", "seed", "threads"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def dispatch(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        seed, origin = resolve_seed(args.seed)
        args.threads = args.threads or default_threads()
        if origin == "entropy" and not args.quiet:
            print(f"seed {seed} (drawn from OS entropy)", file=stderr)
        stream = SeededStream(seed)
        result, table, plot_kind, streams = args.run(args, stream)
        manifest = RunManifest(["artifact", *argv], seed, _params_of(args), substreams=streams)
        if args.csv:
            with open(args.csv, "w", newline="") as fh:
                fh.write(table.to_csv())
        if args.plot_data:
            if plot_kind is None:
                raise ParameterError(f"{args.group} {args.command} has no plot data")
            emit_plot_data(table, plot_kind, args.plot_data)
        if args.json:
            print(dumps({"manifest": manifest.to_dict(), "result": result,
                         "table": table.to_dict()}), file=stdout)
        elif not args.quiet:
            _print_summary(args, seed, table, stdout)
        if "integrity_error" in result:
            raise IntegrityError(result["integrity_error"])
        return EXIT_OK
    except IntegrityError as exc:
        detail = f" {exc.values}" if getattr(exc, "values", None) else ""
        print(f"integrity error: {exc}{detail}", file=stderr)
        return EXIT_INTEGRITY
    except NotStabilized as exc:
        print(f"not stabilized: {exc}", file=stderr)
        return EXIT_NOT_STABILIZED
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=stderr)
        return EXIT_PARAMETER


def _print_summary(args, seed: int, table: ResultTable, out) -> None:
    print(f"{args.group} {args.command}  seed={seed}", file=out)
    for k, v in table.summary.items():
        print(f"  {k}: {v}", file=out)
    if len(table.rows) <= 40:
        print(table.to_csv().replace("\r\n", "\n").rstrip("\n"), file=out)
    else:
        print(f"  ({len(table.rows)} rows; use --csv or --json for the full table)", file=out)


def main() -> None:
    sys.exit(dispatch())
