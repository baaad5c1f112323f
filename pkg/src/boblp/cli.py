"""Command-line front end: solve one instance, sweep a directory into a
benchmark CSV, or generate instance files.

The CSV schema is fixed,

    instance,n,m,algo,epb,lambda,time_s,timed_out,nodes,sp_cuts,mp_cuts,ynd_count

and two sweeps with identical flags and seeds differ at most in the
time_s column.  Exit codes: 0 run complete, 1 usage or input error,
2 time limit hit.
"""

import argparse
import csv
import io
import sys
from pathlib import Path

from .baselines import EpsilonConfig, brute_force, epsilon_constraint
from .engine import ALGOS, LAMBDA_STRATEGIES, SELECT_RULES, EngineConfig, solve
from .model import FAMILIES, GeneratorConfig, generate, parse_instance, serialize_instance

import numpy as np

CLI_ALGOS = ALGOS + ("epsilon", "brute")
CSV_HEADER = (
    "instance", "n", "m", "algo", "epb", "lambda",
    "time_s", "timed_out", "nodes", "sp_cuts", "mp_cuts", "ynd_count",
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _fmt(v):
    f = float(v)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return f"{f:.6g}"


def _add_solver_flags(p):
    p.add_argument("--algo", action="append", metavar="NAME",
                   help=f"one of {', '.join(CLI_ALGOS)}; repeat or comma-separate for bench sweeps")
    p.add_argument("--epb", action="store_true",
                   help="branch on local nadir corners when the bound set permits it")
    p.add_argument("--lambda", dest="lambda_budget", type=int, nargs="?", const=2,
                   default=None, metavar="K",
                   help="cap weighted-sum LP solves per node (valueless form means 2)")
    p.add_argument("--lambda-strategy", choices=LAMBDA_STRATEGIES, default="dichotomic")
    p.add_argument("--node-select", choices=SELECT_RULES, default="breadth")
    p.add_argument("--time-limit", type=float, default=3600.0, metavar="S")
    p.add_argument("--seed", type=int, default=0, metavar="N")


def _parse_algos(parser, values, allow_many):
    if not values:
        return ["bb"]
    algos = [a for chunk in values for a in chunk.split(",") if a]
    for a in algos:
        if a not in CLI_ALGOS:
            parser.error(f"unknown algorithm {a!r}")
    if not allow_many and len(algos) != 1:
        parser.error("solve takes exactly one --algo")
    return algos


def _dispatch(inst, algo, ns):
    if algo == "brute":
        return brute_force(inst)
    if algo == "epsilon":
        return epsilon_constraint(inst, EpsilonConfig(time_limit=ns.time_limit))
    cfg = EngineConfig(
        algo=algo,
        epb=ns.epb,
        lambda_budget=ns.lambda_budget,
        lambda_strategy=ns.lambda_strategy,
        node_select=ns.node_select,
        time_limit=ns.time_limit,
        seed=ns.seed,
    )
    return solve(inst, cfg)


def _load(parser, path):
    p = Path(path)
    if not p.is_file():
        parser.error(f"no such instance file: {path}")
    try:
        return parse_instance(p.read_text(), name=p.stem)
    except ValueError as exc:
        parser.error(f"{path}: {exc}")


def cmd_solve(parser, ns):
    algo = _parse_algos(parser, ns.algo, allow_many=False)[0]
    inst = _load(parser, ns.instance)
    report = _dispatch(inst, algo, ns)
    lines = [f"{_fmt(p.y1)} {_fmt(p.y2)}" for p in report.ynd]
    for line in lines:
        print(line)
    n_sols = sum(len(s) for s in report.efficient.values())
    print(f"# instance {inst.name}  algo {algo}")
    print(f"# nondominated points {len(report.ynd)}  efficient solutions {n_sols}")
    print(f"# nodes {report.nodes_explored}  cuts {report.sp_cuts}+{report.mp_cuts}"
          f"  time {report.wall_time:.3f}s  timed_out {int(report.timed_out)}")
    if ns.out:
        Path(ns.out).write_text("".join(f"{x}\n" for x in lines))
    return 2 if report.timed_out else 0


def _bench_row(name, n, m, algo, ns, report):
    return (
        name, n, m, algo, int(ns.epb),
        "" if ns.lambda_budget is None else ns.lambda_budget,
        f"{report.wall_time:.6f}" if report else "0.000000",
        int(report.timed_out) if report else 1,
        report.nodes_explored if report else 0,
        report.sp_cuts if report else 0,
        report.mp_cuts if report else 0,
        len(report.ynd) if report else 0,
    )


def _aggregate_rows(rows):
    """One mean row per (algo, epb, lambda, n) bucket, in first-seen order."""
    buckets = {}
    for r in rows:
        buckets.setdefault((r[3], r[4], r[5], r[1]), []).append(r)
    out = []
    for (algo, epb, lam, n), grp in buckets.items():
        k = len(grp)
        mean = lambda i: sum(float(r[i]) for r in grp) / k
        out.append((
            f"mean-n{n}", n, _fmt(mean(2)), algo, epb, lam,
            f"{mean(6):.6f}", max(int(r[7]) for r in grp),
            _fmt(mean(8)), _fmt(mean(9)), _fmt(mean(10)), _fmt(mean(11)),
        ))
    return out


def cmd_bench(parser, ns):
    algos = _parse_algos(parser, ns.algo, allow_many=True)
    root = Path(ns.path)
    files = [root] if root.is_file() else sorted(root.glob("*.boblp"))
    if not files:
        parser.error(f"no .boblp instances under {ns.path}")
    rows, any_timeout = [], False
    for f in files:
        try:
            inst = parse_instance(f.read_text(), name=f.stem)
        except (OSError, ValueError):
            for algo in algos:
                rows.append(_bench_row(f.stem, 0, 0, algo, ns, None))
            any_timeout = True
            continue
        for algo in algos:
            try:
                report = _dispatch(inst, algo, ns)
            except Exception:
                report = None
            rows.append(_bench_row(f.stem, inst.n, inst.m, algo, ns, report))
            if report is None or report.timed_out:
                any_timeout = True
    if ns.aggregate:
        rows.extend(_aggregate_rows(rows))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(rows)
    if ns.out:
        Path(ns.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 2 if any_timeout else 0


def cmd_generate(parser, ns):
    out_dir = Path(ns.out) if ns.out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    code = 0
    for k in range(ns.count):
        cfg = GeneratorConfig(family=ns.family, n=ns.n, seed=ns.seed + k)
        inst = generate(cfg)
        path = out_dir / f"{inst.name}.boblp"
        path.write_text(serialize_instance(inst))
        rho = float(np.corrcoef(inst.c1, inst.c2)[0, 1])
        print(f"{path} rho={rho:.4f}")
    return code


def build_parser():
    parser = _Parser(prog="boblp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="{solve,bench,generate}")

    p_solve = sub.add_parser("solve", help="solve one instance and print its frontier")
    p_solve.add_argument("instance", help="path to a .boblp file")
    _add_solver_flags(p_solve)
    p_solve.add_argument("--out", metavar="PATH", help="also write the points to a file")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="run a sweep and emit CSV")
    p_bench.add_argument("path", help="instance file or directory of .boblp files")
    _add_solver_flags(p_bench)
    p_bench.add_argument("--out", metavar="PATH", help="CSV destination (default stdout)")
    p_bench.add_argument("--aggregate", action="store_true",
                         help="append mean rows per size bucket")
    p_bench.set_defaults(func=cmd_bench)

    p_gen = sub.add_parser("generate", help="write generated instance files")
    p_gen.add_argument("--family", choices=FAMILIES, required=True)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--count", type=int, default=1,
                       help="emit this many files with consecutive seeds")
    p_gen.add_argument("--out", metavar="DIR", help="target directory (default cwd)")
    p_gen.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.error("a command is required")
    try:
        return ns.func(parser, ns)
    except SystemExit:
        raise
    except ValueError as exc:
        print(f"boblp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
