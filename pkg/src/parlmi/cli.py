"""Command-line interface: ``parlmi {gen-example,train,solve,bench}``.

Exit codes: 0 success, 1 usage error, 2 tolerance not reached,
3 internal-consistency violation.  Heavy modules are imported per command
so that ``solve`` without ``--verify`` never loads the matrix stack.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE, EXIT_CONSISTENCY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _vec(values) -> str:
    return " ".join(_fmt(v) for v in values)


# --- gen-example ---------------------------------------------------------------

def cmd_gen_example(args) -> int:
    from .example_rd import GridSpec, build_problem
    from .problem import save_problem

    try:
        spec = GridSpec(nodes_per_side=args.m, omega1=tuple(args.omega1),
                        omega2=tuple(args.omega2), rho=args.rho, mu_range=tuple(args.mu_range))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    problem = build_problem(spec)
    path = save_problem(problem, args.out)
    print(f"wrote {path} (N={problem.dim}, Q_F={problem.num_terms})")
    return EXIT_OK


# --- train ---------------------------------------------------------------------

def cmd_train(args) -> int:
    from .model import save_model, write_log_csv
    from .problem import TrainSet, load_problem
    from .trainer import train_feasibility, train_sdp

    problem = load_problem(args.problem)
    if args.xi < 1:
        raise UsageError("--xi must be positive")
    if args.xi_strategy == "uniform":
        ts = TrainSet.uniform(problem.maps, args.xi)
    else:
        ts = TrainSet.random(problem.maps, args.xi, seed=args.seed)
    common = dict(M_C=args.mc, M_Xi=args.mxi, max_k=args.max_k, threads=args.threads)
    if args.mode == "feas":
        tol = 1e-6 if args.tol is None else args.tol
        model = train_feasibility(problem, ts, tol_feas=tol, **common)
    else:
        tol = 1e-2 if args.tol is None else args.tol
        model = train_sdp(problem, ts, tol_gap=tol, skip_feas_phase=args.skip_feas_phase,
                          **common)
    out = save_model(model, args.out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log.csv")
    write_log_csv(model, log_path)
    last = model.log[-1].criterion if model.log else math.nan
    print(f"{model.mode} model: status={model.status} |C_k|={len(model.outer.C_k)} "
          f"final criterion={last:.3e}; wrote {out} and {log_path}")
    return EXIT_OK if model.converged else EXIT_TOLERANCE


# --- solve ---------------------------------------------------------------------

def _read_batch(path, num_params) -> list[list[float]]:
    mus = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        vals = [float(t) for t in line.split()]
        if len(vals) != num_params:
            raise UsageError(f"batch line {line!r} has {len(vals)} values, expected {num_params}")
        mus.append(vals)
    return mus


def cmd_solve(args) -> int:
    from .model import load_model
    from .online import online_solve

    problem = None
    if args.verify:
        if not args.problem:
            raise UsageError("--verify needs --problem")
        from .problem import load_problem
        problem = load_problem(args.problem)
    model = load_model(args.model, problem=problem)
    p = model.maps.num_params
    if (args.mu is None) == (args.batch is None):
        raise UsageError("give exactly one of --mu or --batch")
    if args.mu is not None:
        if len(args.mu) != p:
            raise UsageError(f"--mu needs {p} value(s)")
        mus = [args.mu]
    else:
        mus = _read_batch(args.batch, p)

    if model.mode == "feasibility":
        header = ["mu", "x", "rf_value", "certified"]
    else:
        header = ["mu", "status", "x", "J_out", "J_in", "gap", "rel_gap"]
    if problem is not None:
        header += ["lambda_min", "verified"]

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    failed = False
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        for mu in mus:
            if not model.maps.in_domain(mu):
                print(f"parlmi: warning: mu={mu} lies outside the domain "
                      f"{[list(d) for d in model.maps.domain]}; answer is best effort",
                      file=sys.stderr)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                ans = online_solve(model, mu)
            if model.mode == "feasibility":
                row = [_vec(mu), _vec(ans.x), _fmt(ans.rf_value), int(ans.certified)]
            else:
                row = [_vec(mu), ans.status, "" if ans.x is None else _vec(ans.x),
                       _fmt(ans.J_out), _fmt(ans.J_in), _fmt(ans.gap), _fmt(ans.rel_gap)]
            if problem is not None:
                if ans.x is None:
                    row += ["", 0]
                    failed = True
                else:
                    from .spectral import alpha
                    lam = alpha(problem, ans.x, mu).alpha
                    ok = lam > 0
                    failed |= not ok
                    row += [_fmt(lam), int(ok)]
            writer.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_TOLERANCE if failed else EXIT_OK


# --- bench ---------------------------------------------------------------------

def cmd_bench(args) -> int:
    from .bench import run

    path = run(args.experiment, args.out, m=args.m, seed=args.seed, sizes=tuple(args.sizes),
               threads=args.threads)
    print(f"wrote {path}")
    return EXIT_OK


# --- parser --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _threads(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parlmi", description="Reduced models for parametric LMIs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-example", help="write the reaction-diffusion problem file")
    g.add_argument("--m", type=int, default=51, help="nodes per side (N = m^2)")
    g.add_argument("--rho", type=float, default=0.01)
    g.add_argument("--omega1", type=float, nargs=4, default=[0.0, 0.5, 0.0, 0.5],
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    g.add_argument("--omega2", type=float, nargs=4, default=[0.5, 1.0, 0.5, 1.0],
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    g.add_argument("--mu-range", type=float, nargs=2, default=[0.0, 3.0], metavar=("LO", "HI"))
    g.add_argument("--out", required=True, help="problem JSON path")
    g.set_defaults(func=cmd_gen_example)

    t = sub.add_parser("train", help="greedy offline training")
    t.add_argument("--problem", required=True)
    t.add_argument("--mode", choices=["feas", "sdp"], default="sdp")
    t.add_argument("--xi", type=int, default=100, help="training set size")
    t.add_argument("--xi-strategy", choices=["uniform", "random"], default="uniform")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--mc", type=int, default=4, help="nearest exact cuts (M_C)")
    t.add_argument("--mxi", type=int, default=3, help="nearest inexact cuts (M_Xi)")
    t.add_argument("--tol", type=float, default=None,
                   help="tol_feas (default 1e-6) or tol_gap (default 1e-2)")
    t.add_argument("--max-k", type=int, default=None, help="budget on |C_k|")
    t.add_argument("--skip-feas-phase", action="store_true",
                   help="sdp mode: start from the domain corners instead of a feasibility model")
    t.add_argument("--threads", type=_threads, default=None,
                   help="sweep threads (default: PARLMI_THREADS or 1)")
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--log", default=None, help="training-log CSV (default: <out>.log.csv)")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("solve", help="online queries against a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--mu", type=float, nargs="+", default=None)
    s.add_argument("--batch", default=None, help="file with one parameter vector per line")
    s.add_argument("--problem", default=None, help="problem file, needed for --verify")
    s.add_argument("--verify", action="store_true", help="certify each x by an eigensolve")
    s.add_argument("--out", default=None, help="CSV path (default: stdout)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="CSV data for the convergence experiments")
    b.add_argument("experiment", choices=["fig-a", "fig-b", "fig-c"])
    b.add_argument("--m", type=int, default=11, help="nodes per side")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 12],
                   help="fig-c exact-set sizes")
    b.add_argument("--threads", type=_threads, default=None)
    b.add_argument("--out", default=".", help="output directory")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    from .lp import IterationLimitError, SingularBasisError
    from .model import ModelFileError
    from .outer import ConsistencyError

    try:
        return args.func(args)
    except UsageError as exc:
        print(f"parlmi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConsistencyError, SingularBasisError, IterationLimitError) as exc:
        print(f"parlmi: internal consistency violation: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except (ModelFileError, FileNotFoundError, ValueError) as exc:
        print(f"parlmi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:   # full-order or training failures
        print(f"parlmi: tolerance not reached: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
