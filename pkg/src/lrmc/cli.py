"""Command line interface: gen, run, compare, check.

gen      write a synthetic instance to Matrix Market files plus a JSON sidecar
run      solve one (algo, metric, init) cell on a generated or stored instance
compare  run a batch of cells on one shared instance; writes per-cell trace
         CSVs, a summary CSV, and convergence figures
check    run the numerical invariant suites and report pass/fail

Exit code 0 on completion, 1 on argument or validation errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .checks import run_all_checks
from .cost import Problem
from .geometry import MetricKind
from .harness import GenSpec, RunCell, RunSpec, generate_problem, run_experiment
from .fileio import read_meta, read_sample_set, write_meta, write_sample_set
from .solvers import Algo, SolverConfig, TrustRegionConfig

_METRIC_NAMES = {
    "scaled": MetricKind.SCALED,
    "ri": MetricKind.RIGHT_INVARIANT,
    "right": MetricKind.RIGHT_INVARIANT,
    "rightinv": MetricKind.RIGHT_INVARIANT,
    "right-invariant": MetricKind.RIGHT_INVARIANT,
}

_DEFAULT_CELLS = ("gd:scaled", "gd:ri", "cg:scaled", "lmafit:scaled")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_metric(name: str) -> MetricKind:
    try:
        return _METRIC_NAMES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown metric {name!r} (choices: scaled, ri)") from None


def _parse_cell(text: str) -> RunCell:
    parts = text.split(":")
    if not 1 <= len(parts) <= 3:
        raise ValueError(f"cell must be algo[:metric[:init]], got {text!r}")
    algo = Algo(parts[0].lower())
    metric = _parse_metric(parts[1]) if len(parts) > 1 and parts[1] else MetricKind.SCALED
    init = parts[2].lower() if len(parts) > 2 and parts[2] else "random"
    return RunCell(algo, metric, init)


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="number of rows")
    p.add_argument("--m", type=int, required=True, help="number of columns")
    p.add_argument("--rank", type=int, required=True, help="target rank r")
    p.add_argument("--os", type=float, default=5.0, dest="os_ratio",
                   help="over-sampling ratio: observed count is os*(n+m-r)*r")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.0,
                   help="extra held-out entries as a fraction of the observed count")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-20, help="cost threshold")
    p.add_argument("--grad-tol", type=float, default=1e-12)
    p.add_argument("--omega", type=float, default=1.5,
                   help="over-relaxation weight for the lmafit solver")


def _gen_spec(args) -> GenSpec:
    return GenSpec(args.n, args.m, args.rank, args.os_ratio, args.seed, args.test_fraction)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        cost_tol=args.tol,
        grad_tol=args.grad_tol,
        seed=args.seed,
        omega_relax=args.omega,
        tr=TrustRegionConfig(),
    )


def cmd_gen(args) -> int:
    spec = _gen_spec(args)
    prob, _ = generate_problem(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sample_set(out / "omega.mtx", prob.omega)
    if prob.omega_test is not None:
        write_sample_set(out / "omega_test.mtx", prob.omega_test)
    write_meta(
        out / "meta.json",
        {"n": spec.n, "m": spec.m, "rank": spec.rank, "os": spec.os_ratio, "seed": spec.seed},
    )
    print(f"wrote {prob.omega.nnz} observed entries to {out}")
    return 0


def _load_problem(problem_dir: Path) -> tuple[Problem, GenSpec]:
    meta = read_meta(problem_dir / "meta.json")
    omega = read_sample_set(problem_dir / "omega.mtx")
    test_path = problem_dir / "omega_test.mtx"
    omega_test = read_sample_set(test_path) if test_path.exists() else None
    prob = Problem(omega, int(meta["rank"]), omega_test)
    spec = GenSpec(int(meta["n"]), int(meta["m"]), int(meta["rank"]), float(meta["os"]), int(meta["seed"]))
    return prob, spec


def cmd_run(args) -> int:
    cell = RunCell(Algo(args.algo), _parse_metric(args.metric), args.init)
    if args.problem is not None:
        prob, spec = _load_problem(Path(args.problem))
    else:
        for flag in ("n", "m", "rank"):
            if getattr(args, flag) is None:
                raise ValueError(f"--{flag} is required when --problem is not given")
        spec = _gen_spec(args)
        prob = None
    run = RunSpec(spec, (cell,), _solver_config(args), Path(args.out))
    results = run_experiment(run, plot=not args.no_plot, problem=prob)
    _print_summary(results)
    return 0


def cmd_compare(args) -> int:
    cells = tuple(_parse_cell(c) for c in (args.cell or _DEFAULT_CELLS))
    run = RunSpec(_gen_spec(args), cells, _solver_config(args), Path(args.out))
    results = run_experiment(run, plot=not args.no_plot)
    _print_summary(results)
    return 0


def _print_summary(results) -> None:
    for res in results:
        if res.error is not None:
            print(f"{res.cell.label}: ERROR {res.error}")
            continue
        final = res.trace.final
        rmse = f"  test_rmse={res.test_rmse:.3e}" if res.test_rmse is not None else ""
        print(
            f"{res.cell.label}: {res.trace.status.value} after {final.iteration} iterations, "
            f"cost={final.cost:.3e}, grad={final.grad_norm:.3e}{rmse}"
        )


def cmd_check(args) -> int:
    results = run_all_checks(seed=args.seed)
    for res in results:
        print(res.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lrmc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate an instance and write it to disk")
    _add_gen_flags(p_gen)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    p_run = sub.add_parser("run", help="run a single solver")
    p_run.add_argument("--algo", required=True, choices=[a.value for a in Algo])
    p_run.add_argument("--metric", default="scaled")
    p_run.add_argument("--init", default="random", choices=["random", "spectral"])
    p_run.add_argument("--problem", default=None, help="directory written by `lrmc gen`")
    p_run.add_argument("--n", type=int)
    p_run.add_argument("--m", type=int)
    p_run.add_argument("--rank", type=int)
    p_run.add_argument("--os", type=float, default=5.0, dest="os_ratio")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--test-fraction", type=float, default=0.0)
    _add_solver_flags(p_run)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--no-plot", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run a batch of solver cells on one instance")
    _add_gen_flags(p_cmp)
    _add_solver_flags(p_cmp)
    p_cmp.add_argument("--cell", action="append",
                       help="algo[:metric[:init]]; repeatable (default: a standard batch)")
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--no-plot", action="store_true")
    p_cmp.set_defaults(func=cmd_compare)

    p_chk = sub.add_parser("check", help="run the numerical invariant suites")
    p_chk.add_argument("--seed", type=int, default=2024)
    p_chk.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"lrmc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
