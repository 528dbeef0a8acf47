"""Command-line front end: solve, bridge, diagnose, sweep.

Exit codes follow one contract everywhere: 0 for a clean run, 1 for invalid
input (unreadable files, failed validation, dimension mismatches), 2 for a
run that finished but did not certify (non-convergence, failed checks).
Partial results are still written on exit 2 so pipelines can inspect them.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bridge import BridgeNotConverged, SinkhornConfig, sinkhorn_bridge
from .core import ActionMarginal, InvalidInput, Problem, mutual_information
from .diagnostics import run_diagnostics
from .io import (
    load_problem,
    load_solution,
    report_rows,
    save_bridge,
    save_report,
    save_solution,
    write_csv,
    write_manifest,
)
from .solver import SolverConfig, SolverNotConverged, solve

__all__ = ["main"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_INVALID


def _load_problem(path: str) -> Problem:
    try:
        return load_problem(path)
    except FileNotFoundError:
        raise InvalidInput(f"no such file: {path}") from None
    except json.JSONDecodeError as err:
        raise InvalidInput(f"{path} is not valid JSON: {err}") from None


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        foc_tolerance=args.foc_tolerance,
        max_iterations=args.max_iters,
        init=args.init,
        seed=args.seed,
        sinkhorn=SinkhornConfig(tolerance=args.tolerance),
    )


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _solution_files(problem: Problem, solution, out: Path, stem: str = "solution") -> list[Path]:
    files = [save_solution(problem, solution, out / f"{stem}.json")]
    files.append(
        write_csv(
            out / f"{stem}_actions.csv",
            ["index", "action", "weight", "action_potential", "foc_residual", "supported"],
            [
                [
                    i,
                    problem.actions[i],
                    solution.marginal.weights[i],
                    float(np.log1p(solution.foc_residuals[i])),
                    solution.foc_residuals[i],
                    i in solution.consideration_set,
                ]
                for i in range(problem.num_actions)
            ],
        )
    )
    files.append(
        write_csv(
            out / f"{stem}_states.csv",
            ["index", "state", "prior", "state_potential"],
            [
                [j, problem.states[j], problem.prior[j], solution.potentials.state[j]]
                for j in range(problem.num_states)
            ],
        )
    )
    return files


def cmd_solve(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    try:
        problem = _load_problem(args.problem)
        config = _solver_config(args)
    except InvalidInput as err:
        return _fail(str(err))

    code = EXIT_OK
    try:
        solution = solve(problem, config)
    except SolverNotConverged as err:
        solution = err.solution
        code = EXIT_NOT_CONVERGED
        print(f"warning: {err}", file=sys.stderr)

    out = _out_dir(args)
    files = _solution_files(problem, solution, out)
    write_manifest(
        out,
        "solve",
        args.problem,
        {
            "tolerance": args.tolerance,
            "max_iters": args.max_iters,
            "foc_tolerance": args.foc_tolerance,
            "seed": args.seed,
            "init": args.init,
        },
        files,
        time.perf_counter() - start,
    )
    labels = ", ".join(problem.actions[i] for i in solution.consideration_set)
    print(f"f_value: {solution.f_value!r}")
    print(f"iterations: {solution.iterations}")
    print(f"converged: {solution.converged}")
    print(f"consideration set: [{labels}]")
    print(f"wrote: {', '.join(str(f) for f in files)}")
    return code


def cmd_bridge(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    try:
        problem = _load_problem(args.problem)
        with open(args.marginal) as fh:
            doc = json.load(fh)
        weights = doc["marginal"] if isinstance(doc, dict) else doc
        nu = ActionMarginal(np.array(weights, dtype=np.float64))
        if len(nu) != problem.num_actions:
            raise InvalidInput(
                f"marginal has {len(nu)} entries, problem has {problem.num_actions} actions"
            )
    except FileNotFoundError as err:
        return _fail(str(err))
    except (json.JSONDecodeError, KeyError) as err:
        return _fail(f"bad marginal file: {err}")
    except InvalidInput as err:
        return _fail(str(err))

    code = EXIT_OK
    try:
        result = sinkhorn_bridge(
            problem, nu, SinkhornConfig(tolerance=args.tolerance, max_iterations=args.max_iters)
        )
    except BridgeNotConverged as err:
        result = err.result
        code = EXIT_NOT_CONVERGED
        print(f"warning: {err}", file=sys.stderr)

    out = _out_dir(args)
    files = [save_bridge(result, out / "bridge.json")]
    write_manifest(
        out,
        "bridge",
        args.problem,
        {"marginal": args.marginal, "tolerance": args.tolerance, "max_iters": args.max_iters},
        files,
        time.perf_counter() - start,
    )
    print(f"value_primal: {result.value_primal!r}")
    print(f"value_dual: {result.value_dual!r}")
    print(f"duality_gap: {result.duality_gap!r}")
    print(f"residual: {result.residual!r} after {result.iterations} sweeps")
    return code


def cmd_diagnose(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    try:
        problem = _load_problem(args.problem)
        solution = load_solution(args.solution)
        if solution.coupling.joint.shape != (problem.num_actions, problem.num_states):
            raise InvalidInput(
                f"solution coupling is {solution.coupling.joint.shape}, problem is "
                f"({problem.num_actions}, {problem.num_states})"
            )
    except FileNotFoundError as err:
        return _fail(str(err))
    except (json.JSONDecodeError, KeyError) as err:
        return _fail(f"bad solution file: {err}")
    except InvalidInput as err:
        return _fail(str(err))

    report = run_diagnostics(problem, solution, seed=args.seed)
    out = _out_dir(args)
    files = [save_report(report, out / "report.json")]
    files.append(
        write_csv(
            out / "report.csv",
            ["check", "max_violation", "tolerance", "passed"],
            report_rows(report),
        )
    )
    write_manifest(
        out,
        "diagnose",
        args.problem,
        {"solution": args.solution, "seed": args.seed},
        files,
        time.perf_counter() - start,
    )
    for check in report:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.max_violation:.3e} (tolerance {check.tolerance:.0e})")
    print(f"all checks pass: {report.all_pass}")
    return EXIT_OK if report.all_pass else EXIT_NOT_CONVERGED


def _sweep_one(problem: Problem, lam: float, config: SolverConfig):
    scaled = Problem(problem.actions, problem.states, problem.utility, lam, problem.prior)
    try:
        return scaled, solve(scaled, config), None
    except SolverNotConverged as err:
        return scaled, err.solution, str(err)


def cmd_sweep(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    try:
        problem = _load_problem(args.problem)
        config = _solver_config(args)
        lambdas = [float(tok) for tok in args.lambdas.split(",") if tok.strip()]
        if not lambdas:
            raise InvalidInput("no lambda values given")
        if any(lam <= 0 for lam in lambdas):
            raise InvalidInput("all lambda values must be positive")
    except InvalidInput as err:
        return _fail(str(err))
    except ValueError as err:
        return _fail(f"bad lambda list: {err}")

    out = _out_dir(args)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda lam: _sweep_one(problem, lam, config), lambdas))

    files = []
    rows = []
    failures: dict[str, str] = {}
    for k, (scaled, solution, error) in enumerate(results):
        files.extend(_solution_files(scaled, solution, out, stem=f"solution_{k:02d}"))
        rows.append(
            [
                lambdas[k],
                len(solution.consideration_set),
                solution.f_value,
                mutual_information(solution.coupling),
            ]
        )
        if error is not None:
            failures[repr(lambdas[k])] = error
            print(f"warning: lambda={lambdas[k]}: {error}", file=sys.stderr)
    files.append(
        write_csv(
            out / "summary.csv",
            ["lambda", "consideration_size", "f_value", "mutual_information"],
            rows,
        )
    )
    write_manifest(
        out,
        "sweep",
        args.problem,
        {
            "lambdas": args.lambdas,
            "jobs": args.jobs,
            "tolerance": args.tolerance,
            "max_iters": args.max_iters,
            "foc_tolerance": args.foc_tolerance,
            "seed": args.seed,
            "init": args.init,
            "failures": failures,
        },
        files,
        time.perf_counter() - start,
    )
    print(f"swept {len(lambdas)} lambda values, {len(failures)} failures")
    print(f"wrote: {out / 'summary.csv'}")
    return EXIT_OK if not failures else EXIT_NOT_CONVERGED


def _add_common(parser: argparse.ArgumentParser, solver_flags: bool = True) -> None:
    parser.add_argument("--tolerance", type=float, default=1e-12, help="inner marginal residual target")
    parser.add_argument("--max-iters", type=int, default=100_000, help="iteration budget")
    parser.add_argument("--output-dir", default=".", help="directory for output files")
    if solver_flags:
        parser.add_argument("--foc-tolerance", type=float, default=1e-9, help="first-order plateau target")
        parser.add_argument("--seed", type=int, default=0, help="seed for random initialization")
        parser.add_argument("--init", choices=["uniform", "random"], default="uniform", help="initial marginal")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgehead",
        description="Solve rational-inattention problems as nested entropic optimal transport.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the full outer/inner solver on a problem file")
    p_solve.add_argument("problem", help="problem JSON file")
    _add_common(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_bridge = sub.add_parser("bridge", help="solve the inner coupling problem at a fixed marginal")
    p_bridge.add_argument("problem", help="problem JSON file")
    p_bridge.add_argument("marginal", help="JSON file with the action marginal (bare array)")
    _add_common(p_bridge, solver_flags=False)
    p_bridge.set_defaults(func=cmd_bridge)

    p_diag = sub.add_parser("diagnose", help="run every certificate against a solved instance")
    p_diag.add_argument("problem", help="problem JSON file")
    p_diag.add_argument("solution", help="solution JSON file to audit")
    p_diag.add_argument("--seed", type=int, default=20240817, help="seed for randomized checks")
    p_diag.add_argument("--output-dir", default=".", help="directory for output files")
    p_diag.set_defaults(func=cmd_diagnose)

    p_sweep = sub.add_parser("sweep", help="re-solve one problem across a list of lambda values")
    p_sweep.add_argument("problem", help="problem JSON file")
    p_sweep.add_argument("--lambdas", required=True, help="comma-separated positive lambda values")
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent solves")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
