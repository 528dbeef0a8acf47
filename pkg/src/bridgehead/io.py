"""Serialization: problems, solutions, bridge results, reports, manifests.

JSON carries every float through Python's shortest round-trip repr, and the
CSV writers format cells the same way, so rewriting an unchanged result is
byte-identical and hashes in the manifest are stable across runs.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .bridge import BridgeResult
from .core import ActionMarginal, Coupling, InvalidInput, Potentials, Problem, drop_zero_prior_states, validate
from .diagnostics import CheckResult, DiagnosticReport
from .solver import Solution

__all__ = [
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
    "load_problem",
    "solution_to_dict",
    "solution_from_dict",
    "save_solution",
    "load_solution",
    "bridge_to_dict",
    "save_bridge",
    "report_to_dict",
    "save_report",
    "report_rows",
    "write_csv",
    "sha256_of",
    "write_manifest",
]


def _floats(values) -> list[float]:
    return [float(v) for v in np.asarray(values, dtype=np.float64).ravel()]


def _matrix(values) -> list[list[float]]:
    arr = np.asarray(values, dtype=np.float64)
    return [[float(v) for v in row] for row in arr]


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------


def problem_to_dict(problem: Problem) -> dict[str, Any]:
    return {
        "actions": list(problem.actions),
        "states": list(problem.states),
        "utility": _matrix(problem.utility),
        "lambda": float(problem.lam),
        "prior": _floats(problem.prior),
    }


def problem_from_dict(data: dict[str, Any]) -> Problem:
    try:
        problem = Problem(
            actions=tuple(str(a) for a in data["actions"]),
            states=tuple(str(s) for s in data["states"]),
            utility=np.array(data["utility"], dtype=np.float64),
            lam=float(data["lambda"]),
            prior=np.array(data["prior"], dtype=np.float64),
        )
    except KeyError as missing:
        raise InvalidInput(f"problem document is missing key {missing}") from None
    # exact zeros in the prior are dropped (with a warning) before
    # validation, which requires strict positivity on what remains
    if problem.prior.ndim == 1 and np.any(problem.prior == 0.0):
        problem = drop_zero_prior_states(problem)
    issues = validate(problem)
    if issues:
        summary = "; ".join(f"{i.code}: {i.message}" for i in issues)
        raise InvalidInput(f"problem document failed validation: {summary}")
    return problem


def save_problem(problem: Problem, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(problem_to_dict(problem), indent=2) + "\n")
    return path


def load_problem(path: str | Path) -> Problem:
    with open(path) as fh:
        return problem_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Solutions
# ---------------------------------------------------------------------------


def solution_to_dict(problem: Problem, solution: Solution) -> dict[str, Any]:
    return {
        "actions": list(problem.actions),
        "states": list(problem.states),
        "f_value": float(solution.f_value),
        "converged": bool(solution.converged),
        "iterations": int(solution.iterations),
        "consideration_set": [int(i) for i in solution.consideration_set],
        "consideration_labels": [problem.actions[i] for i in solution.consideration_set],
        "marginal": _floats(solution.marginal.weights),
        "foc_residuals": _floats(solution.foc_residuals),
        "coupling": _matrix(solution.coupling.joint),
        "potentials": {
            "action": _floats(solution.potentials.action),
            "state": _floats(solution.potentials.state),
            "normalization": solution.potentials.normalization,
        },
    }


def solution_from_dict(data: dict[str, Any]) -> Solution:
    potentials = Potentials(
        action=np.array(data["potentials"]["action"], dtype=np.float64),
        state=np.array(data["potentials"]["state"], dtype=np.float64),
        normalization=str(data["potentials"]["normalization"]),
    )
    return Solution(
        marginal=ActionMarginal(np.array(data["marginal"], dtype=np.float64)),
        coupling=Coupling(np.array(data["coupling"], dtype=np.float64)),
        potentials=potentials,
        f_value=float(data["f_value"]),
        foc_residuals=np.array(data["foc_residuals"], dtype=np.float64),
        consideration_set=tuple(int(i) for i in data["consideration_set"]),
        iterations=int(data["iterations"]),
        converged=bool(data["converged"]),
    )


def save_solution(problem: Problem, solution: Solution, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(solution_to_dict(problem, solution), indent=2) + "\n")
    return path


def load_solution(path: str | Path) -> Solution:
    with open(path) as fh:
        return solution_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Bridge results and diagnostic reports
# ---------------------------------------------------------------------------


def bridge_to_dict(result: BridgeResult) -> dict[str, Any]:
    return {
        "value_primal": float(result.value_primal),
        "value_dual": float(result.value_dual),
        "duality_gap": float(result.duality_gap),
        "iterations": int(result.iterations),
        "residual": float(result.residual),
        "coupling": _matrix(result.coupling.joint),
        "potentials": {
            "action": _floats(result.potentials.action),
            "state": _floats(result.potentials.state),
            "normalization": result.potentials.normalization,
        },
    }


def save_bridge(result: BridgeResult, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(bridge_to_dict(result), indent=2) + "\n")
    return path


def report_to_dict(report: DiagnosticReport) -> dict[str, Any]:
    return {
        "all_pass": bool(report.all_pass),
        "checks": [
            {
                "name": c.name,
                "max_violation": float(c.max_violation),
                "tolerance": float(c.tolerance),
                "passed": bool(c.passed),
                "details": c.details,
            }
            for c in report.checks
        ],
    }


def save_report(report: DiagnosticReport, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
    return path


def report_rows(report: DiagnosticReport) -> list[list[str]]:
    rows = []
    for c in report.checks:
        rows.append([c.name, repr(c.max_violation), repr(c.tolerance), str(c.passed)])
    return rows


# ---------------------------------------------------------------------------
# CSV and manifests
# ---------------------------------------------------------------------------


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write rows with round-trip float formatting and unix line endings."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def sha256_of(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    directory: str | Path,
    command: str,
    input_path: str,
    arguments: dict[str, Any],
    files: Sequence[str | Path],
    wall_time: float,
) -> Path:
    """Record what a CLI run produced: arguments, wall time, content hashes.

    Hash entries are keyed by file name and sorted; only the wall-time field
    varies between runs that produced identical outputs.
    """
    directory = Path(directory)
    hashes = {Path(f).name: sha256_of(f) for f in files}
    manifest = {
        "command": command,
        "input": input_path,
        "arguments": {k: arguments[k] for k in sorted(arguments)},
        "outputs": {name: hashes[name] for name in sorted(hashes)},
        "wall_time_seconds": float(wall_time),
    }
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path
