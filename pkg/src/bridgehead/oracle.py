"""Slow, solver-independent reference computations.

The grid search bounds the optimal envelope value from below by brute force
and from above through a certified Lipschitz argument, without ever running
the fixed-point iteration it is used to audit.  The mutual-information
routine walks the joint entry by entry in plain Python floats as a foil for
the vectorized version.  Everything here trades speed for independence, so
keep instances small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import ActionMarginal, BridgeheadError, Coupling, InvalidInput, Problem, gibbs_kernel

__all__ = [
    "TooManyActions",
    "GridSpec",
    "GridSearchResult",
    "simplex_lattice",
    "grid_search_f",
    "exhaustive_mi",
]

_BATCH_ROWS = 4096


class TooManyActions(BridgeheadError):
    """The action set exceeds what the lattice search is willing to sweep."""


@dataclass(frozen=True)
class GridSpec:
    """Lattice parameters for the brute-force envelope search.

    ``resolution`` is the lattice pitch 1/N; None picks 1e-3 for two actions
    and 1e-2 beyond that, keeping the point count near or below a few
    hundred thousand.  ``max_actions`` guards against combinatorial blowup.
    """

    resolution: float | None = None
    max_actions: int = 4

    def pitch_for(self, num_actions: int) -> float:
        if self.resolution is not None:
            if not 0.0 < self.resolution <= 0.5:
                raise InvalidInput("resolution must lie in (0, 0.5]")
            return self.resolution
        return 1e-3 if num_actions == 2 else 1e-2


@dataclass(frozen=True)
class GridSearchResult:
    """Best lattice point plus a certified bound on what the grid missed."""

    marginal: ActionMarginal
    f_best: float
    lipschitz_bound: float
    resolution: float
    points_evaluated: int

    @property
    def margin(self) -> float:
        """Certified gap: no simplex point beats f_best by more than this."""
        return self.lipschitz_bound * self.resolution

    @property
    def upper_bound(self) -> float:
        return self.f_best + self.margin


def simplex_lattice(num_actions: int, denominator: int) -> Iterator[tuple[int, ...]]:
    """Yield all compositions of ``denominator`` into ``num_actions`` parts.

    Ascending lexicographic order, so ties during a strict-improvement scan
    resolve to the lexicographically smallest weight vector.
    """
    if num_actions < 1 or denominator < 1:
        raise InvalidInput("need at least one action and a positive denominator")

    def rec(prefix: tuple[int, ...], remaining: int, slots: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            yield prefix + (remaining,)
            return
        for k in range(remaining + 1):
            yield from rec(prefix + (k,), remaining - k, slots - 1)

    yield from rec((), denominator, num_actions)


def grid_search_f(problem: Problem, spec: GridSpec | None = None) -> GridSearchResult:
    """Maximize the envelope over a simplex lattice, with an error certificate.

    The envelope f(nu) = sum_omega prior(omega) log(sum_alpha nu(alpha)
    exp(u(alpha, omega)/lam)) is concave with gradient exp(a_nu); along
    sum-zero directions only the gradient's oscillation matters, so for any
    nu and its nearest lattice point g,

        f(nu) <= f(g) + osc(exp(a_g)) / 2 * |nu - g|_1.

    Largest-remainder rounding places a lattice point within l1 distance
    m / (2 N) of any simplex point, so with pitch 1/N the true optimum
    exceeds f_best by at most L / N where

        L = lipschitz_bound = max_grid osc(exp(a)) * m / 4.

    Evaluation runs in the plain domain with a per-state shift, a different
    arithmetic route from the solver's weighted log-sum-exp.
    """
    spec = spec or GridSpec()
    m = problem.num_actions
    if m > spec.max_actions:
        raise TooManyActions(
            f"{m} actions exceeds the lattice cap of {spec.max_actions}"
        )
    pitch = spec.pitch_for(m)
    denom = max(1, round(1.0 / pitch))

    kernel = gibbs_kernel(problem)
    shift = kernel.max(axis=0)
    gain = np.exp(kernel - shift[None, :])  # rows: actions, columns: states
    prior = problem.prior

    best_f = -np.inf
    best_point: tuple[int, ...] | None = None
    max_osc = 0.0
    count = 0

    batch: list[tuple[int, ...]] = []

    def flush() -> None:
        nonlocal best_f, best_point, max_osc, count
        if not batch:
            return
        pts = np.array(batch, dtype=np.float64) / denom
        z = pts @ gain
        f_vals = (np.log(z) + shift[None, :]) @ prior
        grad = gain @ (prior / z).T  # actions x batch, entries exp(a)
        osc = grad.max(axis=0) - grad.min(axis=0)
        max_osc = max(max_osc, float(osc.max()))
        idx = int(np.argmax(f_vals))
        if f_vals[idx] > best_f:
            best_f = float(f_vals[idx])
            best_point = batch[idx]
        count += len(batch)
        batch.clear()

    for point in simplex_lattice(m, denom):
        batch.append(point)
        if len(batch) >= _BATCH_ROWS:
            flush()
    flush()

    assert best_point is not None
    weights = np.array(best_point, dtype=np.float64) / denom
    return GridSearchResult(
        marginal=ActionMarginal(weights),
        f_best=best_f,
        lipschitz_bound=float(max_osc * m / 4.0),
        resolution=1.0 / denom,
        points_evaluated=count,
    )


def exhaustive_mi(coupling: Coupling) -> float:
    """Mutual information by a plain double loop over joint entries.

    Pure Python floats, marginals accumulated by running sums, zero entries
    skipped under the 0 log 0 = 0 convention.  Deliberately shares no code
    with the vectorized functional it cross-checks.
    """
    joint = coupling.joint
    rows = [float(sum(joint[i, j] for j in range(joint.shape[1]))) for i in range(joint.shape[0])]
    cols = [float(sum(joint[i, j] for i in range(joint.shape[0]))) for j in range(joint.shape[1])]
    total = 0.0
    for i in range(joint.shape[0]):
        for j in range(joint.shape[1]):
            p = float(joint[i, j])
            if p > 0.0:
                total += p * math.log(p / (rows[i] * cols[j]))
    return max(total, 0.0)
