"""Outer problem: choose the action marginal maximizing the inner value.

The inner value V(nu) is dominated by the envelope

    f(nu) = sum_omega prior(omega) * log Z(omega; nu),
    Z(omega; nu) = sum_alpha nu(alpha) * exp(u(alpha, omega) / lam),

with equality exactly at maximizers, so the outer problem reduces to
maximizing the smooth concave functional f over the simplex.  The iteration
used here multiplies nu entrywise by exp(a) where a is the candidate action
potential read off the fixed-point system at b = log Z:

    b_n = log Z(.; nu_n)
    a_n(alpha) = log sum_omega prior(omega) exp(u/lam - b_n(omega))
    log nu_{n+1} = log nu_n + a_n

One step is the classical multiplicative update for channel-capacity-style
problems and simultaneously one augmented scaling sweep in which the row
marginal is refreshed rather than rescaled; f never decreases along it.  At a
fixed point the residuals r = exp(a) - 1 vanish on the support of nu and are
nonpositive off it, which is the optimality plateau being certified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .bridge import BridgeResult, SinkhornConfig, sinkhorn_bridge
from .core import (
    ActionMarginal,
    BridgeheadError,
    Coupling,
    InvalidInput,
    Potentials,
    Problem,
    gibbs_kernel,
    weighted_logsumexp,
)

__all__ = [
    "SolverConfig",
    "Solution",
    "SolverNotConverged",
    "jensen_f",
    "log_partition",
    "action_potential",
    "foc_residuals",
    "ba_step",
    "logit_policy",
    "solve",
]

_STALL_LIMIT = 256  # consecutive non-improving sweeps tolerated before bailing


class SolverNotConverged(BridgeheadError):
    """Iteration budget exhausted; carries the best solution reached so far."""

    def __init__(self, message: str, solution: "Solution"):
        super().__init__(message)
        self.solution = solution


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules and initialization for the outer iteration.

    The loop stops once the f increment falls below ``f_tolerance`` AND the
    optimality plateau holds at ``foc_tolerance`` (|r| on the support, r below
    off it, support meaning mass above ``support_threshold``); it also stops
    on exact numerical stagnation.  ``init`` is one of "uniform", "random"
    (seeded), or "custom" with ``initial_marginal`` supplied.
    """

    f_tolerance: float = 1e-12
    foc_tolerance: float = 1e-7
    support_threshold: float = 1e-9
    max_iterations: int = 100_000
    init: str = "uniform"
    seed: int | None = None
    initial_marginal: ActionMarginal | None = None
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)

    def __post_init__(self) -> None:
        for name in ("f_tolerance", "foc_tolerance", "support_threshold"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInput(f"{name} must be > 0, got {value!r}")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")
        if self.init not in ("uniform", "random", "custom"):
            raise InvalidInput(f"unknown init {self.init!r}")
        if self.init == "custom" and self.initial_marginal is None:
            raise InvalidInput("init='custom' requires initial_marginal")


@dataclass(frozen=True)
class Solution:
    """Solved outer problem: optimal marginal plus certified inner state."""

    marginal: ActionMarginal
    coupling: Coupling
    potentials: Potentials
    f_value: float
    foc_residuals: np.ndarray
    consideration_set: tuple[int, ...]
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        r = np.array(self.foc_residuals, dtype=np.float64)
        r.setflags(write=False)
        object.__setattr__(self, "foc_residuals", r)
        object.__setattr__(
            self, "consideration_set", tuple(int(i) for i in self.consideration_set)
        )


# ---------------------------------------------------------------------------
# Functionals of one marginal
# ---------------------------------------------------------------------------


def log_partition(problem: Problem, nu: ActionMarginal) -> np.ndarray:
    """log Z(omega; nu) for every state, computed as a weighted log-sum-exp."""
    _check(problem, nu)
    lz = weighted_logsumexp(gibbs_kernel(problem), nu.weights, axis=0)
    if not np.all(np.isfinite(lz)):
        raise InvalidInput("degenerate marginal: log partition is not finite")
    return lz


def jensen_f(problem: Problem, nu: ActionMarginal) -> float:
    """The concave envelope f(nu) = E_prior[log Z(.; nu)].

    Dominates the inner value everywhere and touches it exactly at optimal
    marginals, so maximizing f solves the outer problem.
    """
    return float(problem.prior @ log_partition(problem, nu))


def action_potential(problem: Problem, nu: ActionMarginal) -> np.ndarray:
    """Candidate action potential a_nu at b = log Z.

    a_nu(alpha) = log sum_omega prior(omega) exp(u/lam - log Z(omega)); equals
    log(1 + r) for the first-order residual r, so the two share signs exactly.
    """
    lz = log_partition(problem, nu)
    return logsumexp(
        gibbs_kernel(problem) + np.log(problem.prior)[None, :] - lz[None, :],
        axis=1,
    )


def foc_residuals(problem: Problem, nu: ActionMarginal) -> np.ndarray:
    """First-order residuals r(alpha) = E_prior[exp(u/lam - log Z)] - 1.

    Zero on the support of an optimal marginal, nonpositive everywhere at an
    optimum.  Computed as expm1 of the candidate potential so that the sign
    matches sign(a_nu) bit for bit.
    """
    return np.expm1(action_potential(problem, nu))


def ba_step(problem: Problem, nu: ActionMarginal) -> ActionMarginal:
    """One multiplicative update: log nu' = log nu + a_nu, renormalized.

    Equivalent to an augmented scaling sweep that refreshes the row marginal;
    f(nu') >= f(nu) always, with equality only at fixed points, and fixed
    points are exactly the marginals whose residuals form a plateau.
    """
    a = action_potential(problem, nu)
    with np.errstate(divide="ignore"):
        log_next = np.log(nu.weights) + a
    log_next -= logsumexp(log_next)
    return ActionMarginal(np.exp(log_next))


def logit_policy(problem: Problem, nu: ActionMarginal) -> np.ndarray:
    """Conditional choice probabilities P(alpha | omega) = nu e^{u/lam} / Z.

    Columns index states and each sums to one.
    """
    lz = log_partition(problem, nu)
    with np.errstate(divide="ignore"):
        log_cond = np.log(nu.weights)[:, None] + gibbs_kernel(problem) - lz[None, :]
    return np.exp(log_cond)


def _check(problem: Problem, nu: ActionMarginal) -> None:
    if len(nu) != problem.num_actions:
        raise InvalidInput(
            f"marginal length {len(nu)} does not match {problem.num_actions} actions"
        )


def _plateau_ok(residuals: np.ndarray, weights: np.ndarray, cfg: SolverConfig) -> bool:
    sup = weights > cfg.support_threshold
    if np.any(sup) and float(np.abs(residuals[sup]).max()) > cfg.foc_tolerance:
        return False
    return float(residuals.max()) <= cfg.foc_tolerance


# ---------------------------------------------------------------------------
# Outer iteration
# ---------------------------------------------------------------------------


def _initial_weights(problem: Problem, cfg: SolverConfig) -> np.ndarray:
    m = problem.num_actions
    if cfg.init == "uniform":
        return np.full(m, 1.0 / m)
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        w = rng.gamma(1.0, 1.0, size=m)
        return w / w.sum()
    custom = cfg.initial_marginal
    if len(custom) != m:
        raise InvalidInput(
            f"initial_marginal length {len(custom)} does not match {m} actions"
        )
    return custom.weights.copy()


def solve(problem: Problem, config: SolverConfig | None = None) -> Solution:
    """Maximize f over the simplex and certify the result.

    Iterates the multiplicative update from the configured start, stopping
    once the f increment drops below f_tolerance with the optimality plateau
    holding at foc_tolerance (or on exact stagnation).  The inner problem is
    then re-solved at the final marginal to produce the coupling and the
    certified potential pair.  Raises SolverNotConverged, carrying the best
    solution found, when max_iterations is exhausted first.

    The update never moves mass between actions with identical utility rows,
    so with duplicated actions the marginal keeps its initial split while the
    state partition function still converges to the common optimum.
    """
    cfg = config or SolverConfig()
    kernel = gibbs_kernel(problem)
    prior = problem.prior

    # stabilized plain-domain sweep: exp(kernel) with a per-state shift is a
    # shared-max log-sum-exp, exact in the same places and much faster
    col_shift = kernel.max(axis=0)
    gain = np.exp(kernel - col_shift[None, :])

    w = _initial_weights(problem, cfg)
    prev_f = -np.inf
    iterations = 0
    stopped = False
    stall = 0
    for iterations in range(1, cfg.max_iterations + 1):
        z = w @ gain                      # Z(omega) * exp(-col_shift)
        f_val = float(prior @ (np.log(z) + col_shift))
        ratio = gain @ (prior / z)        # exp(a_candidate)
        r = ratio - 1.0
        sup = w > cfg.support_threshold
        plateau = (
            not np.any(sup) or float(np.abs(r[sup]).max()) <= cfg.foc_tolerance
        ) and float(r.max()) <= cfg.foc_tolerance
        if iterations > 1 and (f_val - prev_f) < cfg.f_tolerance and plateau:
            stopped = True
            break
        w_next = w * ratio
        w_next /= w_next.sum()
        if np.array_equal(w_next, w):
            stopped = True  # numerically stationary; no progress possible
            break
        if iterations > 1 and f_val <= prev_f:
            stall += 1
            if stall >= _STALL_LIMIT:
                stopped = True
                break
        else:
            stall = 0
        prev_f = f_val
        w = w_next
    exhausted = not stopped

    # weights that decayed to the subnormal range are numerically dead;
    # flush them so downstream log-domain code sees exact zeros
    w[w < 1e-300] = 0.0
    w = w / w.sum()
    nu_star = ActionMarginal(w)
    residuals = foc_residuals(problem, nu_star)
    converged = _plateau_ok(residuals, w, cfg) and not exhausted
    inner: BridgeResult = sinkhorn_bridge(problem, nu_star, cfg.sinkhorn)
    solution = Solution(
        marginal=nu_star,
        coupling=inner.coupling,
        potentials=inner.potentials,
        f_value=jensen_f(problem, nu_star),
        foc_residuals=residuals,
        consideration_set=tuple(int(i) for i in np.flatnonzero(w > cfg.support_threshold)),
        iterations=iterations,
        converged=converged,
    )
    if exhausted:
        raise SolverNotConverged(
            f"no convergence after {iterations} iterations "
            f"(f increment {f_val - prev_f:.3e}, plateau={plateau})",
            solution,
        )
    return solution
