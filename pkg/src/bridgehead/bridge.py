"""Inner problem: entropic matching of a fixed action marginal to the prior.

For a fixed action marginal ``nu`` the inner value is

    V(nu) = sup over couplings P with marginals (nu, prior) of
            sum P * u/lam  -  KL(P || nu x prior)

The unique maximizer has density exp(u/lam - a(alpha) - b(omega)) relative to
the product ``nu x prior``, where the dual pair (a, b) solves the fixed-point
system

    exp(a(alpha)) = sum_omega prior(omega) * exp(u/lam - b(omega))
    exp(b(omega)) = sum_alpha nu(alpha)    * exp(u/lam - a(alpha))

Alternating the two updates is Sinkhorn matrix scaling.  In log domain each
half-update is one weighted log-sum-exp, overflow-safe for any lam; the plain
scaling form is kept behind a config flag for benchmarking on well-scaled
kernels.  Convergence is measured as the worst sup-norm violation of the two
marginal constraints by the implied coupling.

Actions with nu(alpha) = 0 are excluded before iterating and reinserted as
zero coupling rows afterwards; their action potential is defined by reading
the fixed-point equation at the converged b.  The returned potentials are
translated so that E_nu[a] = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

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
    "SinkhornConfig",
    "BridgeResult",
    "BridgeNotConverged",
    "PotentialsInconsistent",
    "sinkhorn_bridge",
    "schrodinger_residual",
    "coupling_from_potentials",
    "additive_separability_gap",
]

_MASS_GATE = 1e-6  # coupling_from_potentials rejects beyond this mass defect


class PotentialsInconsistent(BridgeheadError):
    """Potentials do not reproduce a unit-mass coupling within tolerance."""


class BridgeNotConverged(BridgeheadError):
    """Iteration budget exhausted; carries the best result reached so far."""

    def __init__(self, iterations: int, residual: float, result: "BridgeResult"):
        super().__init__(
            f"no convergence after {iterations} sweeps, marginal residual {residual:.3e}"
        )
        self.iterations = iterations
        self.residual = residual
        self.result = result


@dataclass(frozen=True)
class SinkhornConfig:
    """Knobs for the alternating-scaling iteration.

    tolerance: sup-norm marginal violation at which iteration stops.
    max_iterations: full sweeps (one b-update plus one a-update) allowed.
    log_domain: run updates as log-sum-exp (default) or plain scaling.
    """

    tolerance: float = 1e-10
    max_iterations: int = 10_000
    log_domain: bool = True

    def __post_init__(self) -> None:
        if not (np.isfinite(self.tolerance) and self.tolerance > 0):
            raise InvalidInput(f"tolerance must be > 0, got {self.tolerance!r}")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")


@dataclass(frozen=True)
class BridgeResult:
    """Converged (or best-so-far) state of the inner problem at one marginal.

    value_primal integrates u/lam against the coupling and subtracts the
    divergence from the product measure term by term; value_dual evaluates the
    dual objective sum(a nu) + sum(b prior) + mass - 1 at the potentials.  The
    two are computed along independent arithmetic paths, so their gap is a
    genuine convergence certificate.
    """

    coupling: Coupling
    potentials: Potentials
    value_primal: float
    value_dual: float
    iterations: int
    residual: float

    @property
    def duality_gap(self) -> float:
        return abs(self.value_primal - self.value_dual)


def _check_nu(problem: Problem, nu: ActionMarginal) -> None:
    if len(nu) != problem.num_actions:
        raise InvalidInput(
            f"marginal length {len(nu)} does not match {problem.num_actions} actions"
        )


def sinkhorn_bridge(
    problem: Problem,
    nu: ActionMarginal,
    config: SinkhornConfig | None = None,
    initial_action: np.ndarray | None = None,
) -> BridgeResult:
    """Solve the inner problem at ``nu`` by alternating scaling.

    Each sweep updates b from a, then a from b, and measures the sup-norm
    marginal violation of the implied coupling.  The limit does not depend on
    the start; ``initial_action`` merely warm-starts a.

    Raises BridgeNotConverged (carrying the best-so-far BridgeResult) when the
    sweep budget runs out above tolerance.
    """
    cfg = config or SinkhornConfig()
    _check_nu(problem, nu)

    kernel = gibbs_kernel(problem)
    weights = nu.weights
    prior = problem.prior
    sup = weights > 0
    ks = kernel[sup]
    ws = weights[sup]

    a0 = np.zeros(int(sup.sum()))
    if initial_action is not None:
        init = np.asarray(initial_action, dtype=np.float64)
        if init.shape != (problem.num_actions,) or not np.all(np.isfinite(init)):
            raise InvalidInput("initial_action must be a finite length-m vector")
        a0 = init[sup].copy()

    if cfg.log_domain:
        a_s, b, coupling_s, mass, iterations, residual, converged = _sweep_log(
            ks, ws, prior, a0, cfg
        )
    else:
        a_s, b, coupling_s, mass, iterations, residual, converged = _sweep_plain(
            ks, ws, prior, a0, cfg
        )

    result = _assemble(problem, nu, sup, a_s, b, coupling_s, mass, iterations, residual)
    if not converged:
        raise BridgeNotConverged(iterations, residual, result)
    return result


def _sweep_log(ks, ws, prior, a, cfg):
    """Log-domain sweeps; returns support-sized pieces plus loop telemetry."""
    row_part = ks + np.log(ws)[:, None]       # log nu + u/lam
    col_part = ks + np.log(prior)[None, :]    # log prior + u/lam
    b = np.zeros(ks.shape[1])
    converged = False
    iterations = 0
    residual = np.inf
    coupling = None
    mass = np.nan
    for iterations in range(1, cfg.max_iterations + 1):
        b = logsumexp(row_part - a[:, None], axis=0)
        a = logsumexp(col_part - b[None, :], axis=1)
        log_coupling = row_part - a[:, None] + (np.log(prior) - b)[None, :]
        raw = np.exp(log_coupling)
        mass = float(raw.sum())
        coupling = raw / mass
        residual = _marginal_residual(coupling, ws, prior)
        if residual <= cfg.tolerance:
            converged = True
            break
    return a, b, coupling, mass, iterations, residual, converged


def _sweep_plain(ks, ws, prior, a, cfg):
    """Plain scaling sweeps; faithful but overflow-prone for rough kernels."""
    gain = np.exp(ks)
    s = np.exp(-a)
    converged = False
    iterations = 0
    residual = np.inf
    coupling = None
    mass = np.nan
    t = np.ones(ks.shape[1])
    for iterations in range(1, cfg.max_iterations + 1):
        t = 1.0 / (gain.T @ (ws * s))
        s = 1.0 / (gain @ (prior * t))
        raw = (ws * s)[:, None] * gain * (prior * t)[None, :]
        mass = float(raw.sum())
        coupling = raw / mass
        residual = _marginal_residual(coupling, ws, prior)
        if residual <= cfg.tolerance:
            converged = True
            break
    with np.errstate(divide="ignore"):
        a = -np.log(s)
        b = -np.log(t)
    return a, b, coupling, mass, iterations, residual, converged


def _marginal_residual(coupling, ws, prior) -> float:
    row = float(np.abs(coupling.sum(axis=1) - ws).max())
    col = float(np.abs(coupling.sum(axis=0) - prior).max())
    return max(row, col)


def _assemble(problem, nu, sup, a_s, b, coupling_s, mass, iterations, residual):
    kernel = gibbs_kernel(problem)
    prior = problem.prior
    weights = nu.weights

    # extend a to excluded actions by reading the fixed-point equation at b
    a_full = np.empty(problem.num_actions)
    a_full[sup] = a_s
    off = ~sup
    if np.any(off):
        a_full[off] = logsumexp(
            kernel[off] + np.log(prior)[None, :] - b[None, :], axis=1
        )

    # translate so that E_nu[a] = 0 (leaves a + b, hence the coupling, alone)
    shift = float(weights[sup] @ a_s)
    a_full = a_full - shift
    b = b + shift

    full = np.zeros((problem.num_actions, problem.num_states))
    full[sup] = coupling_s

    # primal: integrate u/lam and subtract the divergence term by term
    mask = coupling_s > 0
    log_product = np.log(weights[sup])[:, None] + np.log(prior)[None, :]
    kl = float(
        np.sum(
            coupling_s[mask]
            * (np.log(coupling_s[mask]) - log_product[mask])
        )
    )
    payoff = float(np.sum(coupling_s * kernel[sup]))
    value_primal = payoff - kl

    # dual: evaluate the potentials; mass is the pre-normalization total
    value_dual = (
        float(a_full @ weights) + float(b @ prior) + mass - 1.0
    )

    return BridgeResult(
        coupling=Coupling(full),
        potentials=Potentials(action=a_full, state=b),
        value_primal=value_primal,
        value_dual=value_dual,
        iterations=iterations,
        residual=residual,
    )


def schrodinger_residual(
    problem: Problem, nu: ActionMarginal, potentials: Potentials
) -> tuple[float, float]:
    """Sup-norm violations of the two fixed-point equations, in log domain.

    Returns (action-equation residual over all actions, state-equation
    residual over all states).  Both are ~0 at potentials returned by
    sinkhorn_bridge; perturbing either potential shows up here directly.
    """
    _check_nu(problem, nu)
    kernel = gibbs_kernel(problem)
    a = potentials.action
    b = potentials.state
    a_eq = logsumexp(kernel + np.log(problem.prior)[None, :] - b[None, :], axis=1)
    b_eq = weighted_logsumexp(kernel - a[:, None], nu.weights, axis=0)
    res_a = float(np.abs(a - a_eq).max())
    res_b = float(np.abs(b - b_eq).max())
    return res_a, res_b


def coupling_from_potentials(
    problem: Problem, nu: ActionMarginal, potentials: Potentials
) -> Coupling:
    """Materialize the coupling nu x prior x exp(u/lam - a - b).

    The potentials must reproduce total mass 1 within 1e-6, otherwise
    PotentialsInconsistent is raised; the tiny remaining defect is projected
    out so the result is an exact unit-mass Coupling.
    """
    _check_nu(problem, nu)
    kernel = gibbs_kernel(problem)
    with np.errstate(over="ignore"):
        density = np.exp(
            kernel - potentials.action[:, None] - potentials.state[None, :]
        )
    joint = nu.weights[:, None] * problem.prior[None, :] * density
    mass = float(joint.sum())
    if not np.isfinite(mass) or abs(mass - 1.0) > _MASS_GATE:
        raise PotentialsInconsistent(
            f"potentials give total mass {mass!r}, expected 1 within {_MASS_GATE}"
        )
    return Coupling(joint / mass)


def additive_separability_gap(
    result: BridgeResult, nu: ActionMarginal, prior: np.ndarray
) -> float:
    """|value_primal - (sum a nu + sum b prior)|.

    The inner value splits additively into the two potential integrals; the
    defect at a converged result is residual-sized.
    """
    split = float(result.potentials.action @ nu.weights) + float(
        result.potentials.state @ np.asarray(prior)
    )
    return abs(result.value_primal - split)
