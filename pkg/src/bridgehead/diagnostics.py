"""Numerical certificates for solved instances.

Every function here checks one identity or inequality that an exact optimum
must satisfy, using arithmetic routes independent of the solver wherever
possible: finite differences against closed-form derivatives, plain summation
against log-domain evaluation, stored couplings against potential
reconstructions.  ``run_diagnostics`` bundles the checks into a report whose
entries carry the worst violation found and the tolerance it was held to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.special import logsumexp

from .bridge import (
    SinkhornConfig,
    additive_separability_gap,
    coupling_from_potentials,
    schrodinger_residual,
    sinkhorn_bridge,
)
from .core import (
    ActionMarginal,
    BridgeheadError,
    InvalidInput,
    Problem,
    gibbs_kernel,
    ri_objective,
    weighted_logsumexp,
)
from .solver import (
    Solution,
    action_potential,
    foc_residuals,
    log_partition,
    logit_policy,
)

__all__ = [
    "CheckResult",
    "DiagnosticReport",
    "PlateauResult",
    "BeliefFeasibility",
    "PosteriorNotNormalizable",
    "plateau_check",
    "envelope_raw",
    "gateaux_f",
    "gateaux_value",
    "gateaux_value_direction",
    "gateaux_value_state",
    "ilr_check",
    "belief_feasibility",
    "cumulant_errors",
    "cumulant_check",
    "average_free_energy",
    "free_energy_check",
    "gibbs_plateau_check",
    "run_diagnostics",
]


class PosteriorNotNormalizable(BridgeheadError):
    """A likelihood-ratio image has zero or non-finite total mass."""


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one certificate: worst violation against its tolerance."""

    name: str
    max_violation: float
    tolerance: float
    passed: bool
    details: str = ""


@dataclass(frozen=True)
class DiagnosticReport:
    """Ordered collection of certificate outcomes."""

    checks: tuple[CheckResult, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def __iter__(self):
        return iter(self.checks)

    def by_name(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


def _result(name: str, violation: float, tolerance: float, details: str = "") -> CheckResult:
    violation = float(violation)
    ok = bool(np.isfinite(violation) and violation <= tolerance)
    return CheckResult(name, violation, float(tolerance), ok, details)


# ---------------------------------------------------------------------------
# Plateau primitive
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlateauResult:
    """Outcome of a weighted plateau test with the worst offender named."""

    passed: bool
    witness: int
    max_violation: float
    level: float


def plateau_check(
    values,
    weights,
    tol: float,
    support_threshold: float = 1e-9,
) -> PlateauResult:
    """Check that ``values`` is a plateau of the measure ``weights``.

    Passes iff values <= level + tol everywhere and |values - level| <= tol on
    the support, where level is the maximum of values over entries whose
    weight exceeds ``support_threshold``.  The witness indexes the worst
    violation (the argmax of the violation profile, 0 on a clean pass).
    """
    v = np.asarray(values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if v.shape != w.shape or v.ndim != 1:
        raise InvalidInput("values and weights must be vectors of equal length")
    sup = w > support_threshold
    if not np.any(sup):
        raise InvalidInput("weights carry no support above threshold")
    level = float(v[sup].max())
    violation = np.maximum(v - level, 0.0)
    violation[sup] = np.abs(v[sup] - level)
    witness = int(np.argmax(violation))
    worst = float(violation[witness])
    return PlateauResult(worst <= tol, witness, worst, level)


# ---------------------------------------------------------------------------
# Derivative identities
# ---------------------------------------------------------------------------


def envelope_raw(problem: Problem, weights) -> float:
    """The envelope f evaluated on a raw weight vector, plain domain.

    Used by finite-difference oracles: differentiating f needs evaluations
    just outside the simplex, and the shifted plain-domain sum is a second
    arithmetic route besides the solver's weighted log-sum-exp.
    """
    w = np.asarray(weights, dtype=np.float64)
    kernel = gibbs_kernel(problem)
    shift = kernel.max(axis=0)
    z = w @ np.exp(kernel - shift[None, :])
    if np.any(z <= 0):
        raise InvalidInput("weights give a non-positive partition function")
    return float(problem.prior @ (np.log(z) + shift))


def gateaux_f(problem: Problem, nu: ActionMarginal, psi: ActionMarginal) -> float:
    """Directional derivative of the envelope f at nu toward psi.

    Equals E_prior[Z(.; psi) / Z(.; nu) - 1]; cross-check against finite
    differences of the envelope along nu + h (psi - nu).
    """
    lz_nu = log_partition(problem, nu)
    lz_psi = log_partition(problem, psi)
    return float(problem.prior @ np.expm1(lz_psi - lz_nu))


def _inner_value(problem: Problem, weights: np.ndarray, cfg: SinkhornConfig) -> float:
    return sinkhorn_bridge(problem, ActionMarginal(weights), cfg).value_primal


def gateaux_value(
    problem: Problem,
    nu: ActionMarginal,
    action: int,
    h: float = 1e-5,
    scheme: str = "forward",
    config: SinkhornConfig | None = None,
) -> tuple[float, float]:
    """Derivative of the inner value toward a point mass at ``action``.

    Analytic route: a(action) - E_nu[a] from the solved potential pair.
    Numeric route: a finite difference of the inner value along
    nu + h (delta_action - nu); "forward" uses two inner solves, "central"
    steps both ways and needs nu(action) >= h/(1+h) to stay in the simplex.
    Requires strictly positive nu (the identity's hypothesis).
    """
    if np.any(nu.weights <= 0):
        raise InvalidInput("gateaux_value requires a strictly positive marginal")
    return _gateaux_value_any(problem, nu, action, h, scheme, config)


def _gateaux_value_any(problem, nu, action, h, scheme, config):
    if not 0 <= action < problem.num_actions:
        raise InvalidInput(f"action index {action} out of range")
    cfg = config or SinkhornConfig(tolerance=1e-12)
    base = sinkhorn_bridge(problem, nu, cfg)
    analytic = float(base.potentials.action[action]) - float(
        nu.weights @ base.potentials.action
    )
    direction = -nu.weights.copy()
    direction[action] += 1.0
    if scheme == "forward":
        forward = _inner_value(problem, nu.weights + h * direction, cfg)
        numeric = (forward - base.value_primal) / h
    elif scheme == "central":
        back = nu.weights - h * direction
        if np.any(back < 0):
            raise InvalidInput("central step leaves the simplex; reduce h")
        numeric = (
            _inner_value(problem, nu.weights + h * direction, cfg)
            - _inner_value(problem, back, cfg)
        ) / (2.0 * h)
    else:
        raise InvalidInput(f"unknown scheme {scheme!r}")
    return analytic, numeric


def gateaux_value_direction(
    problem: Problem,
    nu: ActionMarginal,
    psi: ActionMarginal,
    h: float = 1e-5,
    scheme: str = "central",
    config: SinkhornConfig | None = None,
) -> tuple[float, float]:
    """Derivative of the inner value at nu toward another marginal psi.

    The inner value is linear in the action potential along marginal
    perturbations, so the analytic route is E_psi[a] - E_nu[a]; the numeric
    route differences the inner value along nu + h (psi - nu).  With the
    central scheme both endpoints must stay in the simplex, which holds for
    any interior nu once h is small.
    """
    cfg = config or SinkhornConfig(tolerance=1e-12)
    base = sinkhorn_bridge(problem, nu, cfg)
    analytic = float((psi.weights - nu.weights) @ base.potentials.action)
    direction = psi.weights - nu.weights
    if scheme == "forward":
        numeric = (_inner_value(problem, nu.weights + h * direction, cfg) - base.value_primal) / h
    elif scheme == "central":
        lo = nu.weights - h * direction
        hi = nu.weights + h * direction
        if np.any(lo < 0) or np.any(hi < 0):
            raise InvalidInput("central step leaves the simplex; reduce h")
        numeric = (_inner_value(problem, hi, cfg) - _inner_value(problem, lo, cfg)) / (2.0 * h)
    else:
        raise InvalidInput(f"unknown scheme {scheme!r}")
    return analytic, numeric


def gateaux_value_state(
    problem: Problem,
    nu: ActionMarginal,
    state: int,
    h: float = 1e-5,
    scheme: str = "forward",
    config: SinkhornConfig | None = None,
) -> tuple[float, float]:
    """Same identity on the prior side: derivative toward a state atom.

    Analytic route: b(state) - E_prior[b] at the solved potential pair;
    numeric route re-solves the inner problem with the prior tilted toward
    the atom.
    """
    if not 0 <= state < problem.num_states:
        raise InvalidInput(f"state index {state} out of range")
    cfg = config or SinkhornConfig(tolerance=1e-12)
    base = sinkhorn_bridge(problem, nu, cfg)
    analytic = float(base.potentials.state[state]) - float(
        problem.prior @ base.potentials.state
    )

    def value_at(step: float) -> float:
        prior = (1.0 - step) * problem.prior
        prior[state] += step
        tilted = Problem(
            problem.actions, problem.states, problem.utility, problem.lam, prior
        )
        return _inner_value(tilted, nu.weights, cfg)

    if scheme == "forward":
        numeric = (value_at(h) - base.value_primal) / h
    elif scheme == "central":
        numeric = (value_at(h) - value_at(-h)) / (2.0 * h)
    else:
        raise InvalidInput(f"unknown scheme {scheme!r}")
    return analytic, numeric


# ---------------------------------------------------------------------------
# Posterior structure
# ---------------------------------------------------------------------------


def ilr_check(problem: Problem, solution: Solution, tol: float = 1e-7) -> CheckResult:
    """Invariant-likelihood-ratio structure of the solved posteriors.

    Checks (i) the posterior over states after each supported action matches
    prior * exp(u/lam) / Z, and (ii) the likelihood-ratio sums
    sum_omega exp((u(alpha,.) - u(alpha',.))/lam) P(omega|alpha') stay at or
    below one, exactly one when alpha is itself supported, for each supported
    alpha'.  Posteriors come from the stored coupling, so corrupted couplings
    fail here.
    """
    kernel = gibbs_kernel(problem)
    lz = log_partition(problem, solution.marginal)
    formula = np.exp(np.log(problem.prior)[None, :] + kernel - lz[None, :])
    joint = solution.coupling.joint
    supported = list(solution.consideration_set)
    if not supported:
        return _result("ilr", np.inf, tol, "empty consideration set")
    worst = 0.0
    for alpha in supported:
        row_mass = joint[alpha].sum()
        if row_mass <= 0:
            return _result("ilr", np.inf, tol, f"supported action {alpha} has empty row")
        posterior = joint[alpha] / row_mass
        worst = max(worst, float(np.abs(posterior - formula[alpha]).max()))
        with np.errstate(divide="ignore"):
            log_posterior = np.log(posterior)
        ratio_sums = np.exp(
            logsumexp(kernel - kernel[alpha][None, :] + log_posterior[None, :], axis=1)
        )
        worst = max(worst, float(np.maximum(ratio_sums - 1.0, 0.0).max()))
        worst = max(worst, float(np.abs(ratio_sums[supported] - 1.0).max()))
    return _result("ilr", worst, tol, f"{len(supported)} supported actions")


@dataclass(frozen=True)
class BeliefFeasibility:
    """Outcome of the consideration-set feasibility test."""

    feasible: bool
    weights: np.ndarray | None
    residual: float


def belief_feasibility(
    problem: Problem,
    candidate_set,
    anchor: int,
    posterior_anchor,
    residual_tol: float = 1e-8,
) -> BeliefFeasibility:
    """Can ``candidate_set`` support the prior through ratio-mapped beliefs?

    The anchor posterior is pushed to every candidate action via the utility
    likelihood ratios exp((u(alpha,.) - u(anchor,.))/lam); feasibility asks
    for nonnegative weights on the candidate set, summing to one, that mix
    these images back to the prior.  Solved as nonnegative least squares; the
    reported residual is the sup norm of the constraint violation.

    Raises PosteriorNotNormalizable when an image has zero, non-finite, or
    overflowing total mass.
    """
    actions = [int(a) for a in candidate_set]
    if len(actions) == 0:
        raise InvalidInput("candidate set is empty")
    if anchor not in actions:
        raise InvalidInput("anchor must belong to the candidate set")
    post = np.asarray(posterior_anchor, dtype=np.float64)
    if post.shape != (problem.num_states,):
        raise InvalidInput("posterior_anchor length does not match states")
    if np.any(post <= 0) or not np.all(np.isfinite(post)):
        raise InvalidInput("posterior_anchor must be strictly positive and finite")

    kernel = gibbs_kernel(problem)
    log_post = np.log(post)
    images = np.empty((problem.num_states, len(actions)))
    for k, alpha in enumerate(actions):
        log_image = kernel[alpha] - kernel[anchor] + log_post
        log_mass = float(logsumexp(log_image))
        if not np.isfinite(log_mass) or log_mass > 300.0:
            raise PosteriorNotNormalizable(
                f"likelihood-ratio image of action {alpha} has log-mass {log_mass!r}"
            )
        images[:, k] = np.exp(log_image)

    system = np.vstack([images, np.ones((1, len(actions)))])
    target = np.concatenate([problem.prior, [1.0]])
    weights, _ = nnls(system, target)
    residual = float(np.abs(system @ weights - target).max())
    feasible = residual <= residual_tol
    return BeliefFeasibility(
        feasible=feasible,
        weights=weights if feasible else None,
        residual=residual,
    )


# ---------------------------------------------------------------------------
# Cumulant and free-energy identities
# ---------------------------------------------------------------------------


def _log_partition_at_beta(problem: Problem, weights: np.ndarray, beta: float) -> np.ndarray:
    return weighted_logsumexp(beta * problem.utility, weights, axis=0)


def cumulant_errors(
    problem: Problem, solution: Solution, h: float = 1e-4
) -> tuple[float, float, float]:
    """Worst-state errors of the three cumulant identities at the optimum.

    With the marginal held fixed, b(omega) = log Z(omega) is analytic in
    beta = 1/lam: its first beta-derivative is the conditional mean of u, its
    second the conditional variance, and beta * b'(beta) - b(omega) equals
    the information gain KL(P(.|omega) || nu) (equivalently minus the
    derivative of lam * b in lam).  Central differences in beta at step ``h``
    are compared against direct evaluations under the logit policy.  Returns
    (mean error, variance error, information-gain error).
    """
    weights = solution.marginal.weights
    beta = 1.0 / problem.lam
    b0 = _log_partition_at_beta(problem, weights, beta)
    b_plus = _log_partition_at_beta(problem, weights, beta + h)
    b_minus = _log_partition_at_beta(problem, weights, beta - h)
    fd_mean = (b_plus - b_minus) / (2.0 * h)
    fd_var = (b_plus - 2.0 * b0 + b_minus) / (h * h)

    cond = logit_policy(problem, solution.marginal)
    mean = (cond * problem.utility).sum(axis=0)
    var = (cond * problem.utility**2).sum(axis=0) - mean**2
    kernel = gibbs_kernel(problem)
    gain = (cond * (kernel - b0[None, :])).sum(axis=0)  # direct KL(P(.|w) || nu)

    mean_err = float(np.abs(fd_mean - mean).max())
    var_err = float(np.abs(fd_var - var).max())
    gain_err = float(np.abs((beta * fd_mean - b0) - gain).max())
    return mean_err, var_err, gain_err


def cumulant_check(
    problem: Problem, solution: Solution, h: float = 1e-4
) -> tuple[CheckResult, CheckResult, CheckResult]:
    """The three cumulant identities, each against its own tolerance.

    The mean is first-order exact up to O(h^2) curvature, so it gets 1e-6 at
    the default step; the variance estimate loses two orders to cancellation
    in the second difference (1e-4); the information-gain identity sits in
    between (1e-5).
    """
    mean_err, var_err, gain_err = cumulant_errors(problem, solution, h)
    return (
        _result("cumulant_mean", mean_err, 1e-6),
        _result("cumulant_variance", var_err, 1e-4),
        _result("cumulant_gain", gain_err, 1e-5),
    )


def average_free_energy(problem: Problem, conditionals, reference) -> float:
    """Prior-average of -E[u|omega] + lam * KL(Q(.|omega) || reference).

    ``conditionals`` is an actions x states column-stochastic matrix; the
    reference measure stays fixed (the solved marginal, for certificates).
    Conditionals escaping the support of the reference score +inf.
    """
    cond = np.asarray(conditionals, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    mean_u = (cond * problem.utility).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(cond) - np.log(ref)[:, None]
        terms = np.where(cond > 0, cond * log_ratio, 0.0)
    divergence = terms.sum(axis=0)
    return float(problem.prior @ (-mean_u + problem.lam * divergence))


def free_energy_check(
    problem: Problem,
    solution: Solution,
    trials: int = 100,
    seed: int = 0,
    tol: float = 1e-9,
) -> CheckResult:
    """Solved conditionals minimize average free energy among plausible rivals.

    Each trial exponentially tilts the solved conditional policy with
    state-by-state Gaussian noise and renormalizes columns (keeping the prior
    marginal fixed), then verifies the average free energy does not drop
    below the solved one by more than ``tol``.
    """
    joint = solution.coupling.joint
    col = joint.sum(axis=0)
    if np.any(col <= 0):
        return _result("free_energy", np.inf, tol, "coupling has empty states")
    cond = joint / col[None, :]
    reference = solution.marginal.weights
    base = average_free_energy(problem, cond, reference)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        scale = rng.uniform(0.05, 0.8)
        tilt = cond * np.exp(rng.normal(0.0, scale, size=cond.shape))
        tilt /= tilt.sum(axis=0, keepdims=True)
        rival = average_free_energy(problem, tilt, reference)
        worst = max(worst, base - rival)
    return _result("free_energy", worst, tol, f"{trials} tilted rivals, base {base:.6f}")


# ---------------------------------------------------------------------------
# Coupling-level plateau
# ---------------------------------------------------------------------------


def gibbs_plateau_check(problem: Problem, solution: Solution, tol: float = 1e-7) -> CheckResult:
    """State by state, u/lam - log(P(alpha|omega)/nu(alpha)) sits at b(omega).

    Evaluated on the stored coupling across the consideration set, so edits
    to the coupling surface here.
    """
    joint = solution.coupling.joint
    col = joint.sum(axis=0)
    if np.any(col <= 0):
        return _result("gibbs_plateau", np.inf, tol, "coupling has empty states")
    sup = list(solution.consideration_set)
    if not sup:
        return _result("gibbs_plateau", np.inf, tol, "empty consideration set")
    cond = joint[sup] / col[None, :]
    weights = solution.marginal.weights[sup]
    kernel = gibbs_kernel(problem)[sup]
    with np.errstate(divide="ignore"):
        values = kernel - np.log(cond) + np.log(weights)[:, None]
    values = np.where(np.isfinite(values), values, np.inf)
    worst = float(np.abs(values - solution.potentials.state[None, :]).max())
    return _result("gibbs_plateau", worst, tol, f"{len(sup)} actions x {len(col)} states")


# ---------------------------------------------------------------------------
# Bundled report
# ---------------------------------------------------------------------------


def run_diagnostics(
    problem: Problem,
    solution: Solution,
    seed: int = 20240817,
    directions: int = 10,
    fd_step: float = 1e-5,
    cumulant_step: float = 1e-4,
    free_energy_trials: int = 100,
    sinkhorn: SinkhornConfig | None = None,
) -> DiagnosticReport:
    """Run every certificate against a solved instance.

    Assumes the solution was produced at (or re-solved to) tight tolerances;
    the fixed entry tolerances are calibrated for a first-order plateau near
    1e-9 and marginal residuals near 1e-12.
    """
    cfg = sinkhorn or SinkhornConfig(tolerance=1e-12)
    rng = np.random.default_rng(seed)
    nu = solution.marginal
    weights = nu.weights
    checks: list[CheckResult] = []

    fresh = sinkhorn_bridge(problem, nu, cfg)
    checks.append(_result("marginal_residual", fresh.residual, 1e-10))
    checks.append(_result("duality_gap", fresh.duality_gap, 1e-8))
    checks.append(
        _result(
            "additive_separability",
            additive_separability_gap(fresh, nu, problem.prior),
            1e-8,
        )
    )
    res_a, res_b = schrodinger_residual(problem, nu, fresh.potentials)
    checks.append(_result("schrodinger_equations", max(res_a, res_b), 1e-9))

    try:
        rebuilt = coupling_from_potentials(problem, nu, solution.potentials)
        rebuild_gap = float(np.abs(rebuilt.joint - solution.coupling.joint).max())
        checks.append(_result("coupling_consistency", rebuild_gap, 1e-8))
    except BridgeheadError as err:
        checks.append(CheckResult("coupling_consistency", np.inf, 1e-8, False, str(err)))

    residuals = foc_residuals(problem, nu)
    candidate = action_potential(problem, nu)
    sup = weights > 1e-9
    kt_violation = max(
        float(np.abs(residuals[sup]).max()) if np.any(sup) else np.inf,
        float(np.maximum(residuals, 0.0).max()),
    )
    signs_agree = bool(np.all(np.sign(candidate) == np.sign(residuals)))
    witness = plateau_check(residuals, weights, 1e-7).witness
    checks.append(
        _result(
            "kt_plateau",
            kt_violation,
            1e-7,
            f"signs_agree={signs_agree}, worst_index={witness}",
        )
    )
    checks.append(gibbs_plateau_check(problem, solution))
    checks.append(ilr_check(problem, solution))
    checks.extend(cumulant_check(problem, solution, cumulant_step))
    checks.append(free_energy_check(problem, solution, free_energy_trials, seed))

    worst_f = 0.0
    for _ in range(directions):
        psi_w = rng.dirichlet(np.ones(problem.num_actions))
        analytic = gateaux_f(problem, nu, ActionMarginal(psi_w))
        step = fd_step * (psi_w - weights)
        numeric = (
            envelope_raw(problem, weights + step)
            - envelope_raw(problem, weights - step)
        ) / (2.0 * fd_step)
        worst_f = max(worst_f, abs(analytic - numeric))
    checks.append(_result("gateaux_f", worst_f, 1e-3, f"{directions} random directions"))

    probe = [
        int(i)
        for i in solution.consideration_set
        if weights[int(i)] >= max(10.0 * fd_step, 1e-4)
    ][:3]
    worst_v = 0.0
    for alpha in probe:
        analytic, numeric = _gateaux_value_any(problem, nu, alpha, fd_step, "central", cfg)
        worst_v = max(worst_v, abs(analytic - numeric))
    checks.append(
        _result("gateaux_value", worst_v, 1e-3, f"central differences at {probe}")
    )

    try:
        touch_gap = abs(solution.f_value - ri_objective(problem, solution.coupling))
        checks.append(
            _result(
                "envelope_touch",
                touch_gap,
                1e-6,
                "f meets the attained objective at the optimum",
            )
        )
    except BridgeheadError as err:
        checks.append(CheckResult("envelope_touch", np.inf, 1e-6, False, str(err)))
    return DiagnosticReport(tuple(checks))
