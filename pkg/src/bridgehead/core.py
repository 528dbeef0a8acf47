"""Domain types, validation, and elementary functionals.

The objects here describe a finite information-constrained choice problem: a
decision maker picks a joint distribution over actions and states whose state
marginal is pinned to a prior, trading expected utility against the mutual
information between action and state.  Everything downstream (the inner
matrix-scaling solver, the outer marginal iteration, the diagnostics) consumes
the immutable types defined in this module.

Conventions: utilities are in utils, information in nats, and ``lam`` converts
between them (utils per nat).  ``0 * log 0`` is 0 throughout.  Probability
sums are enforced at 1e-12 on construction; cross-checks between
independently computed quantities use looser, documented tolerances.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "BridgeheadError",
    "InvalidInput",
    "BayesPlausibilityViolated",
    "Problem",
    "ActionMarginal",
    "Coupling",
    "Potentials",
    "ValidationIssue",
    "validate",
    "drop_zero_prior_states",
    "gibbs_kernel",
    "weighted_logsumexp",
    "mutual_information",
    "ri_objective",
]

SIMPLEX_ATOL = 1e-12   # construction-time tolerance on probability vectors
MASS_ATOL = 1e-10      # coupling total-mass tolerance
BAYES_ATOL = 1e-8      # tolerance on the state marginal in ri_objective


class BridgeheadError(Exception):
    """Base class for all library errors."""


class InvalidInput(BridgeheadError, ValueError):
    """Malformed argument: bad shape, non-probability vector, wrong length."""


class BayesPlausibilityViolated(BridgeheadError):
    """State marginal of a coupling deviates from the prior beyond tolerance."""


def _readonly(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    """A finite choice problem with an information-processing cost.

    Attributes:
        actions: action labels, length m.
        states: state labels, length n.
        utility: m x n payoff matrix in utils; row = action, column = state.
        lam: information cost in utils per nat; must be > 0 to be solvable.
        prior: probability vector over states, length n, strictly positive.

    Construction only enforces shape consistency.  Domain conditions (positive
    ``lam``, simplex prior, finite utilities, nonempty action set) are reported
    by :func:`validate` so that callers can collect every defect at once.
    """

    actions: tuple[str, ...]
    states: tuple[str, ...]
    utility: np.ndarray
    lam: float
    prior: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(str(a) for a in self.actions))
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        utility = _readonly(self.utility)
        prior = _readonly(self.prior)
        if utility.ndim != 2:
            raise InvalidInput(f"utility must be a matrix, got ndim={utility.ndim}")
        if utility.shape != (len(self.actions), len(self.states)):
            raise InvalidInput(
                f"utility shape {utility.shape} does not match "
                f"{len(self.actions)} actions x {len(self.states)} states"
            )
        if prior.ndim != 1 or prior.shape[0] != len(self.states):
            raise InvalidInput(
                f"prior length {prior.shape} does not match {len(self.states)} states"
            )
        object.__setattr__(self, "utility", utility)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "prior", prior)

    @property
    def num_actions(self) -> int:
        return len(self.actions)

    @property
    def num_states(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class ActionMarginal:
    """Probability vector over actions: the outer-problem decision variable."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = _readonly(self.weights)
        if w.ndim != 1 or w.shape[0] < 1:
            raise InvalidInput("weights must be a nonempty vector")
        if not np.all(np.isfinite(w)):
            raise InvalidInput("weights must be finite")
        if np.any(w < 0):
            raise InvalidInput(f"weights must be nonnegative, min={w.min()}")
        total = float(w.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise InvalidInput(f"weights must sum to 1 within {SIMPLEX_ATOL}, got {total!r}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, num_actions: int) -> "ActionMarginal":
        return cls(np.full(num_actions, 1.0 / num_actions))

    @classmethod
    def dirac(cls, num_actions: int, index: int) -> "ActionMarginal":
        w = np.zeros(num_actions)
        w[index] = 1.0
        return cls(w)

    @classmethod
    def from_weights(cls, values, normalize: bool = False) -> "ActionMarginal":
        w = np.asarray(values, dtype=np.float64)
        if normalize:
            total = w.sum()
            if not np.isfinite(total) or total <= 0:
                raise InvalidInput("cannot normalize weights with non-positive total")
            w = w / total
        return cls(w)

    def support(self, threshold: float = 0.0) -> np.ndarray:
        """Indices of actions with weight strictly above ``threshold``."""
        return np.flatnonzero(self.weights > threshold)

    def __len__(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Coupling:
    """Joint probability matrix over actions x states."""

    joint: np.ndarray

    def __post_init__(self) -> None:
        j = _readonly(self.joint)
        if j.ndim != 2:
            raise InvalidInput("joint must be a matrix")
        if not np.all(np.isfinite(j)):
            raise InvalidInput("joint must be finite")
        if np.any(j < 0):
            raise InvalidInput(f"joint must be nonnegative, min={j.min()}")
        mass = float(j.sum())
        if abs(mass - 1.0) > MASS_ATOL:
            raise InvalidInput(f"joint mass must be 1 within {MASS_ATOL}, got {mass!r}")
        object.__setattr__(self, "joint", j)

    @property
    def action_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=1)

    @property
    def state_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)


@dataclass(frozen=True)
class Potentials:
    """Dual pair attached to the two marginal constraints, in nats.

    ``action[i]`` and ``state[j]`` enter the optimal coupling through the
    density exp(u/lam - action - state) relative to the product measure.  The
    pair is unique only up to a translation (action + c, state - c); the
    stored convention fixes the translation by E_nu[action] = 0.
    """

    action: np.ndarray
    state: np.ndarray
    normalization: str = "E_nu[action]=0"

    def __post_init__(self) -> None:
        a = _readonly(self.action)
        b = _readonly(self.state)
        if a.ndim != 1 or b.ndim != 1:
            raise InvalidInput("potentials must be vectors")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidInput("potentials must be finite")
        object.__setattr__(self, "action", a)
        object.__setattr__(self, "state", b)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationIssue:
    """One violated domain condition, identified by a stable code."""

    code: str
    message: str


def validate(problem: Problem) -> list[ValidationIssue]:
    """Collect every violated domain condition of ``problem``.

    Returns an empty list when the instance is solvable.  Codes:
    ``EmptyActionSet``, ``NonPositiveLambda``, ``PriorNotSimplex``,
    ``NonFiniteUtility``.
    """
    issues: list[ValidationIssue] = []
    if problem.num_actions == 0:
        issues.append(ValidationIssue("EmptyActionSet", "problem has no actions"))
    if not np.isfinite(problem.lam) or problem.lam <= 0:
        issues.append(
            ValidationIssue(
                "NonPositiveLambda",
                f"information cost must be finite and > 0, got {problem.lam!r}",
            )
        )
    prior = problem.prior
    if not np.all(np.isfinite(prior)):
        issues.append(ValidationIssue("PriorNotSimplex", "prior has non-finite entries"))
    else:
        if np.any(prior <= 0):
            issues.append(
                ValidationIssue(
                    "PriorNotSimplex",
                    "prior must be strictly positive "
                    "(drop_zero_prior_states removes exact zeros)",
                )
            )
        total = float(prior.sum())
        if abs(total - 1.0) > SIMPLEX_ATOL:
            issues.append(
                ValidationIssue(
                    "PriorNotSimplex",
                    f"prior must sum to 1 within {SIMPLEX_ATOL}, got {total!r}",
                )
            )
    if problem.num_states == 0:
        # surfaces as a degenerate prior rather than a dedicated code
        issues.append(ValidationIssue("PriorNotSimplex", "problem has no states"))
    if not np.all(np.isfinite(problem.utility)):
        issues.append(ValidationIssue("NonFiniteUtility", "utility has non-finite entries"))
    return issues


def drop_zero_prior_states(problem: Problem) -> Problem:
    """Remove states carrying exactly zero prior mass.

    Zero-mass states are invisible to the objective; keeping them only breaks
    the strict-positivity invariant.  A warning is emitted naming the dropped
    states.  Entries that are merely small are kept untouched.
    """
    keep = problem.prior != 0.0
    if np.all(keep):
        return problem
    dropped = [problem.states[j] for j in np.flatnonzero(~keep)]
    warnings.warn(
        f"dropping {len(dropped)} zero-prior state(s): {dropped}",
        UserWarning,
        stacklevel=2,
    )
    return Problem(
        actions=problem.actions,
        states=tuple(s for s, k in zip(problem.states, keep) if k),
        utility=problem.utility[:, keep],
        lam=problem.lam,
        prior=problem.prior[keep],
    )


# ---------------------------------------------------------------------------
# Elementary functionals
# ---------------------------------------------------------------------------


def gibbs_kernel(problem: Problem) -> np.ndarray:
    """Log-domain kernel u/lam; entry (alpha, omega) equals utility/lam exactly."""
    return problem.utility / problem.lam


def weighted_logsumexp(values, weights, axis: int) -> np.ndarray:
    """log sum_i w_i exp(v_i) over one axis, for nonnegative weights.

    Folds the weights into the exponent as v + log w (zero weight becomes
    -inf and drops out), which stays exact for subnormal weights where the
    separate-coefficient form of the library routine overflows internally.
    """
    v = np.asarray(values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise InvalidInput("weights must be nonnegative")
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    shape = [1] * v.ndim
    shape[axis] = -1
    return logsumexp(v + log_w.reshape(shape), axis=axis)


def mutual_information(coupling: Coupling) -> float:
    """Mutual information of a joint distribution, in nats.

    Computed against the coupling's own marginals; zero entries contribute
    zero.  The exact value is nonnegative, so tiny negative rounding noise is
    clamped to 0.
    """
    joint = coupling.joint
    outer = np.outer(coupling.action_marginal, coupling.state_marginal)
    mask = joint > 0
    mi = float(np.sum(joint[mask] * (np.log(joint[mask]) - np.log(outer[mask]))))
    return max(mi, 0.0)


def ri_objective(problem: Problem, coupling: Coupling) -> float:
    """Expected utility over lam minus mutual information, at a coupling.

    The coupling must be Bayes-plausible: its state marginal has to match the
    prior within 1e-8 in sup norm, otherwise BayesPlausibilityViolated is
    raised.
    """
    if coupling.joint.shape != (problem.num_actions, problem.num_states):
        raise InvalidInput(
            f"coupling shape {coupling.joint.shape} does not match problem "
            f"({problem.num_actions}, {problem.num_states})"
        )
    deviation = float(np.abs(coupling.state_marginal - problem.prior).max())
    if deviation > BAYES_ATOL:
        raise BayesPlausibilityViolated(
            f"state marginal deviates from prior by {deviation:.3e} > {BAYES_ATOL}"
        )
    payoff = float(np.sum(coupling.joint * gibbs_kernel(problem)))
    return payoff - mutual_information(coupling)
