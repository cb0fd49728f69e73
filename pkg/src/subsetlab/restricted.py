"""Restricted-eigenvalue certification, efficiency gap, and SRC checking.

The restricted eigenvalue of an n-by-d matrix X is the minimum of
``||X theta||^2 / (n ||theta||^2)`` over all theta in the union of cones
``{||theta_{S^c}||_1 <= 3 ||theta_S||_1}``, one cone per size-s support S.
That minimization is nonconvex, so :func:`re_constant` never claims the exact
value: every point it evaluates is feasible for some cone, hence every value
it sees is an *upper bound* on the minimum, and the best one found is returned
as a self-verifying certificate (witness vector, its support slice, and the
ratio recomputed at the witness).

The search is multi-start projected gradient per support: gradient step on
the smooth ratio numerator, renormalize to the sphere, then rescale the
off-support tail by ``min(1, 3||theta_S||_1 / ||theta_{S^c}||_1)`` to restore
cone feasibility.  Starts are seeded random sphere points (a prefix property
makes the result monotone in the restart count), the canonical basis vectors
of the support, and the bottom eigenvector of X'X/n projected into the cone.

Also here: the sample-size floor any polynomial-time selector inherits from
the certified RE value, the head-to-head gap ratio against the enumerative
optimum, and a two-sided near-isometry check over small column blocks (the
condition strongly correlated designs violate).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, InvalidParameterError
from .rng import generator, mix64
from .sampler import ProblemInstance
from .subsets import SupportSet, binom, colex_combinations, colex_unrank, count_subsets_up_to
from .theory import (
    POLY_EFFICIENT,
    BoundReport,
    FixedDesignSignals,
    fixed_design_deltas,
)

GAMMA_RANGE_CAP = 1.0 / (24.0 * math.sqrt(2.0))

DEFAULT_SUPPORT_BUDGET = 100_000


@dataclass(frozen=True)
class ReCertificate:
    """A certified upper bound on the restricted eigenvalue.

    ``gamma_upper`` equals ``||X theta||^2 / (n ||theta||^2)`` at
    ``witness_theta``, which satisfies the cone constraint for ``witness_s``;
    any such feasible point upper-bounds the minimum, so the certificate is
    sound regardless of how well the search converged.
    """

    gamma_upper: float
    witness_theta: np.ndarray
    witness_s: SupportSet
    restarts_used: int
    converged: bool
    sampled_supports: bool = False


@dataclass(frozen=True)
class GapReport:
    """Sample-complexity comparison at a fixed design and instance.

    ``optimal_term`` is ``log d / delta_l`` (achievable by enumeration);
    ``poly_term`` is ``(log d / delta_u) / gamma^2`` (the floor for efficient
    selectors); ``ratio`` is their quotient.
    """

    optimal_term: float
    poly_term: float
    ratio: float
    gamma: float
    signals: FixedDesignSignals


@dataclass(frozen=True)
class SrcViolation:
    support: tuple[int, ...]
    direction: str
    ratio: float


@dataclass(frozen=True)
class SrcReport:
    """Outcome of the two-sided block near-isometry check.

    ``holds`` is True/False under full enumeration; under sampling it can
    only be False (a witnessed violation) or None (no violation found, not
    exhaustive).
    """

    holds: bool | None
    worst_ratio_low: float
    worst_ratio_high: float
    witness_low: SrcViolation
    witness_high: SrcViolation
    enumerated: bool


def _cone_project(theta: np.ndarray, s_idx: np.ndarray, mask_rest: np.ndarray) -> np.ndarray:
    """Rescale off-support tails so every row satisfies the cone constraint."""
    head = np.sum(np.abs(theta[:, s_idx]), axis=1)
    tail = np.sum(np.abs(theta[:, mask_rest]), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(tail > 3.0 * head, np.where(tail > 0, 3.0 * head / tail, 1.0), 1.0)
    theta = theta.copy()
    theta[:, mask_rest] *= factor[:, None]
    return theta


def _row_normalize(theta: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(theta, axis=1, keepdims=True)
    return np.where(norms > 1e-300, theta / norms, theta)


def re_constant(
    x: np.ndarray,
    s: int,
    restarts: int = 64,
    iters: int = 500,
    step: float = 1e-2,
    seed: int = 0,
    step_decay: float = 0.99,
    sample_supports: int | None = None,
    support_budget: int = DEFAULT_SUPPORT_BUDGET,
) -> ReCertificate:
    """Search for the smallest cone-constrained Rayleigh ratio of ``X'X/n``.

    Enumerates all size-``s`` supports (or, when ``sample_supports`` is given,
    a deterministic sample of them plus the support of the smallest column
    norms) and runs the multi-start projected-gradient scheme on each.  The
    returned value is always a valid upper bound on the restricted eigenvalue;
    enumeration affects only its tightness.
    """
    if restarts < 1 or iters < 1:
        raise InvalidParameterError("restarts and iters must be positive")
    if step <= 0 or not (0 < step_decay <= 1):
        raise InvalidParameterError("step must be positive and step_decay in (0, 1]")
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if not (1 <= s <= d):
        raise InvalidParameterError(f"need 1 <= s <= d = {d}, got s={s}")
    total = binom(d, s)
    if sample_supports is None and total > support_budget:
        raise BudgetExceededError(
            f"RE search would enumerate C({d},{s}) = {total} supports, budget is "
            f"{support_budget}; pass sample_supports to request the sampled mode",
            required=total,
            budget=support_budget,
        )
    a = x.T @ x / n
    a = (a + a.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(a)
    bottom = eigvecs[:, 0]
    col_norm_support = tuple(
        int(j) for j in sorted(np.lexsort((np.arange(d), np.diag(a)))[:s])
    )

    if sample_supports is None:
        support_iter = list(colex_combinations(d, s))
    else:
        if sample_supports < 1:
            raise InvalidParameterError("sample_supports must be positive when given")
        picks: set[tuple[int, ...]] = {col_norm_support}
        g = generator(mix64(seed, "re-supports"))
        guard = 0
        while len(picks) < min(sample_supports, total) and guard < 100 * sample_supports:
            rank = int(g.integers(0, total))
            picks.add(colex_unrank(d, s, rank))
            guard += 1
        support_iter = sorted(picks)

    best_val = np.inf
    best_key: tuple[tuple[int, ...], float] | None = None
    best_theta: np.ndarray | None = None
    best_last_improved = 0
    for rank, support in enumerate(support_iter):
        s_idx = np.asarray(support, dtype=np.intp)
        mask_rest = np.ones(d, dtype=bool)
        mask_rest[s_idx] = False
        starts = [
            generator(mix64(seed, "re-start", rank, r)).standard_normal(d)
            for r in range(restarts)
        ]
        for j in s_idx:
            e = np.zeros(d)
            e[j] = 1.0
            starts.append(e)
        starts.append(bottom.copy())
        theta = np.vstack(starts)
        theta = _cone_project(_row_normalize(theta), s_idx, mask_rest)
        # rows annihilated by the cone projection restart from the first
        # canonical basis vector, which is always feasible
        dead = np.linalg.norm(theta, axis=1) < 1e-12
        if np.any(dead):
            e = np.zeros(d)
            e[s_idx[0]] = 1.0
            theta[dead] = e
        support_best = np.inf
        support_theta: np.ndarray | None = None
        support_improved_at = 0
        cur_step = step
        for it in range(iters + 1):
            grad = theta @ a
            vals = _ratio_from(grad, theta)
            lo = float(np.min(vals))
            if lo < support_best:
                support_best = lo
                support_theta = theta[int(np.argmin(vals))].copy()
                support_improved_at = it
            if it == iters:
                break
            theta = theta - (2.0 * cur_step) * grad
            theta = _cone_project(_row_normalize(theta), s_idx, mask_rest)
            dead = np.linalg.norm(theta, axis=1) < 1e-12
            if np.any(dead):
                e = np.zeros(d)
                e[s_idx[0]] = 1.0
                theta[dead] = e
            cur_step *= step_decay
        key = (support, support_best)
        if support_best < best_val or (
            support_best == best_val and (best_key is None or support < best_key[0])
        ):
            best_val = support_best
            best_key = key
            best_theta = support_theta
            best_last_improved = support_improved_at
    assert best_theta is not None and best_key is not None
    witness_support = SupportSet(best_key[0])
    witness = best_theta
    gamma = float((witness @ a @ witness) / (witness @ witness))
    return ReCertificate(
        gamma_upper=gamma,
        witness_theta=witness,
        witness_s=witness_support,
        restarts_used=restarts,
        converged=best_last_improved <= int(0.9 * iters),
        sampled_supports=sample_supports is not None,
    )


def _ratio_from(grad: np.ndarray, theta: np.ndarray) -> np.ndarray:
    num = np.einsum("mi,mi->m", grad, theta)
    den = np.einsum("mi,mi->m", theta, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / den, np.inf)


def cone_feasible(theta: np.ndarray, support: SupportSet, tol: float = 1e-9) -> bool:
    """Whether the off-support l1 mass is at most three times the on-support mass."""
    s_idx = support.as_array()
    mask = np.ones(theta.shape[0], dtype=bool)
    mask[s_idx] = False
    return float(np.sum(np.abs(theta[mask]))) <= 3.0 * float(np.sum(np.abs(theta[s_idx]))) + tol


def poly_lower_bound(
    x: np.ndarray,
    instance: ProblemInstance,
    gamma: float,
    delta_exponent: float = 0.0,
    constant: float = 1.0,
    enum_budget: int = 10_000_000,
) -> BoundReport:
    """Sample-size floor for polynomial-time selectors at this fixed design:
    ``constant * s^(1 - delta_exponent) * log d / (max over T of the unscaled
    fixed-design signal) / gamma^2``.  The max runs over all same-size
    alternatives, exactly.

    Values of ``gamma`` outside ``(0, min(s^(-delta_exponent/2), 1/(24 sqrt 2)))``
    draw a warning: the floor's derivation constrains the RE range.
    """
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    if not (0.0 <= delta_exponent < 1.0):
        raise InvalidParameterError(f"delta_exponent must lie in [0, 1), got {delta_exponent}")
    if constant <= 0:
        raise InvalidParameterError(f"constant must be positive, got {constant}")
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    s = instance.sparsity
    cap = min(float(s) ** (-delta_exponent / 2.0), GAMMA_RANGE_CAP)
    if gamma >= cap:
        warnings.warn(
            f"gamma={gamma} is outside the derivation range (0, {cap:.6g}); "
            "the reported floor extrapolates beyond it",
            stacklevel=2,
        )
    total = binom(d, s)
    if total > enum_budget:
        raise BudgetExceededError(
            f"enumeration needs C({d},{s}) = {total} alternatives, budget is {enum_budget}",
            required=total,
            budget=enum_budget,
        )
    true_set = set(instance.support.indices)
    worst = 0.0
    for t_tuple in colex_combinations(d, s):
        missed = sorted(true_set - set(t_tuple))
        if not missed:
            continue
        d_idx = np.asarray(missed, dtype=np.intp)
        v = x[:, d_idx] @ instance.beta[d_idx]
        xt = x[:, np.asarray(t_tuple, dtype=np.intp)]
        gram = xt.T @ xt
        try:
            low = np.linalg.cholesky(gram)
        except np.linalg.LinAlgError:
            continue
        w = np.linalg.solve(low, xt.T @ v)
        resid = max(float(v @ v - w @ w), 0.0)
        worst = max(worst, resid / (n * instance.sigma2))
    if worst <= 0:
        raise InvalidParameterError("the fixed-design signal vanished for every alternative")
    n_value = constant * float(s) ** (1.0 - delta_exponent) * math.log(d) / worst / gamma**2
    return BoundReport(
        kind=POLY_EFFICIENT,
        n_value=n_value,
        delta_confidence=delta_exponent,
        constant_used=constant,
        terms=(("max-signal", worst), ("gamma", gamma)),
    )


def evaluate_gap(
    x: np.ndarray,
    instance: ProblemInstance,
    gamma: float,
    enum_budget: int = 10_000_000,
) -> GapReport:
    """Head-to-head sample-complexity terms at a fixed design: the
    enumerative optimum ``log d / delta_l`` versus the efficient-selector
    floor ``(log d / delta_u) / gamma^2``, and their ratio.
    """
    if gamma <= 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    x = np.asarray(x, dtype=float)
    d = x.shape[1]
    signals = fixed_design_deltas(x, instance, enum_budget)
    optimal = math.log(d) / signals.delta_l
    poly = math.log(d) / signals.delta_u / gamma**2
    return GapReport(
        optimal_term=optimal,
        poly_term=poly,
        ratio=poly / optimal,
        gamma=gamma,
        signals=signals,
    )


def check_src(
    x: np.ndarray,
    s: int,
    c_minus: float,
    c_plus: float,
    budget: int = 200_000,
    n_random_u: int = 8,
    seed: int = 0,
) -> SrcReport:
    """Check ``c_minus <= ||X_T u||^2 / (n ||u||^2) <= c_plus`` over column
    blocks of size up to ``2s``.

    Directions tried per block: each canonical basis vector, the all-ones
    vector, and seeded random sphere points.  Blocks are fully enumerated
    when their count fits the budget; otherwise a deterministic sample is
    drawn and a clean result is reported as None (cannot certify the
    condition holds from a sample).
    """
    if c_minus > c_plus:
        raise InvalidParameterError(f"need c_minus <= c_plus, got {c_minus} > {c_plus}")
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if 2 * s > d:
        raise InvalidParameterError(f"need 2s <= d, got s={s}, d={d}")
    if n_random_u < 0:
        raise InvalidParameterError("n_random_u must be nonnegative")
    a = x.T @ x / n

    total = count_subsets_up_to(d, 2 * s) - 1  # excluding the empty block
    enumerated = total <= budget
    if enumerated:
        blocks = [t for k in range(1, 2 * s + 1) for t in colex_combinations(d, k)]
    else:
        g = generator(mix64(seed, "src-blocks"))
        picks: set[tuple[int, ...]] = set()
        guard = 0
        while len(picks) < budget and guard < 100 * budget:
            k = int(g.integers(1, 2 * s + 1))
            rank = int(g.integers(0, binom(d, k)))
            picks.add(colex_unrank(d, k, rank))
            guard += 1
        blocks = sorted(picks, key=lambda t: (len(t), t))

    worst_low = math.inf
    worst_high = -math.inf
    wit_low: SrcViolation | None = None
    wit_high: SrcViolation | None = None
    for block in blocks:
        idx = np.asarray(block, dtype=np.intp)
        sub = a[np.ix_(idx, idx)]
        k = idx.size
        directions: list[tuple[str, np.ndarray]] = [(f"e{i + 1}", np.eye(k)[i]) for i in range(k)]
        directions.append(("ones", np.ones(k)))
        if n_random_u:
            g_u = generator(mix64(seed, "src-dirs", len(block), *[int(i) for i in block]))
            for r in range(n_random_u):
                u = g_u.standard_normal(k)
                directions.append((f"sphere{r + 1}", u))
        for label, u in directions:
            denom = float(u @ u)
            if denom == 0.0:
                continue
            ratio = float(u @ sub @ u) / denom
            if ratio < worst_low:
                worst_low = ratio
                wit_low = SrcViolation(support=block, direction=label, ratio=ratio)
            if ratio > worst_high:
                worst_high = ratio
                wit_high = SrcViolation(support=block, direction=label, ratio=ratio)
    assert wit_low is not None and wit_high is not None
    violated = worst_low < c_minus or worst_high > c_plus
    if enumerated:
        holds: bool | None = not violated
    else:
        holds = False if violated else None
    return SrcReport(
        holds=holds,
        worst_ratio_low=worst_low,
        worst_ratio_high=worst_high,
        witness_low=wit_low,
        witness_high=wit_high,
        enumerated=enumerated,
    )
