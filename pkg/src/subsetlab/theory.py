"""Signal strengths, sample-size calculators, divergences, and tail bounds.

Quantities computed here, with the notation used across the package
(``d`` dimension, ``s`` sparsity, ``sbar`` its known upper bound,
``beta_min`` the smallest nonzero coefficient magnitude, ``omega`` the
conditional-covariance floor of the design class, ``sigma2`` noise variance,
``delta`` a target error probability):

- pairwise and minimum *population signals*: the scaled residual variance an
  alternative support T fails to capture from the truth,
- their fixed-design counterparts (max and min over alternatives) computed
  from an explicit n-by-d matrix,
- sufficient sample sizes for exact recovery (known sparsity, generic-signal,
  and size-bounded variants) and the matching necessary sample sizes
  (equi-correlation construction, dimension-counting construction, and the
  size-one ensemble for unknown sparsity),
- exact KL divergence between two linear-predictor models sharing a design,
  with a Monte Carlo log-likelihood-ratio estimator as an independent check,
- the multiple-hypothesis testing threshold: with M models of pairwise KL at
  most alpha, any selector errs with probability at least
  ``delta - log2/logM`` once ``n <= (1 - 2 delta) logM / alpha``,
- a chi-square concentration bound ``P(|Z - m|/m >= 4t) <= exp(-m min(t, t^2))``
  and its Monte Carlo verifier.

Hidden proportionality constants are explicit arguments (default 1); the
sweep harness calibrates empirical constants rather than asserting any.
Binomial logarithms go through ``lgamma`` so the calculators stay usable for
dimensions in the thousands.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .design import Covariance, compute_omega_known, conditional_covariance
from .errors import BudgetExceededError, InternalConsistencyError, InvalidParameterError
from .rng import generator, mix64
from .sampler import ClassParams, ProblemInstance
from .subsets import SupportSet, binom, colex_combinations

UPPER_KNOWN = "upper-known"
UPPER_GENERIC = "upper-generic"
UPPER_UNKNOWN = "upper-unknown"
LOWER_EQUICORR = "lower-equicorr"
LOWER_DIMENSION = "lower-dim"
LOWER_UNKNOWN = "lower-unknown"
POLY_EFFICIENT = "poly-efficient"

DEFAULT_ENUM_BUDGET = 10_000_000


def log_binom(n: int, k: int) -> float:
    """log of C(n, k) via log-gamma; -inf outside the triangle."""
    if k < 0 or n < 0 or k > n:
        return float("-inf")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@dataclass(frozen=True)
class SignalReport:
    """Minimum scaled signal over alternative supports, with its witness.

    ``per_ell`` maps each difference size to the minimum scaled signal among
    alternatives missing exactly that many true variables; ``delta`` is the
    overall minimum.
    """

    delta: float
    witness_t: SupportSet
    per_ell: Mapping[int, float]


@dataclass(frozen=True)
class FixedDesignSignals:
    """Extremes of the scaled fixed-design signal over alternatives."""

    delta_u: float
    delta_l: float
    witness_u: SupportSet
    witness_l: SupportSet
    skipped_singular: int = 0


@dataclass(frozen=True)
class BoundReport:
    """One evaluated sample-size formula.

    ``terms`` preserves the individual branches of a max so callers can see
    which one binds; lower bounds also carry the guaranteed error floor (None
    for upper bounds, -inf when the floor is vacuous).
    """

    kind: str
    n_value: float
    delta_confidence: float
    constant_used: float
    error_floor: float | None = None
    terms: tuple[tuple[str, float], ...] = field(default=())


@dataclass(frozen=True)
class FanoReport:
    """Testing threshold for an M-model ensemble with KL spread alpha."""

    n_threshold: float
    error_floor: float
    vacuous: bool


@dataclass(frozen=True)
class TailEstimate:
    """Monte Carlo probability estimate with its binomial standard error."""

    probability: float
    stderr: float
    trials: int


def pairwise_delta(instance: ProblemInstance, t_set) -> float:
    """Scaled signal distinguishing the true support from alternative ``T``:
    the quadratic form of the true coefficients on the conditional covariance
    of the missed variables given T, divided by the noise variance.

    Zero when T contains the whole true support.
    """
    t_set = t_set if isinstance(t_set, SupportSet) else SupportSet.of(t_set)
    t_set.validate_for_dim(instance.dim)
    diff = instance.support.difference(t_set)
    if len(diff) == 0:
        return 0.0
    cond = conditional_covariance(instance.design, instance.support, t_set)
    beta_d = instance.beta[diff.as_array()]
    return max(float(beta_d @ cond @ beta_d), 0.0) / instance.sigma2


def signal_delta(
    instance: ProblemInstance,
    enum_budget: int = DEFAULT_ENUM_BUDGET,
    verify_chain: bool = True,
) -> SignalReport:
    """Exact minimum over all same-size alternatives of the scaled signal.

    Each alternative's signal is divided by the number of true variables it
    misses before minimizing.  When ``verify_chain`` is set (and the class
    constraint ``s <= d/2`` makes the floor computable), the result is checked
    against ``beta_min^2 * omega / sigma2``; falling below it indicates an
    implementation bug and raises.
    """
    d = instance.dim
    s = instance.sparsity
    if s == 0:
        raise InvalidParameterError("signal is undefined for an empty true support")
    total = binom(d, s)
    if total > enum_budget:
        raise BudgetExceededError(
            f"signal enumeration needs C({d},{s}) = {total} alternatives, budget is {enum_budget}",
            required=total,
            budget=enum_budget,
        )
    true_set = set(instance.support.indices)
    best = math.inf
    witness: tuple[int, ...] | None = None
    per_ell: dict[int, float] = {}
    for t_tuple in colex_combinations(d, s):
        ell = len(true_set - set(t_tuple))
        if ell == 0:
            continue
        scaled = pairwise_delta(instance, SupportSet(t_tuple)) / ell
        if scaled < per_ell.get(ell, math.inf):
            per_ell[ell] = scaled
        if scaled < best or (scaled == best and (witness is None or t_tuple < witness)):
            best = scaled
            witness = t_tuple
    assert witness is not None
    if verify_chain and 1 <= s <= d // 2:
        beta_min = float(np.min(np.abs(instance.beta[instance.support.as_array()])))
        omega = compute_omega_known(instance.design, s, pair_budget=enum_budget).omega
        floor = beta_min**2 * omega / instance.sigma2
        if best < floor - 1e-9 * max(1.0, floor):
            raise InternalConsistencyError(
                f"minimum signal {best:.6g} fell below its class floor {floor:.6g}"
            )
    return SignalReport(delta=float(best), witness_t=SupportSet(witness), per_ell=dict(sorted(per_ell.items())))


def _projected_residual_sq(x: np.ndarray, t_idx: np.ndarray, v: np.ndarray) -> float:
    """Squared norm of v minus its projection onto the columns of x[:, t_idx]."""
    if t_idx.size == 0:
        return float(v @ v)
    xt = x[:, t_idx]
    gram = xt.T @ xt
    low = np.linalg.cholesky(gram)  # raises LinAlgError when singular
    w = np.linalg.solve(low, xt.T @ v)
    return max(float(v @ v - w @ w), 0.0)


def fixed_design_deltas(
    x: np.ndarray, instance: ProblemInstance, enum_budget: int = DEFAULT_ENUM_BUDGET
) -> FixedDesignSignals:
    """Max and min over alternatives of the scaled fixed-design signal
    ``||proj-residual of X_D beta_D off X_T||^2 / (|D| n sigma2)``.

    Exact by enumeration; alternatives whose column block is singular are
    skipped and counted.
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if d != instance.dim:
        raise InvalidParameterError(f"x has {d} columns but the instance has dimension {instance.dim}")
    s = instance.sparsity
    if s == 0:
        raise InvalidParameterError("signals are undefined for an empty true support")
    if s > n:
        raise InvalidParameterError(f"support size {s} exceeds sample count {n}")
    total = binom(d, s)
    if total > enum_budget:
        raise BudgetExceededError(
            f"enumeration needs C({d},{s}) = {total} alternatives, budget is {enum_budget}",
            required=total,
            budget=enum_budget,
        )
    true_set = set(instance.support.indices)
    hi, lo = -math.inf, math.inf
    wit_hi: tuple[int, ...] | None = None
    wit_lo: tuple[int, ...] | None = None
    skipped = 0
    for t_tuple in colex_combinations(d, s):
        missed = sorted(true_set - set(t_tuple))
        ell = len(missed)
        if ell == 0:
            continue
        d_idx = np.asarray(missed, dtype=np.intp)
        v = x[:, d_idx] @ instance.beta[d_idx]
        try:
            resid = _projected_residual_sq(x, np.asarray(t_tuple, dtype=np.intp), v)
        except np.linalg.LinAlgError:
            skipped += 1
            continue
        value = resid / (ell * n * instance.sigma2)
        if value > hi or (value == hi and (wit_hi is None or t_tuple < wit_hi)):
            hi, wit_hi = value, t_tuple
        if value < lo or (value == lo and (wit_lo is None or t_tuple < wit_lo)):
            lo, wit_lo = value, t_tuple
    if wit_hi is None or wit_lo is None:
        raise InvalidParameterError("every alternative was singular; signals are undefined")
    return FixedDesignSignals(
        delta_u=float(hi),
        delta_l=float(lo),
        witness_u=SupportSet(wit_hi),
        witness_l=SupportSet(wit_lo),
        skipped_singular=skipped,
    )


def _check_delta(delta_conf: float, upper: float = 1.0) -> None:
    if not (0.0 < delta_conf < upper):
        raise InvalidParameterError(f"confidence level must lie in (0, {upper}), got {delta_conf}")


def _snr(params: ClassParams) -> float:
    return params.beta_min**2 * params.omega / params.sigma2


def bound_upper_known(params: ClassParams, delta_conf: float, constant: float = 1.0) -> BoundReport:
    """Sufficient sample size for exact-size subset search:
    ``constant * max{(log(d-s) + log(1/delta)) / (beta_min^2 omega / sigma2),
    logC(d-s, s) + log(1/delta)}``.  Requires ``s <= d/2``.
    """
    _check_delta(delta_conf)
    if constant <= 0:
        raise InvalidParameterError(f"constant must be positive, got {constant}")
    if params.s is None:
        raise InvalidParameterError("this bound needs the exact sparsity s")
    d, s = params.d, params.s
    if 2 * s > d:
        raise InvalidParameterError(f"outside the hypothesis s <= d/2: s={s}, d={d}")
    log_inv = math.log(1.0 / delta_conf)
    t_signal = (math.log(d - s) + log_inv) / _snr(params)
    t_count = log_binom(d - s, s) + log_inv
    return BoundReport(
        kind=UPPER_KNOWN,
        n_value=constant * max(t_signal, t_count),
        delta_confidence=delta_conf,
        constant_used=constant,
        terms=(("signal", t_signal), ("count", t_count)),
    )


def bound_upper_generic(
    delta_signal: float, d: int, s: int, delta_conf: float, constant: float = 1.0
) -> BoundReport:
    """Sufficient sample size expressed through the minimum scaled signal:
    ``constant * max over ell in [s] of
    (logC(d-s, ell) + log(1/delta)) / min(ell * delta_signal, 1)``.
    """
    _check_delta(delta_conf)
    if constant <= 0:
        raise InvalidParameterError(f"constant must be positive, got {constant}")
    if delta_signal <= 0:
        raise InvalidParameterError(f"signal must be positive, got {delta_signal}")
    if 2 * s > d:
        raise InvalidParameterError(f"outside the hypothesis s <= d/2: s={s}, d={d}")
    log_inv = math.log(1.0 / delta_conf)
    terms = []
    for ell in range(1, s + 1):
        terms.append((f"ell={ell}", (log_binom(d - s, ell) + log_inv) / min(ell * delta_signal, 1.0)))
    return BoundReport(
        kind=UPPER_GENERIC,
        n_value=constant * max(v for _, v in terms),
        delta_confidence=delta_conf,
        constant_used=constant,
        terms=tuple(terms),
    )


def bound_upper_unknown(params: ClassParams, delta_conf: float, constant: float = 1.0) -> BoundReport:
    """Sufficient sample size for the size-bounded penalized search:
    ``constant * max{(log d + log(1/delta)) / (beta_min^2 omega / sigma2),
    logC(d, sbar) + log(1/delta)}``.  Requires ``sbar <= d/2``.
    """
    _check_delta(delta_conf)
    if constant <= 0:
        raise InvalidParameterError(f"constant must be positive, got {constant}")
    if params.sbar is None:
        raise InvalidParameterError("this bound needs the sparsity bound sbar")
    d, sbar = params.d, params.sbar
    if 2 * sbar > d:
        raise InvalidParameterError(f"outside the hypothesis sbar <= d/2: sbar={sbar}, d={d}")
    log_inv = math.log(1.0 / delta_conf)
    t_signal = (math.log(d) + log_inv) / _snr(params)
    t_count = log_binom(d, sbar) + log_inv
    return BoundReport(
        kind=UPPER_UNKNOWN,
        n_value=constant * max(t_signal, t_count),
        delta_confidence=delta_conf,
        constant_used=constant,
        terms=(("signal", t_signal), ("count", t_count)),
    )


def bound_lower_equicorr(params: ClassParams, delta_conf: float) -> BoundReport:
    """Necessary sample size from the equi-correlated construction:
    below ``(1-2delta)/2 * max over ell of logC(d-s, ell) / (ell beta_min^2
    omega / sigma2)`` every estimator errs with probability at least
    ``delta - log2/logC(d-s, s)``.  Requires ``omega < 1``.
    """
    _check_delta(delta_conf, upper=0.5)
    if params.s is None:
        raise InvalidParameterError("this bound needs the exact sparsity s")
    if params.omega >= 1.0:
        raise InvalidParameterError(f"outside the hypothesis omega < 1: omega={params.omega}")
    d, s = params.d, params.s
    if 2 * s > d:
        raise InvalidParameterError(f"outside the hypothesis s <= d/2: s={s}, d={d}")
    snr = _snr(params)
    terms = tuple((f"ell={ell}", log_binom(d - s, ell) / (ell * snr)) for ell in range(1, s + 1))
    log_count = log_binom(d - s, s)
    floor = delta_conf - math.log(2.0) / log_count if log_count > 0 else float("-inf")
    return BoundReport(
        kind=LOWER_EQUICORR,
        n_value=(1.0 - 2.0 * delta_conf) / 2.0 * max(v for _, v in terms),
        delta_confidence=delta_conf,
        constant_used=1.0,
        error_floor=floor,
        terms=terms,
    )


def bound_lower_dimension(d: int, s: int, snr: float, delta_conf: float) -> BoundReport:
    """Necessary sample size from dimension counting on the identity design:
    below ``2(1-delta)(logC(d, s) - 1) / log(1 + s * snr)`` every estimator
    errs with probability at least ``delta``; ``snr`` is
    ``beta_min^2 / sigma2``.
    """
    _check_delta(delta_conf)
    if s < 1 or s > d:
        raise InvalidParameterError(f"need 1 <= s <= d, got s={s}, d={d}")
    if s * snr <= 0:
        raise InvalidParameterError(f"s * snr must be positive, got {s * snr}")
    if snr > 1.0:
        warnings.warn(
            "the dimension lower bound assumes a bounded per-variable snr; "
            f"snr={snr} > 1 stretches that hypothesis",
            stacklevel=2,
        )
    n_value = 2.0 * (1.0 - delta_conf) * (log_binom(d, s) - 1.0) / math.log1p(s * snr)
    return BoundReport(
        kind=LOWER_DIMENSION,
        n_value=n_value,
        delta_confidence=delta_conf,
        constant_used=1.0,
        error_floor=delta_conf,
    )


def bound_lower_unknown(
    d: int, beta_min: float, omega: float, sigma2: float, delta_conf: float
) -> BoundReport:
    """Necessary sample size without exact sparsity knowledge, from the
    size-one ensemble: below ``(1-2delta) log d / (beta_min^2 omega / sigma2)``
    the error probability is at least ``delta - log2/log d``.
    Requires ``omega < 1``.
    """
    _check_delta(delta_conf, upper=0.5)
    if omega >= 1.0:
        raise InvalidParameterError(f"outside the hypothesis omega < 1: omega={omega}")
    if omega <= 0 or beta_min <= 0 or sigma2 <= 0:
        raise InvalidParameterError("beta_min, omega, sigma2 must all be positive")
    if d < 2:
        raise InvalidParameterError(f"need d >= 2, got {d}")
    snr = beta_min**2 * omega / sigma2
    floor = delta_conf - math.log(2.0) / math.log(d) if d > 1 else float("-inf")
    return BoundReport(
        kind=LOWER_UNKNOWN,
        n_value=(1.0 - 2.0 * delta_conf) * math.log(d) / snr,
        delta_confidence=delta_conf,
        constant_used=1.0,
        error_floor=floor,
    )


def kl_between_supports(
    sigma: Covariance,
    s_set,
    beta_s: np.ndarray,
    t_set,
    beta_t: np.ndarray,
    sigma2: float,
) -> float:
    """Exact KL divergence between two Gaussian linear models on one design.

    Both models share the covariate law and the noise variance, so the KL
    reduces to the mean squared difference of their linear predictors over
    twice the noise variance: ``v' Sigma_UU v / (2 sigma2)`` where U is the
    union support and v the signed coefficient difference.  Symmetric in the
    two models, zero exactly when the predictors coincide almost surely.
    """
    if sigma2 <= 0:
        raise InvalidParameterError(f"sigma2 must be positive, got {sigma2}")
    s_set = s_set if isinstance(s_set, SupportSet) else SupportSet.of(s_set)
    t_set = t_set if isinstance(t_set, SupportSet) else SupportSet.of(t_set)
    s_set.validate_for_dim(sigma.dim)
    t_set.validate_for_dim(sigma.dim)
    beta_s = np.asarray(beta_s, dtype=float)
    beta_t = np.asarray(beta_t, dtype=float)
    if beta_s.shape != (len(s_set),) or beta_t.shape != (len(t_set),):
        raise InvalidParameterError("coefficient vectors must match their support sizes")
    union = s_set.union(t_set)
    if len(union) == 0:
        return 0.0
    v = np.zeros(len(union))
    pos = {j: i for i, j in enumerate(union.indices)}
    for j, b in zip(s_set.indices, beta_s):
        v[pos[j]] += b
    for j, b in zip(t_set.indices, beta_t):
        v[pos[j]] -= b
    u_idx = union.as_array()
    quad = float(v @ sigma.entries[np.ix_(u_idx, u_idx)] @ v)
    return max(quad, 0.0) / (2.0 * sigma2)


def empirical_kl(
    sigma: Covariance,
    s_set,
    beta_s: np.ndarray,
    t_set,
    beta_t: np.ndarray,
    sigma2: float,
    samples: int = 100_000,
    seed: int = 0,
) -> TailEstimate:
    """Monte Carlo log-likelihood-ratio estimate of the same KL divergence.

    Draws from the first model and averages the log density ratio of the two
    conditional Gaussian densities; an independent check of the closed form.
    """
    if samples < 2:
        raise InvalidParameterError(f"need at least 2 samples, got {samples}")
    s_set = s_set if isinstance(s_set, SupportSet) else SupportSet.of(s_set)
    t_set = t_set if isinstance(t_set, SupportSet) else SupportSet.of(t_set)
    union = s_set.union(t_set)
    u_idx = union.as_array()
    lower = np.linalg.cholesky(sigma.entries[np.ix_(u_idx, u_idx)])
    pos = {j: i for i, j in enumerate(union.indices)}
    g = generator(mix64(seed, "kl"))
    z = g.standard_normal((samples, len(union)))
    xu = z @ lower.T
    eps = g.standard_normal(samples) * math.sqrt(sigma2)
    pred_s = xu[:, [pos[j] for j in s_set.indices]] @ np.asarray(beta_s, dtype=float) if len(s_set) else 0.0
    pred_t = xu[:, [pos[j] for j in t_set.indices]] @ np.asarray(beta_t, dtype=float) if len(t_set) else 0.0
    y = pred_s + eps
    log_ratio = ((y - pred_t) ** 2 - eps**2) / (2.0 * sigma2)
    return TailEstimate(
        probability=float(np.mean(log_ratio)),
        stderr=float(np.std(log_ratio, ddof=1) / math.sqrt(samples)),
        trials=samples,
    )


def fano_threshold(m_count: int, alpha: float, delta_conf: float) -> FanoReport:
    """Sample-size threshold below which selecting among ``m_count`` models
    with pairwise KL at most ``alpha`` must err with probability at least
    ``delta - log2/logM``.  The floor is flagged vacuous when nonpositive.
    """
    if m_count < 2:
        raise InvalidParameterError(f"need at least 2 models, got {m_count}")
    if alpha <= 0:
        raise InvalidParameterError(f"KL level must be positive, got {alpha}")
    _check_delta(delta_conf, upper=0.5)
    log_m = math.log(m_count)
    floor = delta_conf - math.log(2.0) / log_m
    return FanoReport(
        n_threshold=(1.0 - 2.0 * delta_conf) * log_m / alpha,
        error_floor=floor,
        vacuous=floor <= 0.0,
    )


def chisq_tail_bound(m: int, t: float) -> float:
    """Upper bound ``exp(-m min(t, t^2))`` on ``P(|Z - m| / m >= 4t)`` for a
    chi-square variable Z with m degrees of freedom."""
    if m < 1:
        raise InvalidParameterError(f"degrees of freedom must be positive, got {m}")
    if t < 0:
        raise InvalidParameterError(f"t must be nonnegative, got {t}")
    return math.exp(-m * min(t, t * t))


def empirical_chisq_tail(m: int, t: float, trials: int, seed: int = 0) -> TailEstimate:
    """Monte Carlo estimate of ``P(|Z - m| / m >= 4t)`` with Z built as a sum
    of m squared standard normals."""
    if trials < 1000:
        raise InvalidParameterError(f"need at least 1000 trials, got {trials}")
    if m < 1:
        raise InvalidParameterError(f"degrees of freedom must be positive, got {m}")
    if t < 0:
        raise InvalidParameterError(f"t must be nonnegative, got {t}")
    g = generator(mix64(seed, "chisq", m))
    hits = 0
    remaining = trials
    chunk = max(1, min(remaining, 2_000_000 // m))
    while remaining > 0:
        take = min(chunk, remaining)
        draws = g.standard_normal((take, m))
        z = np.einsum("ij,ij->i", draws, draws)
        hits += int(np.count_nonzero(np.abs(z - m) / m >= 4.0 * t))
        remaining -= take
    p = hits / trials
    return TailEstimate(
        probability=p,
        stderr=math.sqrt(p * (1.0 - p) / trials),
        trials=trials,
    )
