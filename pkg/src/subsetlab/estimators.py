"""Support estimators: exact subset search and efficient baselines.

Everything combinatorial runs on a shared :class:`RssEngine` that precomputes
``X^T X``, ``X^T Y`` and ``Y^T Y`` once, so scoring a candidate support S
costs a single |S|-by-|S| Cholesky solve regardless of the sample count:

    rss(S) = Y'Y - (X'Y)_S' (X'X)_SS^-1 (X'Y)_S = ||Y - X_S theta_S||^2.

Estimators and their objectives (all minimized, all deterministic):

- ``bss``:       rss(S) over supports of exact size s,
- ``bssu``:      rss(S)/(n-|S|) + |S|*tau over sizes 0..sbar,
- ``aic``/``bic``: rss(S)/n + |S|*(2/n) resp. rss(S)/n + |S|*(log n)/n,
- ``lasso_cd``:  (1/2n)||Y - X theta||^2 + lam*||theta||_1 by cyclic
  coordinate descent with covariance updates, plus a fixed lambda-grid
  support rule,
- ``omp``:       greedy residual-correlation pursuit with exact refits,
- ``marginal_screening``: top-s |X_j'Y|.

Tie-breaking is part of the contract: exact-size searches return the
lexicographically smallest minimizing support; size-ranging searches prefer
smaller supports first, then lexicographic.  Singular Gram submatrices score
+inf (and bump a diagnostics counter) rather than aborting, so sweeps survive
adversarial inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameterError, SingularSupportError
from .sampler import DataSet
from .subsets import SupportSet, combination_array

_CHUNK_ROWS = 65536

# a Gram submatrix counts as singular when its smallest Cholesky pivot falls
# below this fraction of its largest diagonal entry; LAPACK alone is not a
# reliable detector (rounding can turn an exact zero pivot slightly positive)
_PIVOT_RTOL = 1e-12

LASSO_GRID_SIZE = 50
LASSO_GRID_DECADES = 3.0


@dataclass
class Diagnostics:
    """Mutable counters for non-fatal incidents during estimation."""

    singular_supports: int = 0
    omp_padded: int = 0
    lasso_padded: int = 0

    def merge(self, other: "Diagnostics") -> None:
        self.singular_supports += other.singular_supports
        self.omp_padded += other.omp_padded
        self.lasso_padded += other.lasso_padded


@dataclass(frozen=True)
class RssEngine:
    """Precomputed moments making per-support residual costs O(|S|^3)."""

    gram: np.ndarray
    xty: np.ndarray
    yty: float
    n: int

    @property
    def dim(self) -> int:
        return int(self.gram.shape[0])


def build_engine(data: DataSet) -> RssEngine:
    x, y = data.x, data.y
    gram = x.T @ x
    gram = (gram + gram.T) / 2.0
    return RssEngine(gram=gram, xty=x.T @ y, yty=float(y @ y), n=data.n)


def _as_support(s) -> SupportSet:
    return s if isinstance(s, SupportSet) else SupportSet.of(s)


def _cholesky_or_none(sub: np.ndarray) -> np.ndarray | None:
    """Lower Cholesky factor, or None when the matrix is numerically singular."""
    try:
        low = np.linalg.cholesky(sub)
    except np.linalg.LinAlgError:
        return None
    pivots = np.diagonal(low) ** 2
    if float(np.min(pivots)) < _PIVOT_RTOL * float(np.max(np.diagonal(sub))):
        return None
    return low


def rss(engine: RssEngine, support) -> float:
    """Residual sum of squares of the least-squares fit on ``support``."""
    support = _as_support(support)
    support.validate_for_dim(engine.dim)
    k = len(support)
    if k == 0:
        return engine.yty
    if k > engine.n:
        raise InvalidParameterError(f"support size {k} exceeds sample count {engine.n}")
    idx = support.as_array()
    low = _cholesky_or_none(engine.gram[np.ix_(idx, idx)])
    if low is None:
        raise SingularSupportError(support.indices)
    w = np.linalg.solve(low, engine.xty[idx])
    return max(float(engine.yty - w @ w), 0.0)


def solve_coefficients(engine: RssEngine, support) -> np.ndarray:
    """Least-squares coefficients on ``support`` (in support order)."""
    support = _as_support(support)
    idx = support.as_array()
    if idx.size == 0:
        return np.zeros(0)
    low = _cholesky_or_none(engine.gram[np.ix_(idx, idx)])
    if low is None:
        raise SingularSupportError(support.indices)
    w = np.linalg.solve(low, engine.xty[idx])
    return np.linalg.solve(low.T, w)


def _batch_rss(engine: RssEngine, supports: np.ndarray) -> tuple[np.ndarray, int]:
    """RSS for each row of a (m, k) support array; singular rows get +inf.

    Returns the objective vector and the number of singular rows.
    """
    m, k = supports.shape
    if k == 0:
        return np.full(m, engine.yty), 0
    grams = engine.gram[supports[:, :, None], supports[:, None, :]]
    rhs = engine.xty[supports]
    try:
        low = np.linalg.cholesky(grams)
    except np.linalg.LinAlgError:
        return _batch_rss_fallback(engine, supports)
    w = np.empty_like(rhs)
    for i in range(k):
        acc = rhs[:, i].copy()
        if i:
            acc -= np.einsum("mj,mj->m", low[:, i, :i], w[:, :i])
        w[:, i] = acc / low[:, i, i]
    out = np.maximum(engine.yty - np.einsum("mi,mi->m", w, w), 0.0)
    pivots = np.einsum("mii->mi", low) ** 2
    scale = np.einsum("mii->mi", grams).max(axis=1)
    bad = pivots.min(axis=1) < _PIVOT_RTOL * scale
    singular = int(np.count_nonzero(bad))
    if singular:
        out[bad] = np.inf
    return out, singular


def _batch_rss_fallback(engine: RssEngine, supports: np.ndarray) -> tuple[np.ndarray, int]:
    # some row in the chunk is singular; score rows one by one
    m = supports.shape[0]
    out = np.empty(m)
    singular = 0
    for row in range(m):
        low = _cholesky_or_none(engine.gram[np.ix_(supports[row], supports[row])])
        if low is None:
            out[row] = np.inf
            singular += 1
            continue
        w = np.linalg.solve(low, engine.xty[supports[row]])
        out[row] = max(float(engine.yty - w @ w), 0.0)
    return out, singular


def _scan_size(
    engine: RssEngine,
    k: int,
    objective: Callable[[np.ndarray], np.ndarray],
    diagnostics: Diagnostics | None,
) -> tuple[float, tuple[int, ...]]:
    """Minimize an objective of the per-support RSS over all size-k supports.

    Returns the best value with the lexicographically smallest attaining
    support; the result does not depend on chunking.
    """
    supports = combination_array(engine.dim, k)
    best = np.inf
    best_tuple: tuple[int, ...] | None = None
    for start in range(0, supports.shape[0], _CHUNK_ROWS):
        chunk = supports[start : start + _CHUNK_ROWS]
        values, singular = _batch_rss(engine, chunk)
        if singular and diagnostics is not None:
            diagnostics.singular_supports += singular
        obj = objective(values)
        lo = float(np.min(obj))
        if lo > best:
            continue
        rows = np.flatnonzero(obj == lo)
        candidate = min(tuple(int(i) for i in chunk[r]) for r in rows)
        if lo < best or best_tuple is None or (lo == best and candidate < best_tuple):
            best = lo
            best_tuple = candidate
    if best_tuple is None:
        raise InvalidParameterError(f"no size-{k} supports exist in dimension {engine.dim}")
    return best, best_tuple


def bss(engine: RssEngine, s: int, diagnostics: Diagnostics | None = None) -> SupportSet:
    """Exhaustive residual-variance minimization over supports of size ``s``."""
    if not (1 <= s <= min(engine.n, engine.dim)):
        raise InvalidParameterError(
            f"need 1 <= s <= min(n, d) = {min(engine.n, engine.dim)}, got s={s}"
        )
    _, support = _scan_size(engine, s, lambda v: v, diagnostics)
    return SupportSet(support)


def _penalized_argmin(
    engine: RssEngine,
    sizes: Sequence[int],
    objective_for_size: Callable[[int, np.ndarray], np.ndarray],
    diagnostics: Diagnostics | None,
) -> tuple[SupportSet, float]:
    best = np.inf
    best_key: tuple[int, tuple[int, ...]] | None = None
    for k in sizes:
        value, support = _scan_size(engine, k, lambda v, kk=k: objective_for_size(kk, v), diagnostics)
        key = (k, support)
        if value < best or best_key is None or (value == best and key < best_key):
            best = value
            best_key = key
    assert best_key is not None
    return SupportSet(best_key[1]), best


def bssu(
    engine: RssEngine,
    sbar: int,
    tau: float,
    min_size: int = 0,
    diagnostics: Diagnostics | None = None,
) -> SupportSet:
    """Penalized subset search over supports of size ``min_size..sbar``.

    Objective ``rss(S)/(n - |S|) + |S| * tau``, empty set included by default
    (scoring ``Y'Y / n``).  Ties prefer smaller supports, then lexicographic.
    """
    if not (0 <= sbar < engine.n):
        raise InvalidParameterError(f"need 0 <= sbar < n = {engine.n}, got sbar={sbar}")
    if sbar > engine.dim:
        raise InvalidParameterError(f"sbar={sbar} exceeds dimension {engine.dim}")
    if tau < 0:
        raise InvalidParameterError(f"penalty tau must be nonnegative, got {tau}")
    if not (0 <= min_size <= sbar):
        raise InvalidParameterError(f"need 0 <= min_size <= sbar, got {min_size}")
    n = engine.n
    support, _ = _penalized_argmin(
        engine,
        range(min_size, sbar + 1),
        lambda k, v: v / (n - k) + k * tau,
        diagnostics,
    )
    return support


def default_tau(omega: float, beta_min: float) -> float:
    """Penalty level matching the class parameters: a quarter of omega * beta_min^2."""
    if omega <= 0 or beta_min <= 0:
        raise InvalidParameterError("omega and beta_min must be positive")
    return 0.25 * omega * beta_min**2


def aic(engine: RssEngine, sbar: int, diagnostics: Diagnostics | None = None) -> SupportSet:
    """Penalized search with objective ``rss(S)/n + |S| * 2/n`` over sizes 0..sbar."""
    return _information_criterion(engine, sbar, 2.0, diagnostics)


def bic(engine: RssEngine, sbar: int, diagnostics: Diagnostics | None = None) -> SupportSet:
    """Penalized search with objective ``rss(S)/n + |S| * log(n)/n`` over sizes 0..sbar."""
    return _information_criterion(engine, sbar, math.log(engine.n), diagnostics)


def _information_criterion(
    engine: RssEngine, sbar: int, per_variable: float, diagnostics: Diagnostics | None
) -> SupportSet:
    if not (0 <= sbar < engine.n):
        raise InvalidParameterError(f"need 0 <= sbar < n = {engine.n}, got sbar={sbar}")
    if sbar > engine.dim:
        raise InvalidParameterError(f"sbar={sbar} exceeds dimension {engine.dim}")
    n = engine.n
    support, _ = _penalized_argmin(
        engine,
        range(0, sbar + 1),
        lambda k, v: v / n + k * per_variable / n,
        diagnostics,
    )
    return support


@dataclass(frozen=True)
class LassoFit:
    """Coordinate-descent solution with its convergence status."""

    coef: np.ndarray
    converged: bool
    iterations: int


def _soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def _cd_cycles_numpy(gram_n, xty_n, theta, cache, lam, tol, max_iter):
    d = theta.shape[0]
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        max_change = 0.0
        for j in range(d):
            old = theta[j]
            gjj = gram_n[j, j]
            rho = xty_n[j] - cache[j] + gjj * old
            new = _soft_threshold(rho, lam) / gjj if gjj > 0.0 else 0.0
            if new != old:
                cache += gram_n[:, j] * (new - old)
                theta[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            return iterations, True
    return iterations, False


def _cd_cycles_loops(gram_n, xty_n, theta, cache, lam, tol, max_iter):
    # same update order as the numpy variant, written loop-style for the JIT
    d = theta.shape[0]
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        max_change = 0.0
        for j in range(d):
            old = theta[j]
            gjj = gram_n[j, j]
            rho = xty_n[j] - cache[j] + gjj * old
            if gjj > 0.0:
                if rho > lam:
                    new = (rho - lam) / gjj
                elif rho < -lam:
                    new = (rho + lam) / gjj
                else:
                    new = 0.0
            else:
                new = 0.0
            if new != old:
                diff = new - old
                for i in range(d):
                    cache[i] += gram_n[i, j] * diff
                theta[j] = new
                if abs(diff) > max_change:
                    max_change = abs(diff)
        if max_change < tol:
            return iterations, True
    return iterations, False


try:
    from numba import njit as _njit

    _cd_cycles = _njit(cache=True)(_cd_cycles_loops)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _cd_cycles = _cd_cycles_numpy


def lasso_cd(data: DataSet, lam: float, tol: float = 1e-8, max_iter: int = 10_000) -> LassoFit:
    """Cyclic coordinate descent for the 1/(2n)-scaled lasso objective.

    Uses covariance updates (a cached ``(X'X/n) theta`` vector), stopping when
    the largest coordinate change in a full cycle drops below ``tol``.
    Non-convergence is reported in the flag, never raised.
    """
    if lam < 0:
        raise InvalidParameterError(f"lasso penalty must be nonnegative, got {lam}")
    n, d = data.x.shape
    gram_n = (data.x.T @ data.x) / n
    xty_n = (data.x.T @ data.y) / n
    theta = np.zeros(d)
    cache = np.zeros(d)  # gram_n @ theta
    iterations, converged = _cd_cycles(
        np.ascontiguousarray(gram_n), xty_n, theta, cache, float(lam), float(tol), int(max_iter)
    )
    return LassoFit(coef=theta, converged=bool(converged), iterations=int(iterations))


def lasso_support(coef: np.ndarray, s: int, screening_order: Sequence[int] | None = None) -> SupportSet:
    """Support of the ``s`` largest-magnitude nonzero coefficients.

    Ties break toward smaller indices.  If the coefficient vector has fewer
    than ``s`` nonzeros the shortfall is padded from ``screening_order``
    (ascending index order when none is given).
    """
    coef = np.asarray(coef, dtype=float)
    d = coef.shape[0]
    if not (0 <= s <= d):
        raise InvalidParameterError(f"need 0 <= s <= d = {d}, got s={s}")
    order = np.lexsort((np.arange(d), -np.abs(coef)))
    chosen = [int(j) for j in order if coef[j] != 0.0][:s]
    if len(chosen) < s:
        pad_from = screening_order if screening_order is not None else range(d)
        for j in pad_from:
            if int(j) not in chosen:
                chosen.append(int(j))
            if len(chosen) == s:
                break
    return SupportSet.of(chosen)


@dataclass(frozen=True)
class LassoSelection:
    """Support picked by the fixed lambda-grid rule, with provenance flags."""

    support: SupportSet
    lam: float
    padded: bool
    converged: bool
    nonzeros: int


def marginal_order(data: DataSet) -> np.ndarray:
    """Indices sorted by decreasing |X_j'Y|, ties toward smaller indices."""
    scores = np.abs(data.x.T @ data.y)
    return np.lexsort((np.arange(scores.shape[0]), -scores))


def lasso_select(
    data: DataSet, s: int, diagnostics: Diagnostics | None = None
) -> LassoSelection:
    """Size-``s`` support from the lasso path on a fixed 50-point grid.

    The grid is log-spaced over three decades up to ``lam_max = max|X'Y|/n``;
    the fit at the smallest grid value whose estimate has at least ``s``
    nonzeros is thresholded to its top-``s`` coefficients.  If no grid point
    yields enough nonzeros, the densest fit is padded by marginal-screening
    order and the selection is flagged.
    """
    n, d = data.x.shape
    if not (1 <= s <= d):
        raise InvalidParameterError(f"need 1 <= s <= d = {d}, got s={s}")
    screening = marginal_order(data)
    lam_max = float(np.max(np.abs(data.x.T @ data.y))) / n
    if lam_max == 0.0:
        if diagnostics is not None:
            diagnostics.lasso_padded += 1
        support = lasso_support(np.zeros(d), s, screening_order=screening)
        return LassoSelection(support, lam=0.0, padded=True, converged=True, nonzeros=0)
    grid = np.geomspace(lam_max * 10.0**-LASSO_GRID_DECADES, lam_max, LASSO_GRID_SIZE)
    first_fit: LassoFit | None = None
    for lam in grid:
        fit = lasso_cd(data, float(lam))
        if first_fit is None:
            first_fit = fit
        nnz = int(np.count_nonzero(fit.coef))
        if nnz >= s:
            support = lasso_support(fit.coef, s, screening_order=screening)
            return LassoSelection(
                support, lam=float(lam), padded=False, converged=fit.converged, nonzeros=nnz
            )
    assert first_fit is not None
    if diagnostics is not None:
        diagnostics.lasso_padded += 1
    support = lasso_support(first_fit.coef, s, screening_order=screening)
    return LassoSelection(
        support,
        lam=float(grid[0]),
        padded=True,
        converged=first_fit.converged,
        nonzeros=int(np.count_nonzero(first_fit.coef)),
    )


def omp(data: DataSet, s: int, diagnostics: Diagnostics | None = None) -> SupportSet:
    """Orthogonal matching pursuit: greedily add the column most correlated
    with the current residual, refitting exactly after each addition.

    Ties break toward smaller indices.  If a refit goes singular the pursuit
    stops early and the support is padded by marginal-screening order.
    """
    n, d = data.x.shape
    if not (1 <= s <= min(n, d)):
        raise InvalidParameterError(f"need 1 <= s <= min(n, d) = {min(n, d)}, got s={s}")
    engine = build_engine(data)
    selected: list[int] = []
    residual = data.y
    for _ in range(s):
        scores = np.abs(data.x.T @ residual)
        scores_masked = scores.copy()
        scores_masked[selected] = -np.inf
        top = float(np.max(scores_masked))
        j = int(np.flatnonzero(scores_masked == top)[0])
        selected.append(j)
        trial = SupportSet.of(selected)
        try:
            theta = solve_coefficients(engine, trial)
        except SingularSupportError:
            selected.pop()
            if diagnostics is not None:
                diagnostics.omp_padded += 1
            for k in marginal_order(data):
                if int(k) not in selected:
                    selected.append(int(k))
                if len(selected) == s:
                    break
            break
        residual = data.y - data.x[:, trial.as_array()] @ theta
    return SupportSet.of(selected)


def marginal_screening(data: DataSet, s: int) -> SupportSet:
    """Top-``s`` indices by absolute correlation with the response."""
    d = data.x.shape[1]
    if not (1 <= s <= d):
        raise InvalidParameterError(f"need 1 <= s <= d = {d}, got s={s}")
    return SupportSet.of(int(j) for j in marginal_order(data)[:s])


_KINDS = ("bss", "bssu", "aic", "bic", "lasso", "omp", "marginal")


@dataclass(frozen=True)
class EstimatorSpec:
    """A named estimator with its parameters, runnable on any dataset."""

    kind: str
    s: int | None = None
    sbar: int | None = None
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown estimator kind {self.kind!r}; choose from {_KINDS}")
        if self.kind in ("bss", "lasso", "omp", "marginal"):
            if self.s is None or self.s < 1:
                raise InvalidParameterError(f"{self.kind} requires a positive target size s")
        if self.kind in ("bssu", "aic", "bic"):
            if self.sbar is None or self.sbar < 0:
                raise InvalidParameterError(f"{self.kind} requires a nonnegative size bound sbar")
        if self.kind == "bssu":
            if self.tau is None or self.tau < 0:
                raise InvalidParameterError("bssu requires a nonnegative penalty tau")

    @property
    def label(self) -> str:
        if self.kind == "bss":
            return f"bss(s={self.s})"
        if self.kind == "bssu":
            return f"bssu(sbar={self.sbar},tau={self.tau!r})"
        if self.kind in ("aic", "bic"):
            return f"{self.kind}(sbar={self.sbar})"
        return f"{self.kind}(s={self.s})"


def run_estimator(
    spec: EstimatorSpec, data: DataSet, diagnostics: Diagnostics | None = None
) -> SupportSet:
    """Dispatch a spec to its implementation."""
    if spec.kind == "bss":
        return bss(build_engine(data), spec.s, diagnostics)
    if spec.kind == "bssu":
        return bssu(build_engine(data), spec.sbar, spec.tau, diagnostics=diagnostics)
    if spec.kind == "aic":
        return aic(build_engine(data), spec.sbar, diagnostics)
    if spec.kind == "bic":
        return bic(build_engine(data), spec.sbar, diagnostics)
    if spec.kind == "lasso":
        return lasso_select(data, spec.s, diagnostics).support
    if spec.kind == "omp":
        return omp(data, spec.s, diagnostics)
    if spec.kind == "marginal":
        return marginal_screening(data, spec.s)
    raise InvalidParameterError(f"unknown estimator kind {spec.kind!r}")
