"""Design covariance constructions and their distinguishability floor.

A :class:`Covariance` is a validated d-by-d positive-definite matrix with a
provenance tag.  Three named constructions are provided:

- identity,
- equi-correlation ``omega * I + (1 - omega) * ones @ ones.T`` (unit diagonal,
  constant off-diagonal ``1 - omega``),
- the 2x2 family ``[[1, b], [b, 1 + b^2]]`` (determinant 1 for every b).

The central analysis quantity is the *conditional-covariance floor*: the
minimum over pairs of candidate supports (S, T) of the smallest eigenvalue of
``Sigma_{S \\ T | T}``, the covariance of the variables in S \\ T after
regressing out the variables in T.  It measures how much variance in one
candidate support can never be explained by another, and it is the exact
constant the subset-selection penalty and the sample-size calculators consume.
:func:`compute_omega_known` takes both supports of one fixed size;
:func:`compute_omega_unknown` ranges over all supports up to a size bound,
requiring only that S is not contained in T.

Both minimizations are exact enumerations with a hard budget guard: a sampled
minimum would silently overestimate the floor, so oversized problems are
refused instead.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    AsymmetricMatrixError,
    BudgetExceededError,
    EmptyDifferenceError,
    InvalidParameterError,
    MatrixFormatError,
    NotPositiveDefiniteError,
)
from .subsets import SupportSet, binom, colex_combinations, count_subsets_up_to

DEFAULT_PAIR_BUDGET = 10_000_000

TAG_IDENTITY = "identity"
TAG_EQUICORRELATION = "equicorrelation"
TAG_TWO_BY_TWO = "two_by_two"
TAG_FROM_FILE = "from_file"


@dataclass(frozen=True)
class CovarianceTag:
    """Provenance of a covariance: which construction, with which parameter."""

    kind: str
    omega: float | None = None
    b: float | None = None
    path: str | None = None

    def describe(self) -> str:
        if self.kind == TAG_EQUICORRELATION:
            return f"equicorrelation(omega={self.omega})"
        if self.kind == TAG_TWO_BY_TWO:
            return f"two_by_two(b={self.b})"
        if self.kind == TAG_FROM_FILE:
            return f"from_file({self.path})"
        return self.kind


@dataclass(frozen=True)
class Covariance:
    """Symmetric positive-definite design covariance."""

    dim: int
    entries: np.ndarray
    tag: CovarianceTag

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (self.dim, self.dim):
            raise InvalidParameterError(f"expected a {self.dim}x{self.dim} matrix, got shape {entries.shape}")
        scale = max(1.0, float(np.max(np.abs(entries))))
        skew = float(np.max(np.abs(entries - entries.T))) if self.dim else 0.0
        if skew > 1e-12 * scale:
            raise AsymmetricMatrixError(f"matrix is asymmetric: max |A - A^T| = {skew:.3e}")
        entries = (entries + entries.T) / 2.0
        _require_positive_definite(entries)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def cholesky_lower(self) -> np.ndarray:
        return np.linalg.cholesky(self.entries)

    def submatrix(self, rows: Iterable[int], cols: Iterable[int]) -> np.ndarray:
        r = np.asarray(list(rows), dtype=np.intp)
        c = np.asarray(list(cols), dtype=np.intp)
        return self.entries[np.ix_(r, c)]


@dataclass(frozen=True)
class OmegaReport:
    """Exact conditional-covariance floor with the pair attaining it.

    ``omega`` equals the smallest eigenvalue of ``Sigma_{S \\ T | T}`` at
    ``(witness_s, witness_t)``; among all minimizing pairs the
    lexicographically smallest ``(S, T)`` is reported.  ``pairs_scanned``
    counts the deduplicated (difference-set, conditioning-set) evaluations
    actually performed.
    """

    omega: float
    witness_s: SupportSet
    witness_t: SupportSet
    pairs_scanned: int


def _require_positive_definite(entries: np.ndarray) -> None:
    try:
        np.linalg.cholesky(entries)
    except np.linalg.LinAlgError:
        eigmin = float(np.min(np.linalg.eigvalsh(entries))) if entries.size else float("nan")
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (smallest eigenvalue {eigmin:.6e})",
            min_eigenvalue=eigmin,
        ) from None


def make_identity(d: int) -> Covariance:
    """Identity design of dimension ``d >= 1``."""
    if d < 1:
        raise InvalidParameterError(f"dimension must be a positive integer, got {d}")
    return Covariance(d, np.eye(d), CovarianceTag(TAG_IDENTITY))


def make_equicorrelation(d: int, omega: float) -> Covariance:
    """Unit-diagonal design with constant off-diagonal ``1 - omega``.

    Positive definite exactly for ``0 < omega <= 1``; ``omega == 1`` is the
    identity.
    """
    if d < 1:
        raise InvalidParameterError(f"dimension must be a positive integer, got {d}")
    if not (0.0 < omega <= 1.0):
        raise InvalidParameterError(f"equicorrelation parameter must lie in (0, 1], got {omega}")
    entries = omega * np.eye(d) + (1.0 - omega) * np.ones((d, d))
    return Covariance(d, entries, CovarianceTag(TAG_EQUICORRELATION, omega=float(omega)))


def make_two_by_two(b: float) -> Covariance:
    """The 2x2 design ``[[1, b], [b, 1 + b^2]]``; determinant 1 for any b."""
    entries = np.array([[1.0, float(b)], [float(b), 1.0 + float(b) ** 2]])
    return Covariance(2, entries, CovarianceTag(TAG_TWO_BY_TWO, b=float(b)))


def save_matrix(entries: np.ndarray, path: str) -> None:
    """Write a square matrix in the text format read by :func:`load_covariance`."""
    entries = np.asarray(entries, dtype=float)
    d = entries.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{d}\n")
        for row in entries:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _parse_square_matrix(text: str, origin: str) -> np.ndarray:
    lines = [ln.strip() for ln in io.StringIO(text) if ln.strip()]
    if not lines:
        raise MatrixFormatError(f"{origin}: empty matrix file")
    try:
        d = int(lines[0])
    except ValueError:
        raise MatrixFormatError(f"{origin}: first line must be the dimension, got {lines[0]!r}") from None
    if d < 1:
        raise MatrixFormatError(f"{origin}: dimension must be positive, got {d}")
    if len(lines) - 1 != d:
        raise MatrixFormatError(f"{origin}: expected {d} matrix rows, found {len(lines) - 1}")
    rows = []
    for i, line in enumerate(lines[1:]):
        parts = line.split()
        if len(parts) != d:
            raise MatrixFormatError(f"{origin}: row {i + 1} has {len(parts)} entries, expected {d}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise MatrixFormatError(f"{origin}: row {i + 1} contains a non-numeric entry") from None
    return np.array(rows, dtype=float)


def load_covariance(path: str) -> Covariance:
    """Read a covariance from a text file (first line ``d``, then d rows).

    Asymmetry beyond 1e-8 (relative) is rejected; smaller asymmetry is
    symmetrized away.  Non-positive-definite matrices are rejected with the
    smallest eigenvalue reported.
    """
    with open(path, "r", encoding="utf-8") as fh:
        entries = _parse_square_matrix(fh.read(), origin=str(path))
    scale = max(1.0, float(np.max(np.abs(entries))))
    skew = float(np.max(np.abs(entries - entries.T)))
    if skew > 1e-8 * scale:
        raise AsymmetricMatrixError(f"{path}: entries differ from transpose by {skew:.3e} (tolerance 1e-8)")
    entries = (entries + entries.T) / 2.0
    return Covariance(entries.shape[0], entries, CovarianceTag(TAG_FROM_FILE, path=str(path)))


def _as_support(x) -> SupportSet:
    return x if isinstance(x, SupportSet) else SupportSet.of(x)


def conditional_covariance(sigma: Covariance, s_set, t_set) -> np.ndarray:
    """Covariance of the variables in ``S \\ T`` after regressing out ``T``.

    Returns the Schur complement ``Sigma_DD - Sigma_DT Sigma_TT^-1 Sigma_TD``
    with ``D = S \\ T``; for empty ``T`` this is just ``Sigma_DD``.  Symmetric
    positive definite whenever ``sigma`` is.
    """
    s_set = _as_support(s_set)
    t_set = _as_support(t_set)
    s_set.validate_for_dim(sigma.dim)
    t_set.validate_for_dim(sigma.dim)
    diff = s_set.difference(t_set)
    if len(diff) == 0:
        raise EmptyDifferenceError(f"S={s_set.indices} is contained in T={t_set.indices}")
    d_idx = diff.as_array()
    if len(t_set) == 0:
        out = sigma.entries[np.ix_(d_idx, d_idx)].copy()
        return (out + out.T) / 2.0
    t_idx = t_set.as_array()
    sig_dd = sigma.entries[np.ix_(d_idx, d_idx)]
    sig_dt = sigma.entries[np.ix_(d_idx, t_idx)]
    factor = cho_factor(sigma.entries[np.ix_(t_idx, t_idx)], lower=True)
    out = sig_dd - sig_dt @ cho_solve(factor, sig_dt.T)
    return (out + out.T) / 2.0


def _lambda_min(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a small symmetric matrix.

    Falls back to the closed form for sizes 1 and 2 if the dense
    eigen-decomposition fails to converge.
    """
    try:
        return float(np.linalg.eigvalsh(matrix)[0])
    except np.linalg.LinAlgError:
        r = matrix.shape[0]
        if r == 1:
            return float(matrix[0, 0])
        if r == 2:
            a, c, b = matrix[0, 0], matrix[1, 1], matrix[0, 1]
            return float((a + c) / 2.0 - np.sqrt(((a - c) / 2.0) ** 2 + b * b))
        raise


def _schur_lambda_min(sigma: Covariance, d_idx: np.ndarray, t_idx: np.ndarray, t_factor) -> float:
    sig_dd = sigma.entries[np.ix_(d_idx, d_idx)]
    if t_idx.size == 0:
        return _lambda_min(sig_dd)
    sig_dt = sigma.entries[np.ix_(d_idx, t_idx)]
    schur = sig_dd - sig_dt @ cho_solve(t_factor, sig_dt.T)
    return _lambda_min((schur + schur.T) / 2.0)


def _canonical_pair_known(d_tuple: tuple[int, ...], t_tuple: tuple[int, ...], s: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    # lexicographically smallest S of size s with S \ T equal to the difference set
    keep = s - len(d_tuple)
    s_tuple = tuple(sorted(d_tuple + t_tuple[:keep]))
    return (s_tuple, t_tuple)


def _canonical_pair_unknown(d_tuple: tuple[int, ...], t_tuple: tuple[int, ...], sbar: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    # adding a T-element below max(D) moves S earlier in lexicographic order;
    # larger ones never help, so take the smallest such elements that fit
    room = sbar - len(d_tuple)
    helpful = [t for t in t_tuple if t < d_tuple[-1]][:room]
    s_tuple = tuple(sorted(d_tuple + tuple(helpful)))
    return (s_tuple, t_tuple)


def compute_omega_known(
    sigma: Covariance, s: int, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> OmegaReport:
    """Exact floor over all ordered pairs of distinct size-``s`` supports.

    The conditional covariance depends on the pair only through the difference
    set ``D = S \\ T`` and ``T``, so enumeration runs over ``(D, T)`` with
    ``D`` disjoint from ``T`` and ``1 <= |D| <= s``, removing the overlap
    redundancy of the naive double loop.  The budget is checked against the
    naive ordered-pair count ``C(d, s)^2``.
    """
    d = sigma.dim
    if not (1 <= s <= d // 2):
        raise InvalidParameterError(f"sparsity must satisfy 1 <= s <= d/2, got s={s}, d={d}")
    naive_pairs = binom(d, s) ** 2
    if naive_pairs > pair_budget:
        raise BudgetExceededError(
            f"omega enumeration needs C({d},{s})^2 = {naive_pairs} pairs, budget is {pair_budget}",
            required=naive_pairs,
            budget=pair_budget,
        )
    best = np.inf
    best_pair: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    scanned = 0
    full = np.arange(d, dtype=np.intp)
    for t_tuple in colex_combinations(d, s):
        t_idx = np.asarray(t_tuple, dtype=np.intp)
        t_factor = cho_factor(sigma.entries[np.ix_(t_idx, t_idx)], lower=True)
        rest = np.setdiff1d(full, t_idx, assume_unique=True)
        for r in range(1, s + 1):
            for d_local in colex_combinations(rest.size, r):
                d_idx = rest[list(d_local)]
                value = _schur_lambda_min(sigma, d_idx, t_idx, t_factor)
                scanned += 1
                pair = _canonical_pair_known(tuple(int(i) for i in d_idx), t_tuple, s)
                if value < best or (value == best and pair < best_pair):
                    best = value
                    best_pair = pair
    assert best_pair is not None
    return OmegaReport(
        omega=float(best),
        witness_s=SupportSet(best_pair[0]),
        witness_t=SupportSet(best_pair[1]),
        pairs_scanned=scanned,
    )


def compute_omega_unknown(
    sigma: Covariance, sbar: int, pair_budget: int = DEFAULT_PAIR_BUDGET
) -> OmegaReport:
    """Exact floor over supports of size at most ``sbar`` with ``S`` not inside ``T``.

    Same deduplication as :func:`compute_omega_known`: enumerate the
    conditioning set ``T`` (any size up to ``sbar``, including empty) and the
    difference set ``D`` disjoint from it, ``1 <= |D| <= sbar``.
    """
    d = sigma.dim
    if not (1 <= sbar <= d // 2):
        raise InvalidParameterError(f"sparsity bound must satisfy 1 <= sbar <= d/2, got sbar={sbar}, d={d}")
    naive_pairs = count_subsets_up_to(d, sbar) ** 2
    if naive_pairs > pair_budget:
        raise BudgetExceededError(
            f"omega enumeration needs {naive_pairs} pairs, budget is {pair_budget}",
            required=naive_pairs,
            budget=pair_budget,
        )
    best = np.inf
    best_pair: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    scanned = 0
    full = np.arange(d, dtype=np.intp)
    for j in range(0, sbar + 1):
        for t_tuple in colex_combinations(d, j):
            t_idx = np.asarray(t_tuple, dtype=np.intp)
            t_factor = None
            if j > 0:
                t_factor = cho_factor(sigma.entries[np.ix_(t_idx, t_idx)], lower=True)
            rest = np.setdiff1d(full, t_idx, assume_unique=True)
            for r in range(1, sbar + 1):
                for d_local in colex_combinations(rest.size, r):
                    d_idx = rest[list(d_local)]
                    value = _schur_lambda_min(sigma, d_idx, t_idx, t_factor)
                    scanned += 1
                    pair = _canonical_pair_unknown(tuple(int(i) for i in d_idx), t_tuple, sbar)
                    if value < best or (value == best and pair < best_pair):
                        best = value
                        best_pair = pair
    assert best_pair is not None
    return OmegaReport(
        omega=float(best),
        witness_s=SupportSet(best_pair[0]),
        witness_t=SupportSet(best_pair[1]),
        pairs_scanned=scanned,
    )
