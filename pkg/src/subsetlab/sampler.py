"""Ground-truth problem instances and reproducible Gaussian data generation.

An instance is a coefficient vector with its support, a noise variance, and a
design covariance.  Rows of the design sample are i.i.d. ``N(0, Sigma)``
generated as ``Z @ L.T`` with ``L`` the lower Cholesky factor; responses are
``X @ beta + eps`` with ``eps`` i.i.d. ``N(0, sigma2)``.

The design matrix and the noise come from two independent substreams derived
from the dataset seed (labels ``"design"`` and ``"noise"``), so the noise can
be re-drawn without perturbing the design; :func:`sample_dataset` is pure and
bit-reproducible for fixed arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .design import Covariance, compute_omega_known, compute_omega_unknown
from .errors import BudgetExceededError, InvalidParameterError, MatrixFormatError
from .rng import generator, mix64
from .subsets import SupportSet


@dataclass(frozen=True)
class ProblemInstance:
    """One ground-truth model: coefficients, support, noise level, design."""

    beta: np.ndarray
    support: SupportSet
    sigma2: float
    design: Covariance

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        if beta.ndim != 1:
            raise InvalidParameterError("beta must be a 1-d vector")
        if self.design.dim != beta.shape[0]:
            raise InvalidParameterError(
                f"design dimension {self.design.dim} does not match beta length {beta.shape[0]}"
            )
        if not (self.sigma2 > 0):
            raise InvalidParameterError(f"noise variance must be positive, got {self.sigma2}")
        derived = SupportSet.of(np.flatnonzero(beta))
        if derived != self.support:
            raise InvalidParameterError(
                f"support {self.support.indices} does not equal the nonzero set {derived.indices}"
            )

    @property
    def dim(self) -> int:
        return int(self.beta.shape[0])

    @property
    def sparsity(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class DataSet:
    """An n-by-d design sample with its response vector and generation seed."""

    n: int
    x: np.ndarray
    y: np.ndarray
    seed: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if self.n < 1:
            raise InvalidParameterError(f"sample count must be >= 1, got {self.n}")
        if x.shape[0] != self.n or y.shape != (self.n,):
            raise InvalidParameterError("x/y shapes do not match the sample count")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return int(self.x.shape[1])


@dataclass(frozen=True)
class ClassParams:
    """Parameters of the model class an instance is checked against.

    ``known_sparsity`` selects exact-size membership (``s``) versus the
    size-bounded variant (``sbar``); sizes are capped at d/2.
    """

    d: int
    beta_min: float
    omega: float
    sigma2: float
    known_sparsity: bool = True
    s: int | None = None
    sbar: int | None = None

    def __post_init__(self):
        if self.beta_min <= 0:
            raise InvalidParameterError(f"beta_min must be positive, got {self.beta_min}")
        if self.omega <= 0:
            raise InvalidParameterError(f"omega must be positive, got {self.omega}")
        if self.sigma2 <= 0:
            raise InvalidParameterError(f"sigma2 must be positive, got {self.sigma2}")
        if self.known_sparsity:
            if self.s is None:
                raise InvalidParameterError("known-sparsity class requires s")
            if not (1 <= self.s <= self.d // 2):
                raise InvalidParameterError(f"need 1 <= s <= d/2, got s={self.s}, d={self.d}")
        else:
            if self.sbar is None:
                raise InvalidParameterError("unknown-sparsity class requires sbar")
            if not (1 <= self.sbar <= self.d // 2):
                raise InvalidParameterError(f"need 1 <= sbar <= d/2, got sbar={self.sbar}, d={self.d}")
        if self.s is not None and self.sbar is not None and self.s > self.sbar:
            raise InvalidParameterError(f"need s <= sbar, got s={self.s}, sbar={self.sbar}")


@dataclass(frozen=True)
class MembershipReport:
    """Outcome of a class-membership check.

    ``in_class`` is None when the omega computation exceeded its budget and
    membership could not be decided either way.
    """

    in_class: bool | None
    violations: tuple[str, ...]
    omega_computed: float | None = None
    indeterminate: bool = False


def make_beta(d: int, support, values: Sequence[float]) -> np.ndarray:
    """Place ``values`` at the support positions of a length-``d`` zero vector.

    Every value must be nonzero, otherwise the stated support would not equal
    the nonzero set of the result.
    """
    support = support if isinstance(support, SupportSet) else SupportSet.of(support)
    support.validate_for_dim(d)
    vals = np.asarray(list(values), dtype=float)
    if vals.shape != (len(support),):
        raise InvalidParameterError(f"expected {len(support)} values for the support, got {vals.shape}")
    if np.any(vals == 0.0):
        raise InvalidParameterError("support values must all be nonzero")
    beta = np.zeros(d)
    beta[support.as_array()] = vals
    return beta


def make_instance(beta: np.ndarray, sigma2: float, design: Covariance) -> ProblemInstance:
    """Wrap a coefficient vector into an instance, deriving its support."""
    beta = np.asarray(beta, dtype=float)
    return ProblemInstance(
        beta=beta,
        support=SupportSet.of(np.flatnonzero(beta)),
        sigma2=float(sigma2),
        design=design,
    )


def check_membership(
    instance: ProblemInstance, params: ClassParams, pair_budget: int | None = None
) -> MembershipReport:
    """Check an instance against a model class, listing each violated clause."""
    if instance.dim != params.d:
        raise InvalidParameterError(f"instance dimension {instance.dim} differs from class d={params.d}")
    violations: list[str] = []
    k = instance.sparsity
    if params.known_sparsity:
        if k != params.s:
            violations.append(f"support size {k} != required s={params.s}")
    else:
        if k > params.sbar:
            violations.append(f"support size {k} > bound sbar={params.sbar}")
    if k > 0:
        min_abs = float(np.min(np.abs(instance.beta[instance.support.as_array()])))
        if min_abs < params.beta_min:
            violations.append(f"min |beta_j| {min_abs:.6g} < beta_min {params.beta_min:.6g}")
    kwargs = {} if pair_budget is None else {"pair_budget": pair_budget}
    try:
        if params.known_sparsity:
            report = compute_omega_known(instance.design, params.s, **kwargs)
        else:
            report = compute_omega_unknown(instance.design, params.sbar, **kwargs)
    except BudgetExceededError:
        return MembershipReport(
            in_class=None,
            violations=tuple(violations),
            omega_computed=None,
            indeterminate=True,
        )
    if report.omega < params.omega:
        violations.append(f"computed omega {report.omega:.6g} < required {params.omega:.6g}")
    return MembershipReport(
        in_class=not violations,
        violations=tuple(violations),
        omega_computed=report.omega,
    )


def sample_dataset(
    instance: ProblemInstance, n: int, seed: int, noise_seed: int | None = None
) -> DataSet:
    """Draw ``n`` i.i.d. rows from the instance, deterministically in ``seed``.

    ``noise_seed`` overrides the seed of the noise substream only; the design
    matrix is a function of ``seed`` alone either way.
    """
    if n < 1:
        raise InvalidParameterError(f"sample count must be >= 1, got {n}")
    lower = instance.design.cholesky_lower()
    g_design = generator(mix64(seed, "design"))
    g_noise = generator(mix64(seed if noise_seed is None else noise_seed, "noise"))
    z = g_design.standard_normal((n, instance.dim))
    x = z @ lower.T
    eps = g_noise.standard_normal(n) * math.sqrt(instance.sigma2)
    y = x @ instance.beta + eps
    return DataSet(n=n, x=x, y=y, seed=int(seed))


def write_dataset_csv(data: DataSet, path: str) -> None:
    """Serialize as CSV with header ``y,x1,...,xd`` at full precision."""
    d = data.dim
    header = "y," + ",".join(f"x{j}" for j in range(1, d + 1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i in range(data.n):
            row = [f"{data.y[i]:.17g}"] + [f"{v:.17g}" for v in data.x[i]]
            fh.write(",".join(row) + "\n")


def read_dataset_csv(path: str, seed: int = 0) -> DataSet:
    """Parse a dataset written by :func:`write_dataset_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise MatrixFormatError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if header[0] != "y" or any(h != f"x{j}" for j, h in enumerate(header[1:], start=1)):
        raise MatrixFormatError(f"{path}: expected header y,x1,...,xd, got {lines[0]!r}")
    d = len(header) - 1
    ys, xs = [], []
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != d + 1:
            raise MatrixFormatError(f"{path}: row {i + 1} has {len(parts)} fields, expected {d + 1}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise MatrixFormatError(f"{path}: row {i + 1} contains a non-numeric field") from None
        ys.append(values[0])
        xs.append(values[1:])
    return DataSet(n=len(ys), x=np.array(xs), y=np.array(ys), seed=seed)
