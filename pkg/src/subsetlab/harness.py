"""Seeded Monte Carlo sweep runner with byte-stable outputs.

A sweep draws, for every (estimator, sample-size, trial) cell coordinate, a
fresh dataset whose seed is a pure function of those coordinates and the
master seed, runs the estimator, and scores exact support recovery.  Because
the per-trial seed never depends on scheduling, results are identical for any
worker count, and aggregation is keyed integer addition, so the emitted CSV
is byte-identical run to run.

Wall-clock timing is therefore *opt-in* (``sweep.timing = on``): a measured
runtime column cannot be byte-stable, so by default the column is written as
0.0 and the determinism contract covers the whole file.

Configuration is a flat ``key = value`` text format (unknown keys are
errors)::

    design.kind       identity | equicorr | twobytwo | file
    design.d          dimension (identity/equicorr)
    design.omega      equicorrelation level in (0, 1]
    design.b          two-by-two parameter
    design.path       covariance file (kind = file)
    instance.s        true support = first s variables, or
    instance.support  explicit 1-based comma-separated indices
    instance.betamin  nonzero magnitude (default 1.0)
    instance.signs    plus | alternating (default plus)
    instance.sigma2   noise variance (default 1.0)
    sweep.ngrid       strictly increasing comma-separated sample sizes
    sweep.trials      trials per cell
    sweep.seed        64-bit master seed
    sweep.delta       target error level (default 0.05)
    sweep.estimators  comma list from bss,bssu,aic,bic,lasso,omp,marginal
    sweep.timing      on | off (default off)
    estimator.sbar    size bound for bssu/aic/bic
    estimator.tau     bssu penalty (default omega * betamin^2 / 4 from the
                      design tag)
    gap.omegas        comma list of equicorrelation levels for gap runs
    out.path          default CSV output path

CSV schema (exact header)::

    estimator,n,successes,trials,rate,wilson_lo,wilson_hi,mean_runtime_ms
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import math
import os
import time
from dataclasses import dataclass, replace


import numpy as np

from .design import (
    Covariance,
    load_covariance,
    make_equicorrelation,
    make_identity,
    make_two_by_two,
)
from .errors import ConfigError, NoCrossingError, SubsetLabError
from .estimators import Diagnostics, EstimatorSpec, default_tau, run_estimator
from .rng import mix64
from .sampler import ClassParams, ProblemInstance, make_beta, make_instance, sample_dataset
from .subsets import SupportSet
from .theory import bound_lower_dimension, bound_lower_equicorr, bound_upper_known

WILSON_Z95 = 1.959963984540054

CSV_HEADER = "estimator,n,successes,trials,rate,wilson_lo,wilson_hi,mean_runtime_ms"

_ESTIMATOR_KINDS = ("bss", "bssu", "aic", "bic", "lasso", "omp", "marginal")

_KNOWN_KEYS = {
    "design.kind",
    "design.d",
    "design.omega",
    "design.b",
    "design.path",
    "instance.s",
    "instance.support",
    "instance.betamin",
    "instance.signs",
    "instance.sigma2",
    "sweep.ngrid",
    "sweep.trials",
    "sweep.seed",
    "sweep.delta",
    "sweep.estimators",
    "sweep.timing",
    "estimator.sbar",
    "estimator.tau",
    "gap.omegas",
    "out.path",
}


@dataclass(frozen=True)
class SweepConfig:
    design_kind: str
    design_d: int | None
    design_omega: float | None
    design_b: float | None
    design_path: str | None
    support: tuple[int, ...] | None  # 0-based; None means first s variables
    s: int | None
    beta_min: float
    signs: str
    sigma2: float
    n_grid: tuple[int, ...]
    trials: int
    estimators: tuple[str, ...]
    sbar: int | None
    tau: float | None
    master_seed: int
    delta_conf: float
    timing: bool
    gap_omegas: tuple[float, ...]
    out_path: str | None


@dataclass(frozen=True)
class SweepRow:
    estimator: str
    n: int
    successes: int
    trials: int
    rate: float
    wilson_lo: float
    wilson_hi: float
    mean_runtime_ms: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    config_hash: str
    master_seed: int
    failures: tuple[tuple[str, int, int], ...] = ()
    diagnostics: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class BoundsRow:
    """One verify-bounds comparison at a single equicorrelation level."""

    omega: float
    empirical_n_star: int
    upper_known: float
    lower_equicorr: float | None
    lower_dimension: float
    calibrated_constant: float


@dataclass(frozen=True)
class GapSweep:
    omega: float
    result: SweepResult


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z95) -> tuple[float, float]:
    """95% Wilson score interval; well-behaved at rates of exactly 0 or 1."""
    if trials < 1 or not (0 <= successes <= trials):
        raise ConfigError(f"invalid counts: {successes}/{trials}")
    p = successes / trials
    z2n = z * z / trials
    denom = 1.0 + z2n
    center = (p + z2n / 2.0) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials)) / denom
    # the score interval always contains the point estimate; keep that true
    # under floating-point rounding at the endpoints
    return (min(max(0.0, center - half), p), max(min(1.0, center + half), p))


def _parse_value(key: str, raw: str):
    try:
        if key in ("design.d", "instance.s", "sweep.trials", "sweep.seed", "estimator.sbar"):
            return int(raw)
        if key in ("design.omega", "design.b", "instance.betamin", "instance.sigma2", "sweep.delta", "estimator.tau"):
            return float(raw)
        if key == "sweep.ngrid":
            return tuple(int(v.strip()) for v in raw.split(",") if v.strip())
        if key == "gap.omegas":
            return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
        if key == "instance.support":
            return tuple(int(v.strip()) for v in raw.split(",") if v.strip())
        if key == "sweep.estimators":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
        if key == "sweep.timing":
            if raw not in ("on", "off"):
                raise ValueError(raw)
            return raw == "on"
        return raw
    except ValueError:
        raise ConfigError(f"could not parse value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> SweepConfig:
    """Parse the flat key = value format; unknown keys are errors."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)

    def req(key: str):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
        return values[key]

    kind = req("design.kind")
    if kind not in ("identity", "equicorr", "twobytwo", "file"):
        raise ConfigError(f"design.kind must be identity|equicorr|twobytwo|file, got {kind!r}")
    if kind == "file":
        req("design.path")
    elif kind == "twobytwo":
        req("design.b")
    else:
        req("design.d")
    if kind == "equicorr":
        req("design.omega")

    support_1based = values.get("instance.support")
    s = values.get("instance.s")
    if support_1based is None and s is None:
        raise ConfigError("one of instance.s or instance.support is required")
    support = None
    if support_1based is not None:
        if any(j < 1 for j in support_1based):
            raise ConfigError("instance.support uses 1-based indices")
        support = tuple(sorted(j - 1 for j in support_1based))
        if len(set(support)) != len(support):
            raise ConfigError("instance.support contains duplicates")

    n_grid = req("sweep.ngrid")
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ConfigError("sweep.ngrid must be a nonempty strictly increasing list")
    trials = req("sweep.trials")
    if trials < 1:
        raise ConfigError("sweep.trials must be >= 1")
    estimators = req("sweep.estimators")
    for est in estimators:
        if est not in _ESTIMATOR_KINDS:
            raise ConfigError(f"unknown estimator {est!r} in sweep.estimators")
    if len(set(estimators)) != len(estimators):
        raise ConfigError("sweep.estimators contains duplicates")
    delta_conf = values.get("sweep.delta", 0.05)
    if not (0.0 < delta_conf < 0.5):
        raise ConfigError(f"sweep.delta must lie in (0, 0.5), got {delta_conf}")
    signs = values.get("instance.signs", "plus")
    if signs not in ("plus", "alternating"):
        raise ConfigError(f"instance.signs must be plus|alternating, got {signs!r}")

    return SweepConfig(
        design_kind=kind,
        design_d=values.get("design.d"),
        design_omega=values.get("design.omega"),
        design_b=values.get("design.b"),
        design_path=values.get("design.path"),
        support=support,
        s=s,
        beta_min=values.get("instance.betamin", 1.0),
        signs=signs,
        sigma2=values.get("instance.sigma2", 1.0),
        n_grid=tuple(n_grid),
        trials=trials,
        estimators=tuple(estimators),
        sbar=values.get("estimator.sbar"),
        tau=values.get("estimator.tau"),
        master_seed=req("sweep.seed"),
        delta_conf=delta_conf,
        timing=values.get("sweep.timing", False),
        gap_omegas=tuple(values.get("gap.omegas", ())),
        out_path=values.get("out.path"),
    )


def load_config(path: str) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def canonical_text(config: SweepConfig) -> str:
    """Round-trippable key = value rendering with a fixed key order."""
    lines = [f"design.kind = {config.design_kind}"]
    if config.design_d is not None:
        lines.append(f"design.d = {config.design_d}")
    if config.design_omega is not None:
        lines.append(f"design.omega = {config.design_omega!r}")
    if config.design_b is not None:
        lines.append(f"design.b = {config.design_b!r}")
    if config.design_path is not None:
        lines.append(f"design.path = {config.design_path}")
    if config.support is not None:
        lines.append("instance.support = " + ",".join(str(j + 1) for j in config.support))
    elif config.s is not None:
        lines.append(f"instance.s = {config.s}")
    lines.append(f"instance.betamin = {config.beta_min!r}")
    lines.append(f"instance.signs = {config.signs}")
    lines.append(f"instance.sigma2 = {config.sigma2!r}")
    lines.append("sweep.ngrid = " + ",".join(str(n) for n in config.n_grid))
    lines.append(f"sweep.trials = {config.trials}")
    lines.append(f"sweep.seed = {config.master_seed}")
    lines.append(f"sweep.delta = {config.delta_conf!r}")
    lines.append("sweep.estimators = " + ",".join(config.estimators))
    lines.append(f"sweep.timing = {'on' if config.timing else 'off'}")
    if config.sbar is not None:
        lines.append(f"estimator.sbar = {config.sbar}")
    if config.tau is not None:
        lines.append(f"estimator.tau = {config.tau!r}")
    if config.gap_omegas:
        lines.append("gap.omegas = " + ",".join(repr(w) for w in config.gap_omegas))
    if config.out_path is not None:
        lines.append(f"out.path = {config.out_path}")
    return "\n".join(lines) + "\n"


def config_hash(config: SweepConfig) -> str:
    return hashlib.sha256(canonical_text(config).encode("utf-8")).hexdigest()[:16]


def build_design(config: SweepConfig, omega_override: float | None = None) -> Covariance:
    kind = config.design_kind
    if kind == "identity":
        if omega_override is not None and omega_override != 1.0:
            return make_equicorrelation(config.design_d, omega_override)
        return make_identity(config.design_d)
    if kind == "equicorr":
        omega = omega_override if omega_override is not None else config.design_omega
        return make_equicorrelation(config.design_d, omega)
    if kind == "twobytwo":
        return make_two_by_two(config.design_b)
    if kind == "file":
        return load_covariance(config.design_path)
    raise ConfigError(f"unknown design kind {kind!r}")


def nominal_class_omega(design: Covariance) -> float | None:
    """The conditional-covariance floor implied by a design's tag, if any.

    identity -> 1; equicorrelation -> its omega (the floor for difference
    sets of size >= 2, a valid floor for all); two-by-two -> 1/(1 + b^2).
    File designs carry no nominal value.
    """
    tag = design.tag
    if tag.kind == "identity":
        return 1.0
    if tag.kind == "equicorrelation":
        return tag.omega
    if tag.kind == "two_by_two":
        return 1.0 / (1.0 + tag.b**2)
    return None


def build_instance(config: SweepConfig, design: Covariance) -> ProblemInstance:
    d = design.dim
    if config.support is not None:
        support = SupportSet(config.support)
    else:
        if config.s < 1 or config.s > d:
            raise ConfigError(f"instance.s = {config.s} out of range for d = {d}")
        support = SupportSet(tuple(range(config.s)))
    support.validate_for_dim(d)
    values = [config.beta_min] * len(support)
    if config.signs == "alternating":
        values = [v if i % 2 == 0 else -v for i, v in enumerate(values)]
    beta = make_beta(d, support, values)
    return make_instance(beta, config.sigma2, design)


def build_estimator_specs(config: SweepConfig, design: Covariance) -> tuple[EstimatorSpec, ...]:
    s = len(config.support) if config.support is not None else config.s
    specs = []
    for kind in config.estimators:
        if kind in ("bss", "lasso", "omp", "marginal"):
            specs.append(EstimatorSpec(kind, s=s))
        elif kind in ("aic", "bic"):
            if config.sbar is None:
                raise ConfigError(f"{kind} requires estimator.sbar")
            specs.append(EstimatorSpec(kind, sbar=config.sbar))
        elif kind == "bssu":
            if config.sbar is None:
                raise ConfigError("bssu requires estimator.sbar")
            tau = config.tau
            if tau is None:
                omega = nominal_class_omega(design)
                if omega is None:
                    raise ConfigError("bssu on a file design requires an explicit estimator.tau")
                tau = default_tau(omega, config.beta_min)
            specs.append(EstimatorSpec(kind, sbar=config.sbar, tau=tau))
    return tuple(specs)


def trial_seed(master_seed: int, estimator_kind: str, n: int, trial: int) -> int:
    """The dataset seed for one sweep cell coordinate."""
    return mix64(master_seed, estimator_kind, n, trial)


def _run_block(
    config: SweepConfig, kind: str, n: int, trial_lo: int, trial_hi: int
) -> tuple[str, int, int, int, float, tuple[int, int, int]]:
    """Run a contiguous block of trials for one cell; returns keyed counts."""
    design = build_design(config)
    instance = build_instance(config, design)
    spec = next(s for s in build_estimator_specs(config, design) if s.kind == kind)
    diag = Diagnostics()
    successes = 0
    failures = 0
    runtime = 0.0
    for trial in range(trial_lo, trial_hi):
        data = sample_dataset(instance, n, trial_seed(config.master_seed, kind, n, trial))
        try:
            if config.timing:
                tick = time.perf_counter()
                found = run_estimator(spec, data, diag)
                runtime += time.perf_counter() - tick
            else:
                found = run_estimator(spec, data, diag)
        except (SubsetLabError, np.linalg.LinAlgError):
            failures += 1
            continue
        if found == instance.support:
            successes += 1
    return (kind, n, successes, failures, runtime, (diag.singular_supports, diag.omp_padded, diag.lasso_padded))


def run_phase_sweep(config: SweepConfig, threads: int = 1) -> SweepResult:
    """Estimate exact-recovery rates over the (estimator, n) grid.

    A failed trial (estimator raised) counts as non-recovery and is tallied
    separately; the sweep never aborts.  Output is independent of ``threads``.
    """
    design = build_design(config)
    build_instance(config, design)  # validate early
    specs = build_estimator_specs(config, design)
    blocks: list[tuple[str, int, int, int]] = []
    per_worker = max(1, math.ceil(config.trials / max(1, threads)))
    for spec in specs:
        for n in config.n_grid:
            lo = 0
            while lo < config.trials:
                hi = min(config.trials, lo + per_worker)
                blocks.append((spec.kind, n, lo, hi))
                lo = hi
    outcomes = []
    if threads <= 1:
        for kind, n, lo, hi in blocks:
            outcomes.append(_run_block(config, kind, n, lo, hi))
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_block, config, kind, n, lo, hi) for kind, n, lo, hi in blocks]
            outcomes = [f.result() for f in futures]
    successes: dict[tuple[str, int], int] = {}
    failures: dict[tuple[str, int], int] = {}
    runtimes: dict[tuple[str, int], float] = {}
    diag_totals = [0, 0, 0]
    for kind, n, succ, fail, runtime, diag in outcomes:
        key = (kind, n)
        successes[key] = successes.get(key, 0) + succ
        failures[key] = failures.get(key, 0) + fail
        runtimes[key] = runtimes.get(key, 0.0) + runtime
        for i in range(3):
            diag_totals[i] += diag[i]
    rows = []
    for spec in specs:
        for n in config.n_grid:
            key = (spec.kind, n)
            succ = successes[key]
            lo, hi = wilson_interval(succ, config.trials)
            mean_ms = (runtimes[key] / config.trials * 1000.0) if config.timing else 0.0
            rows.append(
                SweepRow(
                    estimator=spec.kind,
                    n=n,
                    successes=succ,
                    trials=config.trials,
                    rate=succ / config.trials,
                    wilson_lo=lo,
                    wilson_hi=hi,
                    mean_runtime_ms=mean_ms,
                )
            )
    fail_rows = tuple(
        (kind, n, count) for (kind, n), count in sorted(failures.items()) if count
    )
    diagnostics = tuple(
        pair
        for pair in (
            ("singular_supports", diag_totals[0]),
            ("omp_padded", diag_totals[1]),
            ("lasso_padded", diag_totals[2]),
        )
        if pair[1]
    )
    return SweepResult(
        rows=tuple(rows),
        config_hash=config_hash(config),
        master_seed=config.master_seed,
        failures=fail_rows,
        diagnostics=diagnostics,
    )


def interpolate_n50(result: SweepResult, estimator: str) -> float:
    """Linear interpolation of the first upward 0.5 crossing on the n grid."""
    rows = sorted((r for r in result.rows if r.estimator == estimator), key=lambda r: r.n)
    if not rows:
        raise NoCrossingError(f"no rows for estimator {estimator!r}")
    if rows[0].rate >= 0.5:
        raise NoCrossingError(
            f"rate already {rows[0].rate:.3f} >= 0.5 at the smallest grid point n={rows[0].n}"
        )
    for a, b in zip(rows, rows[1:]):
        if a.rate < 0.5 <= b.rate:
            return a.n + (0.5 - a.rate) * (b.n - a.n) / (b.rate - a.rate)
    raise NoCrossingError(f"rate never reaches 0.5 for estimator {estimator!r} on this grid")


def empirical_n_star(result: SweepResult, estimator: str, delta_conf: float) -> int:
    """Smallest grid n whose success rate reaches 1 - delta_conf."""
    rows = sorted((r for r in result.rows if r.estimator == estimator), key=lambda r: r.n)
    for row in rows:
        if row.rate >= 1.0 - delta_conf:
            return row.n
    best = max((r.rate for r in rows), default=0.0)
    raise NoCrossingError(
        f"rate never reaches {1.0 - delta_conf:.3f} for {estimator!r} (max observed {best:.3f})"
    )


def verify_bounds(config: SweepConfig, threads: int = 1) -> tuple[BoundsRow, ...]:
    """Compare empirical thresholds against the calculator values.

    Runs an exact-size subset-search sweep per equicorrelation level (the
    ``gap.omegas`` list, or the configured design's level), finds the smallest
    grid n reaching rate 1 - delta, and reports it next to the sufficient-n
    formula (constant 1) and both necessary-n formulas.  The ratio of the
    empirical threshold to the sufficient-n formula is the calibrated
    constant.
    """
    if config.design_kind not in ("identity", "equicorr"):
        raise ConfigError("verify-bounds needs an identity or equicorrelation design")
    omegas = config.gap_omegas or (
        (1.0,) if config.design_kind == "identity" else (config.design_omega,)
    )
    s = len(config.support) if config.support is not None else config.s
    rows = []
    for omega in omegas:
        sub = replace(
            config,
            design_kind="equicorr" if omega < 1.0 else "identity",
            design_omega=omega if omega < 1.0 else None,
            estimators=("bss",),
            gap_omegas=(),
        )
        result = run_phase_sweep(sub, threads=threads)
        n_star = empirical_n_star(result, "bss", config.delta_conf)
        params = ClassParams(
            d=sub.design_d,
            beta_min=config.beta_min,
            omega=omega,
            sigma2=config.sigma2,
            known_sparsity=True,
            s=s,
        )
        upper = bound_upper_known(params, config.delta_conf, constant=1.0)
        lower_eq = (
            bound_lower_equicorr(params, config.delta_conf).n_value if omega < 1.0 else None
        )
        lower_dim = bound_lower_dimension(
            sub.design_d, s, config.beta_min**2 / config.sigma2, config.delta_conf
        )
        rows.append(
            BoundsRow(
                omega=omega,
                empirical_n_star=n_star,
                upper_known=upper.n_value,
                lower_equicorr=lower_eq,
                lower_dimension=lower_dim.n_value,
                calibrated_constant=n_star / upper.n_value,
            )
        )
    return tuple(rows)


def run_gap_experiment(config: SweepConfig, threads: int = 1) -> tuple[GapSweep, ...]:
    """One sweep per equicorrelation level with the configured estimator set.

    Each level runs under its own derived master seed so the levels use
    independent streams.
    """
    if not config.gap_omegas:
        raise ConfigError("gap experiments require gap.omegas")
    if config.design_kind not in ("identity", "equicorr"):
        raise ConfigError("gap experiments need an identity or equicorrelation design")
    sweeps = []
    for omega in config.gap_omegas:
        sub = replace(
            config,
            design_kind="equicorr" if omega < 1.0 else "identity",
            design_omega=omega if omega < 1.0 else None,
            gap_omegas=(),
            master_seed=mix64(config.master_seed, "gap-omega", repr(float(omega))),
        )
        sweeps.append(GapSweep(omega=omega, result=run_phase_sweep(sub, threads=threads)))
    return tuple(sweeps)


def emit_csv(result: SweepResult, path: str) -> None:
    """Write the fixed-schema CSV; floats use shortest round-trip form."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in result.rows:
            fh.write(
                f"{r.estimator},{r.n},{r.successes},{r.trials},"
                f"{r.rate!r},{r.wilson_lo!r},{r.wilson_hi!r},{r.mean_runtime_ms!r}\n"
            )


def read_sweep_csv(path: str) -> tuple[SweepRow, ...]:
    """Parse a CSV written by :func:`emit_csv` back into rows."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: missing or wrong CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 8:
            raise ConfigError(f"{path}: malformed row {line!r}")
        rows.append(
            SweepRow(
                estimator=parts[0],
                n=int(parts[1]),
                successes=int(parts[2]),
                trials=int(parts[3]),
                rate=float(parts[4]),
                wilson_lo=float(parts[5]),
                wilson_hi=float(parts[6]),
                mean_runtime_ms=float(parts[7]),
            )
        )
    return tuple(rows)


_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot exact-recovery rates against sample size from a sweep CSV."""

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), {csv_rel!r})
OUT_PATH = os.path.splitext(os.path.abspath(__file__))[0] + ".png"

series = defaultdict(list)
with open(CSV_PATH, newline="") as fh:
    for row in csv.DictReader(fh):
        series[row["estimator"]].append(
            (int(row["n"]), float(row["rate"]), float(row["wilson_lo"]), float(row["wilson_hi"]))
        )

fig, ax = plt.subplots(figsize=(7, 4.5))
for name in sorted(series):
    pts = sorted(series[name])
    ns = [p[0] for p in pts]
    ax.plot(ns, [p[1] for p in pts], marker="o", label=name)
    ax.fill_between(ns, [p[2] for p in pts], [p[3] for p in pts], alpha=0.2)
ax.set_xlabel("sample size n")
ax.set_ylabel("exact recovery rate")
ax.set_ylim(-0.02, 1.02)
ax.legend()
ax.grid(True, alpha=0.3)
fig.tight_layout()
fig.savefig(OUT_PATH, dpi=150)
print(f"wrote {{OUT_PATH}}")
'''


def emit_plot_script(csv_path: str, out_path: str) -> None:
    """Write a self-contained plotting script referencing the CSV relatively."""
    rel = os.path.relpath(os.path.abspath(csv_path), os.path.dirname(os.path.abspath(out_path)))
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(_PLOT_TEMPLATE.format(csv_rel=rel))
