import numpy as np
import pytest

from subsetlab.errors import ConfigError, NoCrossingError
from subsetlab.harness import (
    CSV_HEADER,
    SweepResult,
    SweepRow,
    build_design,
    build_estimator_specs,
    build_instance,
    canonical_text,
    config_hash,
    emit_csv,
    emit_plot_script,
    empirical_n_star,
    interpolate_n50,
    parse_config_text,
    read_sweep_csv,
    run_gap_experiment,
    run_phase_sweep,
    trial_seed,
    verify_bounds,
    wilson_interval,
)
from subsetlab.rng import mix64
from subsetlab.subsets import SupportSet

TINY_CONFIG = """
design.kind = equicorr
design.d = 8
design.omega = 0.5
instance.s = 2
sweep.ngrid = 6,12,30
sweep.trials = 25
sweep.seed = 77
sweep.estimators = bss,marginal
"""


# ------------------------------------------------------------------- config


def test_parse_and_canonical_roundtrip():
    cfg = parse_config_text(TINY_CONFIG)
    assert cfg.design_kind == "equicorr"
    assert cfg.n_grid == (6, 12, 30)
    assert cfg.estimators == ("bss", "marginal")
    assert cfg.delta_conf == 0.05  # default
    again = parse_config_text(canonical_text(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_parse_rejects_unknown_and_duplicate_keys():
    with pytest.raises(ConfigError):
        parse_config_text(TINY_CONFIG + "\nbogus.key = 1\n")
    with pytest.raises(ConfigError):
        parse_config_text(TINY_CONFIG + "\nsweep.trials = 10\n")
    with pytest.raises(ConfigError):
        parse_config_text(TINY_CONFIG.replace("6,12,30", "6,6,30"))
    with pytest.raises(ConfigError):
        parse_config_text(TINY_CONFIG.replace("bss,marginal", "bss,magic"))
    with pytest.raises(ConfigError):
        parse_config_text("design.kind = equicorr\n")  # missing requireds


def test_explicit_support_is_one_based():
    cfg = parse_config_text(TINY_CONFIG.replace("instance.s = 2", "instance.support = 2,5"))
    design = build_design(cfg)
    inst = build_instance(cfg, design)
    assert inst.support == SupportSet.of([1, 4])


def test_alternating_signs():
    cfg = parse_config_text(TINY_CONFIG + "instance.signs = alternating\n")
    inst = build_instance(cfg, build_design(cfg))
    assert np.array_equal(inst.beta[:2], [1.0, -1.0])


def test_bssu_spec_gets_class_penalty_by_default():
    cfg = parse_config_text(TINY_CONFIG.replace("bss,marginal", "bssu") + "estimator.sbar = 3\n")
    specs = build_estimator_specs(cfg, build_design(cfg))
    assert specs[0].tau == pytest.approx(0.25 * 0.5 * 1.0**2)


# -------------------------------------------------------------------- wilson


def test_wilson_interval_contains_rate():
    for k, n in [(0, 10), (10, 10), (3, 7), (100, 200)]:
        lo, hi = wilson_interval(k, n)
        assert 0.0 <= lo <= k / n <= hi <= 1.0
    # hand check at k=5, n=10 (z = 1.959963984540054): the interval is
    # symmetric about 1/2 with half-width z*sqrt(p(1-p)/n + z^2/4n^2)/(1+z^2/n)
    import math

    z = 1.959963984540054
    half = z * math.sqrt(0.025 + z * z / 400.0) / (1.0 + z * z / 10.0)
    lo, hi = wilson_interval(5, 10)
    assert lo == pytest.approx(0.5 - half, abs=1e-15)
    assert hi == pytest.approx(0.5 + half, abs=1e-15)


# -------------------------------------------------------------------- sweeps


def test_noiseless_single_trial_recovers_everywhere():
    cfg = parse_config_text(
        """
design.kind = identity
design.d = 6
instance.s = 2
instance.sigma2 = 1e-18
sweep.ngrid = 3,8,20
sweep.trials = 1
sweep.seed = 5
sweep.estimators = bss
"""
    )
    result = run_phase_sweep(cfg)
    assert all(row.rate == 1.0 for row in result.rows)


def test_sweep_bytes_identical_across_runs_and_workers(tmp_path):
    cfg = parse_config_text(TINY_CONFIG)
    paths = [str(tmp_path / f"{name}.csv") for name in "abc"]
    emit_csv(run_phase_sweep(cfg, threads=1), paths[0])
    emit_csv(run_phase_sweep(cfg, threads=1), paths[1])
    emit_csv(run_phase_sweep(cfg, threads=2), paths[2])
    blobs = [open(p, "rb").read() for p in paths]
    assert blobs[0] == blobs[1] == blobs[2]


def test_sweep_rows_are_wilson_consistent():
    cfg = parse_config_text(TINY_CONFIG)
    result = run_phase_sweep(cfg)
    for row in result.rows:
        assert 0 <= row.successes <= row.trials == 25
        assert row.wilson_lo <= row.rate <= row.wilson_hi
        assert row.mean_runtime_ms == 0.0  # timing off by default


def test_trial_seed_is_pure_mix():
    cfg = parse_config_text(TINY_CONFIG)
    assert trial_seed(cfg.master_seed, "bss", 12, 3) == mix64(77, "bss", 12, 3)


def test_estimator_failure_counts_as_non_recovery():
    # bssu requires sbar < n; at n = 3 every trial fails and is tallied
    cfg = parse_config_text(
        """
design.kind = identity
design.d = 8
instance.s = 2
sweep.ngrid = 3,30
sweep.trials = 5
sweep.seed = 1
sweep.estimators = bssu
estimator.sbar = 3
"""
    )
    result = run_phase_sweep(cfg)
    first = next(r for r in result.rows if r.n == 3)
    assert first.successes == 0
    assert ("bssu", 3, 5) in result.failures


def test_timing_mode_records_runtimes():
    cfg = parse_config_text(TINY_CONFIG + "sweep.timing = on\n")
    result = run_phase_sweep(cfg)
    assert any(row.mean_runtime_ms > 0 for row in result.rows)


# ------------------------------------------------------------- interpolation


def _result_with_rates(rates, estimator="bss"):
    rows = tuple(
        SweepRow(estimator, n, int(r * 100), 100, r, *wilson_interval(int(r * 100), 100), 0.0)
        for n, r in rates
    )
    return SweepResult(rows=rows, config_hash="x", master_seed=0)


def test_interpolate_n50_linear_midpoint():
    res = _result_with_rates([(10, 0.2), (20, 0.8)])
    assert interpolate_n50(res, "bss") == pytest.approx(15.0)


def test_interpolate_n50_three_point_hand_check():
    res = _result_with_rates([(10, 0.1), (20, 0.4), (40, 0.9)])
    # crossing between 20 and 40: 20 + (0.5-0.4)/(0.9-0.4) * 20 = 24
    assert interpolate_n50(res, "bss") == pytest.approx(24.0)


def test_interpolate_n50_no_crossing():
    with pytest.raises(NoCrossingError):
        interpolate_n50(_result_with_rates([(10, 0.1), (20, 0.3)]), "bss")
    with pytest.raises(NoCrossingError):
        interpolate_n50(_result_with_rates([(10, 0.7), (20, 0.9)]), "bss")


def test_empirical_n_star():
    res = _result_with_rates([(10, 0.5), (20, 0.96), (40, 1.0)])
    assert empirical_n_star(res, "bss", 0.05) == 20
    with pytest.raises(NoCrossingError):
        empirical_n_star(_result_with_rates([(10, 0.5)]), "bss", 0.05)


# ----------------------------------------------------------------------- csv


def test_emit_csv_schema_and_roundtrip(tmp_path):
    cfg = parse_config_text(TINY_CONFIG)
    result = run_phase_sweep(cfg)
    path = str(tmp_path / "out.csv")
    emit_csv(result, path)
    with open(path) as fh:
        assert fh.readline().rstrip("\n") == CSV_HEADER
    assert read_sweep_csv(path) == result.rows


def test_emit_csv_empty_result_is_header_only(tmp_path):
    path = str(tmp_path / "empty.csv")
    emit_csv(SweepResult(rows=(), config_hash="x", master_seed=0), path)
    assert open(path).read() == CSV_HEADER + "\n"
    assert read_sweep_csv(path) == ()


def test_plot_script_is_syntactic_and_relative(tmp_path):
    cfg = parse_config_text(TINY_CONFIG)
    result = run_phase_sweep(cfg)
    csv_path = str(tmp_path / "r.csv")
    out_path = str(tmp_path / "plots" / "r.py")
    (tmp_path / "plots").mkdir()
    emit_csv(result, csv_path)
    emit_plot_script(csv_path, out_path)
    text = open(out_path).read()
    compile(text, out_path, "exec")  # syntax check without importing matplotlib
    assert "../r.csv" in text


# --------------------------------------------------------- composed commands


def test_verify_bounds_rows_are_coherent():
    cfg = parse_config_text(
        """
design.kind = equicorr
design.d = 16
design.omega = 0.5
instance.s = 2
sweep.ngrid = 5,10,20,40,80
sweep.trials = 50
sweep.seed = 21
sweep.estimators = bss
"""
    )
    rows = verify_bounds(cfg)
    assert len(rows) == 1
    row = rows[0]
    assert row.omega == 0.5
    assert row.lower_equicorr is not None
    assert row.lower_equicorr <= row.empirical_n_star
    assert row.lower_dimension <= row.empirical_n_star
    assert row.calibrated_constant == pytest.approx(row.empirical_n_star / row.upper_known)
    assert row.calibrated_constant > 0


def test_verify_bounds_constant_stable_across_seeds():
    text = """
design.kind = equicorr
design.d = 16
design.omega = 0.5
instance.s = 2
sweep.ngrid = 5,10,20,40,80
sweep.trials = 60
sweep.seed = {seed}
sweep.estimators = bss
"""
    c1 = verify_bounds(parse_config_text(text.format(seed=101)))[0].calibrated_constant
    c2 = verify_bounds(parse_config_text(text.format(seed=202)))[0].calibrated_constant
    assert c1 > 0 and c2 > 0
    assert 0.5 <= c1 / c2 <= 1.5


def test_empty_grid_is_a_config_error():
    with pytest.raises(ConfigError):
        parse_config_text(TINY_CONFIG.replace("sweep.ngrid = 6,12,30", "sweep.ngrid ="))


def test_file_design_requires_explicit_tau(tmp_path):
    from subsetlab.design import save_matrix

    path = str(tmp_path / "cov.txt")
    save_matrix(np.eye(8), path)
    cfg = parse_config_text(
        f"""
design.kind = file
design.path = {path}
instance.s = 2
sweep.ngrid = 10,20
sweep.trials = 5
sweep.seed = 1
sweep.estimators = bssu
estimator.sbar = 3
"""
    )
    with pytest.raises(ConfigError):
        build_estimator_specs(cfg, build_design(cfg))


def test_gap_experiment_runs_one_sweep_per_omega():
    cfg = parse_config_text(
        """
design.kind = equicorr
design.d = 8
design.omega = 0.5
instance.s = 2
sweep.ngrid = 5,15,40
sweep.trials = 20
sweep.seed = 31
sweep.estimators = bss,marginal
gap.omegas = 0.5,1.0
"""
    )
    sweeps = run_gap_experiment(cfg)
    assert [s.omega for s in sweeps] == [0.5, 1.0]
    for sweep in sweeps:
        assert len(sweep.result.rows) == 6
    # distinct master seeds per level
    assert sweeps[0].result.master_seed != sweeps[1].result.master_seed
    with pytest.raises(ConfigError):
        run_gap_experiment(parse_config_text(TINY_CONFIG))
