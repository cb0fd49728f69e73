import itertools

import numpy as np
import pytest

from subsetlab.design import make_equicorrelation, make_identity
from subsetlab.errors import InvalidParameterError, SingularSupportError
from subsetlab.estimators import (
    Diagnostics,
    EstimatorSpec,
    aic,
    bic,
    bss,
    bssu,
    build_engine,
    default_tau,
    lasso_cd,
    lasso_select,
    lasso_support,
    marginal_screening,
    omp,
    rss,
    run_estimator,
    solve_coefficients,
)
from subsetlab.sampler import DataSet, make_beta, make_instance, sample_dataset
from subsetlab.subsets import SupportSet

# ------------------------------------------------------------------- oracles
# independent reference implementations working on explicit n-by-n projections


def projection_rss(x, y, support):
    if len(support) == 0:
        return float(y @ y)
    xs = x[:, list(support)]
    proj = xs @ np.linalg.inv(xs.T @ xs) @ xs.T
    r = y - proj @ y
    return float(r @ r)


def bss_oracle(x, y, s):
    best = None
    for cand in itertools.combinations(range(x.shape[1]), s):
        value = projection_rss(x, y, cand)
        if best is None or value < best[0] or (value == best[0] and cand < best[1]):
            best = (value, cand)
    return best[1]


def bssu_oracle(x, y, sbar, tau):
    n = x.shape[0]
    best = None
    for k in range(sbar + 1):
        for cand in itertools.combinations(range(x.shape[1]), k):
            value = projection_rss(x, y, cand) / (n - k) + k * tau
            key = (k, cand)
            if best is None or value < best[0] or (value == best[0] and key < best[1]):
                best = (value, key)
    return best[1][1]


def omp_oracle(x, y, s):
    selected = []
    residual = y.copy()
    for _ in range(s):
        scores = np.abs(x.T @ residual)
        scores[selected] = -np.inf
        j = int(np.argmax(scores))
        selected.append(j)
        xs = x[:, selected]
        proj = xs @ np.linalg.inv(xs.T @ xs) @ xs.T
        residual = y - proj @ y
    return tuple(sorted(selected))


def random_instance(rng, d, s, sigma2=1.0, correlated=False):
    design = make_equicorrelation(d, 0.5) if correlated else make_identity(d)
    support = sorted(rng.choice(d, size=s, replace=False))
    values = rng.uniform(0.5, 2.0, size=s) * rng.choice([-1.0, 1.0], size=s)
    return make_instance(make_beta(d, support, values), sigma2, design)


# ---------------------------------------------------------------- rss engine


def test_rss_empty_support_is_total_energy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((15, 4))
    y = rng.standard_normal(15)
    eng = build_engine(DataSet(n=15, x=x, y=y, seed=0))
    assert rss(eng, SupportSet.of([])) == pytest.approx(float(y @ y), rel=1e-12)


def test_rss_zero_response():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((10, 3))
    eng = build_engine(DataSet(n=10, x=x, y=np.zeros(10), seed=0))
    assert eng.yty == 0.0
    for k in range(3):
        for cand in itertools.combinations(range(3), k):
            assert rss(eng, SupportSet.of(cand)) == 0.0


def test_rss_annihilates_spanned_response():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((20, 5))
    y = x[:, [1, 3]] @ np.array([2.0, -1.0])
    eng = build_engine(DataSet(n=20, x=x, y=y, seed=0))
    assert rss(eng, SupportSet.of([1, 3])) <= 1e-8 * float(y @ y)


def test_rss_matches_explicit_projection():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((25, 5))
    y = rng.standard_normal(25)
    eng = build_engine(DataSet(n=25, x=x, y=y, seed=0))
    for k in (1, 2):
        for cand in itertools.combinations(range(5), k):
            assert rss(eng, SupportSet.of(cand)) == pytest.approx(
                projection_rss(x, y, cand), rel=1e-8
            )


def test_rss_monotone_under_inclusion():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((30, 6))
    y = rng.standard_normal(30)
    eng = build_engine(DataSet(n=30, x=x, y=y, seed=0))
    for _ in range(20):
        small = sorted(rng.choice(6, size=2, replace=False))
        extra = [j for j in range(6) if j not in small][:2]
        big = sorted(small + extra)
        assert rss(eng, SupportSet.of(big)) <= rss(eng, SupportSet.of(small)) * (1 + 1e-9) + 1e-12


def test_rss_singular_support_raises():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((10, 3))
    x[:, 2] = x[:, 0]
    eng = build_engine(DataSet(n=10, x=x, y=rng.standard_normal(10), seed=0))
    with pytest.raises(SingularSupportError):
        rss(eng, SupportSet.of([0, 2]))
    eng2 = build_engine(DataSet(n=1, x=x[:1], y=rng.standard_normal(1), seed=0))
    with pytest.raises(InvalidParameterError):
        rss(eng2, SupportSet.of([0, 1]))  # |S| > n


def test_one_sample_engine_is_legal():
    x = np.array([[1.0, 2.0]])
    eng = build_engine(DataSet(n=1, x=x, y=np.array([3.0]), seed=0))
    assert eng.gram.shape == (2, 2)
    assert rss(eng, SupportSet.of([0])) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------- bss


def test_bss_noiseless_recovery():
    inst = make_instance(make_beta(4, [0, 2], [1.0, 1.0]), 1e-18, make_identity(4))
    data = sample_dataset(inst, 50, seed=1)
    assert bss(build_engine(data), 2) == SupportSet.of([0, 2])


def test_bss_matches_projection_oracle():
    rng = np.random.default_rng(6)
    for trial in range(15):
        d = int(rng.integers(4, 13))
        s = int(rng.integers(1, 4))
        n = int(rng.integers(d + 2, d + 20))
        inst = random_instance(rng, d, s, correlated=bool(trial % 2))
        data = sample_dataset(inst, n, seed=trial)
        got = bss(build_engine(data), s)
        assert got.indices == bss_oracle(data.x, data.y, s)


def test_bss_tie_break_on_zero_response():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((12, 5))
    eng = build_engine(DataSet(n=12, x=x, y=np.zeros(12), seed=0))
    assert bss(eng, 3) == SupportSet.of([0, 1, 2])


def test_bss_scale_equivariance():
    rng = np.random.default_rng(8)
    inst = random_instance(rng, 6, 2)
    data = sample_dataset(inst, 40, seed=3)
    eng1 = build_engine(data)
    eng2 = build_engine(DataSet(n=data.n, x=data.x, y=2.0 * data.y, seed=0))
    assert bss(eng1, 2) == bss(eng2, 2)


def test_bss_singular_columns_counted_not_fatal():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((20, 4))
    x[:, 1] = x[:, 0]  # any support containing both is singular
    y = x[:, 3] * 2.0 + rng.standard_normal(20) * 0.01
    diag = Diagnostics()
    got = bss(build_engine(DataSet(n=20, x=x, y=y, seed=0)), 2, diagnostics=diag)
    assert 3 in got
    assert diag.singular_supports == 1  # exactly the {0,1} pair


def test_bss_parameter_validation():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((10, 4))
    eng = build_engine(DataSet(n=10, x=x, y=rng.standard_normal(10), seed=0))
    for s in (0, 5, 11):
        with pytest.raises(InvalidParameterError):
            bss(eng, s)


# --------------------------------------------------------------------- bssu


def test_bssu_zero_response_returns_empty():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((12, 5))
    eng = build_engine(DataSet(n=12, x=x, y=np.zeros(12), seed=0))
    assert bssu(eng, 3, 0.5) == SupportSet.of([])


def test_bssu_noiseless_with_class_penalty():
    inst = make_instance(make_beta(4, [0, 2], [1.0, 1.0]), 1e-18, make_identity(4))
    data = sample_dataset(inst, 60, seed=2)
    tau = default_tau(1.0, 1.0)
    assert bssu(build_engine(data), 3, tau) == SupportSet.of([0, 2])


def test_bssu_matches_penalized_oracle():
    rng = np.random.default_rng(12)
    for trial in range(12):
        d = int(rng.integers(4, 11))
        sbar = int(rng.integers(1, 4))
        s = int(rng.integers(1, sbar + 1))
        n = int(rng.integers(d + 3, d + 25))
        tau = float(rng.uniform(0.02, 0.5))
        inst = random_instance(rng, d, s, correlated=bool(trial % 2))
        data = sample_dataset(inst, n, seed=100 + trial)
        got = bssu(build_engine(data), sbar, tau)
        assert got.indices == bssu_oracle(data.x, data.y, sbar, tau)


def test_bssu_reduces_to_bss_on_fixed_size():
    rng = np.random.default_rng(13)
    inst = random_instance(rng, 7, 2)
    data = sample_dataset(inst, 30, seed=5)
    eng = build_engine(data)
    assert bssu(eng, 2, 0.0, min_size=2) == bss(eng, 2)


def test_bssu_scale_equivariance_with_rescaled_penalty():
    rng = np.random.default_rng(14)
    inst = random_instance(rng, 6, 2)
    data = sample_dataset(inst, 35, seed=6)
    eng1 = build_engine(data)
    eng2 = build_engine(DataSet(n=data.n, x=data.x, y=2.0 * data.y, seed=0))
    assert bssu(eng1, 3, 0.1) == bssu(eng2, 3, 0.4)


def test_bssu_rejects_sbar_at_or_above_n():
    x = np.random.default_rng(15).standard_normal((5, 8))
    eng = build_engine(DataSet(n=5, x=x, y=np.ones(5), seed=0))
    with pytest.raises(InvalidParameterError):
        bssu(eng, 5, 0.1)
    with pytest.raises(InvalidParameterError):
        bssu(eng, 3, -0.5)


# ------------------------------------------------------------------ aic, bic


def test_information_criteria_zero_response():
    rng = np.random.default_rng(16)
    x = rng.standard_normal((12, 4))
    eng = build_engine(DataSet(n=12, x=x, y=np.zeros(12), seed=0))
    assert aic(eng, 3) == SupportSet.of([])
    assert bic(eng, 3) == SupportSet.of([])


def test_information_criteria_noiseless_strong_signal():
    inst = make_instance(make_beta(5, [1, 4], [3.0, -3.0]), 1e-18, make_identity(5))
    data = sample_dataset(inst, 40, seed=7)
    eng = build_engine(data)
    assert aic(eng, 3) == inst.support
    assert bic(eng, 3) == inst.support


def test_bic_never_larger_than_aic():
    # a heavier per-variable penalty cannot select a larger support
    # (for n >= 8, log n > 2)
    rng = np.random.default_rng(17)
    for trial in range(20):
        d = int(rng.integers(4, 9))
        inst = random_instance(rng, d, int(rng.integers(1, 3)))
        data = sample_dataset(inst, 8, seed=200 + trial)
        eng = build_engine(data)
        a = aic(eng, 3)
        b = bic(eng, 3)
        assert len(b) <= len(a)


def test_bic_nested_in_aic_on_frozen_seeds():
    # set inclusion is not a theorem; these seeds exhibit the typical nesting
    rng = np.random.default_rng(18)
    for trial in range(20):
        d = int(rng.integers(4, 9))
        inst = random_instance(rng, d, int(rng.integers(1, 3)))
        data = sample_dataset(inst, 8, seed=300 + trial)
        eng = build_engine(data)
        assert bic(eng, 3).issubset(aic(eng, 3))


def test_information_criterion_objective_normalization():
    # the displayed objective divides by n (not n - |S|): check the argmin on
    # a handcrafted case where the two normalizations disagree
    x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]])
    y = np.array([1.1, 0.9, 2.0, 0.2])
    eng = build_engine(DataSet(n=4, x=x, y=y, seed=0))
    n = 4
    best = None
    for k in range(3):
        for cand in itertools.combinations(range(2), k):
            value = projection_rss(x, y, cand) / n + k * 2.0 / n
            key = (k, cand)
            if best is None or value < best[0] or (value == best[0] and key < best[1]):
                best = (value, key)
    assert aic(eng, 2).indices == best[1][1]


# -------------------------------------------------------------------- lasso


def test_lasso_zero_above_lambda_max():
    rng = np.random.default_rng(19)
    x = rng.standard_normal((30, 5))
    y = rng.standard_normal(30)
    data = DataSet(n=30, x=x, y=y, seed=0)
    lam_max = float(np.max(np.abs(x.T @ y))) / 30
    fit = lasso_cd(data, lam_max * 1.0001)
    assert np.array_equal(fit.coef, np.zeros(5))
    assert fit.converged


def test_lasso_unpenalized_matches_least_squares():
    rng = np.random.default_rng(20)
    x = rng.standard_normal((50, 4))
    y = x @ np.array([1.0, -2.0, 0.5, 0.0]) + 0.1 * rng.standard_normal(50)
    data = DataSet(n=50, x=x, y=y, seed=0)
    fit = lasso_cd(data, 0.0)
    ls = np.linalg.lstsq(x, y, rcond=None)[0]
    assert np.max(np.abs(fit.coef - ls)) <= 1e-6


def test_lasso_scalar_closed_form():
    rng = np.random.default_rng(21)
    x = rng.standard_normal((40, 1))
    y = 2.0 * x[:, 0] + 0.1 * rng.standard_normal(40)
    data = DataSet(n=40, x=x, y=y, seed=0)
    for lam in (0.05, 0.3, 1.0):
        fit = lasso_cd(data, lam)
        rho = float(x[:, 0] @ y) / 40
        denom = float(x[:, 0] @ x[:, 0]) / 40
        closed = np.sign(rho) * max(abs(rho) - lam, 0.0) / denom
        assert fit.coef[0] == pytest.approx(closed, abs=1e-10)


def test_lasso_support_top_s_matches_sort_oracle():
    rng = np.random.default_rng(22)
    for _ in range(20):
        coef = rng.standard_normal(8)
        s = int(rng.integers(1, 6))
        got = lasso_support(coef, s)
        order = sorted(range(8), key=lambda j: (-abs(coef[j]), j))
        assert got == SupportSet.of(order[:s])


def test_lasso_support_exact_sparsity_and_padding():
    coef = np.array([0.0, 2.0, 0.0, -1.0, 0.0])
    assert lasso_support(coef, 2) == SupportSet.of([1, 3])
    # shortfall: pads from the supplied screening order, flagged via selection
    assert lasso_support(coef, 3, screening_order=[4, 1, 3, 0, 2]) == SupportSet.of([1, 3, 4])
    assert lasso_support(np.zeros(5), 2, screening_order=[3, 0, 1, 2, 4]) == SupportSet.of([0, 3])


def test_lasso_select_zero_response_is_padded_and_flagged():
    rng = np.random.default_rng(23)
    x = rng.standard_normal((20, 4))
    data = DataSet(n=20, x=x, y=np.zeros(20), seed=0)
    diag = Diagnostics()
    sel = lasso_select(data, 2, diagnostics=diag)
    assert sel.padded and diag.lasso_padded == 1
    assert len(sel.support) == 2


def test_lasso_select_recovers_clean_signal():
    inst = make_instance(make_beta(6, [1, 4], [2.0, -2.0]), 1e-6, make_identity(6))
    data = sample_dataset(inst, 80, seed=9)
    sel = lasso_select(data, 2)
    assert sel.support == inst.support
    assert not sel.padded


# ---------------------------------------------------------------------- omp


def test_omp_orthogonal_noiseless():
    inst = make_instance(make_beta(6, [0, 3], [1.0, -1.0]), 1e-18, make_identity(6))
    data = sample_dataset(inst, 50, seed=10)
    assert omp(data, 2) == inst.support


def test_omp_first_step_is_marginal_screening():
    rng = np.random.default_rng(24)
    inst = random_instance(rng, 7, 2, correlated=True)
    data = sample_dataset(inst, 40, seed=11)
    assert omp(data, 1) == marginal_screening(data, 1)


def test_omp_matches_projection_oracle():
    rng = np.random.default_rng(25)
    for trial in range(10):
        d = int(rng.integers(4, 10))
        s = int(rng.integers(1, 4))
        inst = random_instance(rng, d, s, correlated=bool(trial % 2))
        data = sample_dataset(inst, 30 + d, seed=400 + trial)
        assert omp(data, s).indices == omp_oracle(data.x, data.y, s)


def test_omp_pads_after_singular_refit():
    x = np.zeros((10, 3))
    x[:, 0] = np.arange(10.0)
    x[:, 1] = x[:, 0]  # duplicate of the strongest column
    x[:, 2] = np.ones(10)
    # response = strongest column plus a component orthogonal to every column,
    # so after the first refit all scores tie at zero and the duplicate (the
    # smaller index) is picked, forcing a singular second refit
    u = np.zeros(10)
    u[0] = 1.0
    basis = np.linalg.qr(x[:, [0, 2]])[0]
    v = u - basis @ (basis.T @ u)
    y = x[:, 0] + 0.3 * v
    diag = Diagnostics()
    got = omp(DataSet(n=10, x=x, y=y, seed=0), 2, diagnostics=diag)
    assert len(got) == 2
    assert diag.omp_padded == 1


# ------------------------------------------------------------------ marginal


def test_marginal_zero_response_tie_break():
    rng = np.random.default_rng(26)
    x = rng.standard_normal((15, 5))
    assert marginal_screening(DataSet(n=15, x=x, y=np.zeros(15), seed=0), 3) == SupportSet.of([0, 1, 2])


def test_marginal_orthogonal_noiseless():
    inst = make_instance(make_beta(5, [1, 3], [2.0, -2.0]), 1e-18, make_identity(5))
    data = sample_dataset(inst, 60, seed=12)
    assert marginal_screening(data, 2) == inst.support


def test_marginal_matches_sort_oracle():
    rng = np.random.default_rng(27)
    for _ in range(10):
        x = rng.standard_normal((20, 6))
        y = rng.standard_normal(20)
        data = DataSet(n=20, x=x, y=y, seed=0)
        scores = np.abs(x.T @ y)
        order = sorted(range(6), key=lambda j: (-scores[j], j))
        for s in (1, 3):
            assert marginal_screening(data, s) == SupportSet.of(order[:s])


# ------------------------------------------------------------ specs, dispatch


def test_estimator_spec_validation_and_labels():
    assert EstimatorSpec("bss", s=2).label == "bss(s=2)"
    assert EstimatorSpec("bssu", sbar=3, tau=0.125).label == "bssu(sbar=3,tau=0.125)"
    assert EstimatorSpec("bic", sbar=2).label == "bic(sbar=2)"
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("nope", s=1)
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("bss")
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("bssu", sbar=2)


def test_run_estimator_dispatch_consistency():
    rng = np.random.default_rng(28)
    inst = random_instance(rng, 6, 2)
    data = sample_dataset(inst, 40, seed=13)
    assert run_estimator(EstimatorSpec("bss", s=2), data) == bss(build_engine(data), 2)
    assert run_estimator(EstimatorSpec("marginal", s=2), data) == marginal_screening(data, 2)
    assert run_estimator(EstimatorSpec("omp", s=2), data) == omp(data, 2)
    assert run_estimator(EstimatorSpec("aic", sbar=3), data) == aic(build_engine(data), 3)


def test_solve_coefficients_matches_lstsq():
    rng = np.random.default_rng(29)
    x = rng.standard_normal((30, 5))
    y = rng.standard_normal(30)
    eng = build_engine(DataSet(n=30, x=x, y=y, seed=0))
    sup = SupportSet.of([0, 2, 4])
    theta = solve_coefficients(eng, sup)
    ls = np.linalg.lstsq(x[:, [0, 2, 4]], y, rcond=None)[0]
    assert np.max(np.abs(theta - ls)) <= 1e-9


def test_default_tau():
    assert default_tau(0.5, 1.0) == 0.125
    assert default_tau(0.5, 2.0) == 0.5
    with pytest.raises(InvalidParameterError):
        default_tau(0.0, 1.0)
