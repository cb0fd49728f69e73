import numpy as np
import pytest

from subsetlab.design import make_equicorrelation, make_identity
from subsetlab.errors import InvalidParameterError, MatrixFormatError
from subsetlab.rng import mix64
from subsetlab.sampler import (
    ClassParams,
    DataSet,
    ProblemInstance,
    check_membership,
    make_beta,
    make_instance,
    read_dataset_csv,
    sample_dataset,
    write_dataset_csv,
)
from subsetlab.subsets import SupportSet


def test_make_beta_places_values():
    beta = make_beta(4, [0, 2], [1.0, -1.0])
    assert np.array_equal(beta, [1.0, 0.0, -1.0, 0.0])
    assert np.array_equal(make_beta(4, [], []), np.zeros(4))
    with pytest.raises(InvalidParameterError):
        make_beta(4, [1], [0.0])
    with pytest.raises(InvalidParameterError):
        make_beta(4, [5], [1.0])


def test_instance_support_must_match_nonzeros():
    design = make_identity(4)
    inst = make_instance(np.array([1.0, 0.0, -2.0, 0.0]), 1.0, design)
    assert inst.support == SupportSet.of([0, 2])
    with pytest.raises(InvalidParameterError):
        ProblemInstance(np.array([1.0, 0.0]), SupportSet.of([0, 1]), 1.0, make_identity(2))
    with pytest.raises(InvalidParameterError):
        make_instance(np.zeros(3), 0.0, make_identity(3))


def test_check_membership_cases():
    design = make_identity(4)
    params = ClassParams(d=4, beta_min=1.0, omega=1.0, sigma2=1.0, s=2)
    good = make_instance(np.array([1.0, 0.0, 1.0, 0.0]), 1.0, design)
    rep = check_membership(good, params)
    assert rep.in_class and not rep.violations
    assert rep.omega_computed == pytest.approx(1.0, abs=1e-12)

    weak = make_instance(np.array([0.5, 0.0, 1.0, 0.0]), 1.0, design)
    rep = check_membership(weak, params)
    assert not rep.in_class
    assert any("beta_min" in v for v in rep.violations)

    corr = make_instance(
        np.array([1.0, 0.0, 1.0, 0.0]), 1.0, make_equicorrelation(4, 0.3)
    )
    rep = check_membership(corr, ClassParams(d=4, beta_min=1.0, omega=0.4, sigma2=1.0, s=2))
    assert not rep.in_class
    assert any("omega" in v for v in rep.violations)


def test_check_membership_unknown_and_indeterminate():
    design = make_identity(6)
    inst = make_instance(np.array([1.0, 1.0, 0, 0, 0, 0.0]), 1.0, design)
    params = ClassParams(d=6, beta_min=1.0, omega=1.0, sigma2=1.0, known_sparsity=False, sbar=3)
    assert check_membership(inst, params).in_class
    rep = check_membership(inst, params, pair_budget=1)
    assert rep.indeterminate and rep.in_class is None


def test_class_params_validation():
    with pytest.raises(InvalidParameterError):
        ClassParams(d=4, beta_min=1.0, omega=1.0, sigma2=1.0, s=3)  # s > d/2
    with pytest.raises(InvalidParameterError):
        ClassParams(d=4, beta_min=0.0, omega=1.0, sigma2=1.0, s=2)
    with pytest.raises(InvalidParameterError):
        ClassParams(d=8, beta_min=1.0, omega=1.0, sigma2=1.0, s=3, sbar=2)


def test_noiseless_limit():
    design = make_identity(4)
    inst = make_instance(make_beta(4, [0, 2], [1.0, -1.0]), 1e-18, design)
    data = sample_dataset(inst, 50, seed=1)
    assert float(np.max(np.abs(data.y - data.x @ inst.beta))) <= 1e-6


def test_determinism_bit_identical():
    inst = make_instance(make_beta(3, [1], [2.0]), 0.5, make_equicorrelation(3, 0.4))
    a = sample_dataset(inst, 20, seed=99)
    b = sample_dataset(inst, 20, seed=99)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    c = sample_dataset(inst, 20, seed=100)
    assert not np.array_equal(a.x, c.x)


def test_noise_substream_does_not_touch_design():
    inst = make_instance(make_beta(3, [0], [1.0]), 1.0, make_identity(3))
    a = sample_dataset(inst, 30, seed=5)
    b = sample_dataset(inst, 30, seed=5, noise_seed=123)
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.y, b.y)
    # and x is a pure function of the seed's design substream
    from subsetlab.rng import generator

    z = generator(mix64(5, "design")).standard_normal((30, 3))
    assert np.array_equal(a.x, z @ inst.design.cholesky_lower().T)


def test_column_variances_at_large_n():
    inst = make_instance(make_beta(3, [0], [1.0]), 1.0, make_identity(3))
    data = sample_dataset(inst, 100_000, seed=17)
    var = data.x.var(axis=0)
    assert np.all(np.abs(var - 1.0) <= 0.05)


def test_empirical_covariance_envelope():
    # max-entry deviation of X'X/n from the population matrix stays inside a
    # 5 / sqrt(n) envelope across 100 seeds (identity design, unit diagonals)
    inst = make_instance(make_beta(3, [0], [1.0]), 1.0, make_identity(3))
    n = 10_000
    bound = 5.0 / np.sqrt(n)
    for seed in range(100):
        data = sample_dataset(inst, n, seed=seed)
        dev = np.max(np.abs(data.x.T @ data.x / n - np.eye(3)))
        assert dev <= bound, f"seed {seed}: deviation {dev} > {bound}"


def test_response_variance_matches_population():
    design = make_equicorrelation(4, 0.5)
    inst = make_instance(make_beta(4, [0, 1], [1.0, -1.0]), 0.25, design)
    n = 200_000
    data = sample_dataset(inst, n, seed=8)
    target = float(inst.beta @ design.entries @ inst.beta) + inst.sigma2
    sample_var = float(np.var(data.y, ddof=1))
    stderr = target * np.sqrt(2.0 / (n - 1))
    assert abs(sample_var - target) <= 5 * stderr


def test_dataset_csv_roundtrip(tmp_path):
    inst = make_instance(make_beta(3, [0, 2], [1.25, -0.5]), 1.0, make_identity(3))
    data = sample_dataset(inst, 12, seed=4)
    path = str(tmp_path / "data.csv")
    write_dataset_csv(data, path)
    with open(path) as fh:
        assert fh.readline().strip() == "y,x1,x2,x3"
    back = read_dataset_csv(path, seed=4)
    assert np.array_equal(back.x, data.x)
    assert np.array_equal(back.y, data.y)
    assert back.n == data.n


def test_dataset_csv_rejects_garbage(tmp_path):
    path = str(tmp_path / "bad.csv")
    with open(path, "w") as fh:
        fh.write("y,x1\n1.0\n")
    with pytest.raises(MatrixFormatError):
        read_dataset_csv(path)


def test_dataset_validation():
    with pytest.raises(InvalidParameterError):
        DataSet(n=0, x=np.zeros((0, 2)), y=np.zeros(0), seed=0)
    with pytest.raises(InvalidParameterError):
        DataSet(n=2, x=np.zeros((2, 2)), y=np.zeros(3), seed=0)
