import math

import numpy as np
import pytest

from lwe_hardness.dataset import LabeledDataset
from lwe_hardness.distinguisher import (AdvantageConfig, distinguish, fit_poly_l2,
                                        hermite_features, multi_indices, summarize_advantage,
                                        wilson_interval, advantage_experiment)
from lwe_hardness.errors import ParameterError
from lwe_hardness.lwe import Hypothesis
from lwe_hardness.reduction import direct_hard_instance
from lwe_hardness.streams import RandomStream

SQRT_2PI = math.sqrt(2 * math.pi)


def gaussian_x(m, n, seed):
    return np.random.default_rng(seed).standard_normal((m, n)) / SQRT_2PI


def test_multi_indices_count():
    for n, d in ((3, 2), (6, 4), (1, 5)):
        idx = multi_indices(n, d)
        assert len(idx) == math.comb(n + d, d)
        assert len(set(idx)) == len(idx)
    assert multi_indices(2, 1) == [(0, 0), (1, 0), (0, 1)]


def test_hermite_features_orthonormal():
    x = gaussian_x(400_000, 2, 0)
    idx = multi_indices(2, 3)
    f = hermite_features(x, idx, 3)
    gram = f.T @ f / x.shape[0]
    assert np.abs(gram - np.eye(len(idx))).max() < 0.03


def test_linear_labels_recovered_exactly():
    x = gaussian_x(5000, 3, 1)
    w = np.array([0.3, -0.2, 0.5])
    ds = LabeledDataset(x, SQRT_2PI * x @ w, "raw")
    h = fit_poly_l2(ds, 1, ridge=0.0)
    # features are (1, z1, z2, z3) with z = sqrt(2 pi) x
    assert np.abs(h.coefficients - np.r_[0.0, w]).max() < 1e-6


def test_fit_deterministic_and_serialisable():
    x = gaussian_x(3000, 2, 2)
    ds = LabeledDataset(x, np.sign(x[:, 0] + 1e-12), "ltf")
    a, b = fit_poly_l2(ds, 3), fit_poly_l2(ds, 3)
    assert np.array_equal(a.coefficients, b.coefficients)
    d = a.to_dict()
    assert d["degree"] == 3 and len(d["coefficients"]) == 10
    assert set(np.unique(a(x))) <= {-1.0, 1.0}


def test_fit_rejects_bad_input():
    ds = LabeledDataset(gaussian_x(10, 20, 3), np.ones(10), "ltf")
    with pytest.raises(ParameterError):
        fit_poly_l2(ds, 4)  # comb(24, 4) features exceed the cap
    with pytest.raises(ParameterError):
        fit_poly_l2(ds, 0)
    other = LabeledDataset(gaussian_x(10, 2, 3), np.ones(10), "ltf", marginal_convention="other")
    with pytest.raises(ParameterError):
        fit_poly_l2(other, 2)


def test_null_fit_has_small_coefficients():
    x = gaussian_x(100_000, 3, 4)
    y = np.random.default_rng(5).choice([-1.0, 1.0], 100_000)
    h = fit_poly_l2(LabeledDataset(x, y, "ltf"), 3)
    assert np.abs(h.coefficients).max() < 5 / math.sqrt(100_000)


def test_distinguish_null_and_realizable():
    x = gaussian_x(40_000, 4, 6)
    y = np.where(x[:, 0] - 0.1 >= 0, 1.0, -1.0)
    ds = LabeledDataset(x, y, "ltf")
    train, test = ds.split(0.5)
    assert distinguish(train, test, 3) is Hypothesis.ALTERNATIVE
    noise = np.random.default_rng(7).choice([-1.0, 1.0], 40_000)
    train, test = LabeledDataset(x, noise, "ltf").split(0.5)
    dec, info = distinguish(train, test, 3, details=True)
    assert dec is Hypothesis.NULL
    assert info["threshold"] == pytest.approx(4 / math.sqrt(20_000))
    with pytest.raises(ParameterError):
        distinguish(train, train, 3)


def test_large_period_hard_instance_is_learnable():
    # with T = 0.9 the label is close to a low-degree function of <s, x>
    s = np.eye(4)[1]
    ds = direct_hard_instance(4, s, 0.009, 0.9, 60_000, "alternative", RandomStream(8))
    dec, info = distinguish(*ds.split(0.5), 4, details=True)
    assert dec is Hypothesis.ALTERNATIVE and info["test_error"] < 0.3


def test_wilson_interval():
    lo, hi = wilson_interval(20, 20)
    assert hi == pytest.approx(1.0) and lo == pytest.approx(0.8389, abs=1e-3)
    lo, hi = wilson_interval(0, 20)
    assert lo == pytest.approx(0.0, abs=1e-12) and hi == pytest.approx(0.1611, abs=1e-3)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_summarize_advantage():
    r = summarize_advantage([True] * 18 + [False] * 2, [False] * 19 + [True])
    assert r.advantage == pytest.approx(0.85)
    assert r.alt_accepts == 18 and r.null_accepts == 1
    assert r.advantage_interval[0] < 0.85 < r.advantage_interval[1]
    assert r.null_fp_pvalue > 0.05
    with pytest.raises(ParameterError):
        summarize_advantage([True], [])


def test_advantage_experiment_with_huge_threshold_is_zero():
    cfg = AdvantageConfig(n=3, T=0.9, noise=0.009, degree=2, m=4000, trials=3, threshold=1.0)
    r = advantage_experiment(cfg)
    assert r.advantage == 0.0 and r.alt_accepts == 0 and r.null_accepts == 0


def test_advantage_experiment_deterministic_and_custom_source():
    cfg = AdvantageConfig(n=3, T=0.9, noise=0.009, degree=3, m=20_000, trials=2, seed=5)
    a, b = advantage_experiment(cfg), advantage_experiment(cfg)
    assert a.to_dict() == b.to_dict()
    assert a.alt_accepts == 2 and a.null_accepts == 0

    def source(hyp, stream):
        y = stream.rng.choice([-1.0, 1.0], 2000)
        return LabeledDataset(gaussian_x(2000, 3, 0), y, "ltf")

    r = advantage_experiment(cfg, source)
    assert r.alt_accepts == r.null_accepts == 0
