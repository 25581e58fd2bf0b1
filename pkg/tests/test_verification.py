import math

import numpy as np
import pytest
from scipy import integrate, stats

from lwe_hardness.dataset import LabeledDataset
from lwe_hardness.errors import ContractError, ParameterError
from lwe_hardness.reduction import direct_hard_instance
from lwe_hardness.streams import RandomStream
from lwe_hardness.verification import (HalfspaceHypothesis, LabelModel, ReluHypothesis,
                                       adaptive_simpson, check_fact_a4, check_witness_gap,
                                       collapsed_tv, compare_joint_histograms,
                                       correlation_to_l2, estimate_01_error,
                                       hermite_projection_oracle, ltf_witnesses,
                                       null_independence_test, relu_correlation,
                                       relu_pointwise_fraction, theta_deviation,
                                       witness_oracle)

T = 0.25
NOISE = T / 100
SQRT_2PI = math.sqrt(2 * math.pi)


def scipy_expect(T, noise, g, null=False):
    # independent oracle: scipy quad over many short pieces
    model = LabelModel(T, noise, null)
    f = lambda u: math.exp(-math.pi * u * u) * g(u, model.p_plus(u))
    cuts = np.arange(-4.0, 4.0 + T / 4, T / 4)
    return math.fsum(integrate.quad(f, a, b, epsabs=1e-13, limit=200)[0]
                     for a, b in zip(cuts[:-1], cuts[1:]))


@pytest.fixture(scope="module")
def hard():
    s = np.eye(8)[2]
    return direct_hard_instance(8, s, NOISE, T, 400_000, "alternative", RandomStream(11))


def test_adaptive_simpson_basic():
    assert adaptive_simpson(math.sin, 0, math.pi) == pytest.approx(2.0, abs=1e-10)
    assert adaptive_simpson(lambda u: math.exp(-math.pi * u * u), -8, 8) == pytest.approx(1.0, abs=1e-10)


def test_witness_oracle_frozen():
    # [DERIVED] frozen from the scipy.quad oracle
    o = witness_oracle(T, NOISE)
    assert o["R1"] == pytest.approx(0.4785640465621295, abs=1e-9)
    assert o["R2"] == pytest.approx(0.4802957296666223, abs=1e-9)
    assert o["P_B"] == pytest.approx(0.04114022377128722, abs=1e-9)
    assert o["delta_B"] == pytest.approx(0.0, abs=1e-12)
    # the band identity holds exactly at the population level
    assert o["R1"] + o["R2"] == pytest.approx(1 - o["P_B"] * (1 - 2 * o["delta_B"]), abs=1e-9)


def test_witness_oracle_matches_scipy():
    lo, hi = T / 6, T / 3
    r1 = scipy_expect(T, NOISE, lambda u, p: (1 - p) if u >= lo else p)
    r2 = scipy_expect(T, NOISE, lambda u, p: (1 - p) if u <= hi else p)
    o = witness_oracle(T, NOISE)
    assert o["R1"] == pytest.approx(r1, abs=1e-8)
    assert o["R2"] == pytest.approx(r2, abs=1e-8)


def test_witness_oracle_zero_noise_band():
    # P(B) is the Gaussian mass of [T/6, T/3] under density exp(-pi u^2)
    o = witness_oracle(T, 0.0)
    sd = 1 / SQRT_2PI
    pb = stats.norm.cdf(T / 3, scale=sd) - stats.norm.cdf(T / 6, scale=sd)
    assert o["P_B"] == pytest.approx(pb, abs=1e-9)
    assert o["delta_B"] == 0.0


def test_witness_gap_on_hard_instance(hard):
    rep = check_witness_gap(hard)
    assert rep.passed, rep.details
    assert rep.details["identity_ok"]
    assert rep.details["P_B"] == pytest.approx(0.0411, abs=0.002)
    assert rep.estimate == pytest.approx(rep.target, abs=4 * rep.standard_error + 1e-3)
    d = rep.to_dict()
    assert d["claim_id"] == "witness-gap" and d["status"] == "pass"


def test_witness_gap_null_cannot_beat_half():
    ds = direct_hard_instance(8, np.eye(8)[0], NOISE, T, 200_000, "null", RandomStream(12))
    rep = check_witness_gap(ds, bound=0.48)
    assert rep.details["identity_ok"]
    assert not rep.passed and rep.estimate > 0.49


def test_witness_gap_inconclusive_when_band_small():
    ds = direct_hard_instance(4, np.eye(4)[0], NOISE, T, 2000, "alternative", RandomStream(13))
    rep = check_witness_gap(ds)
    assert rep.status == "inconclusive" and not rep.passed


def test_trivial_hypotheses():
    x = np.zeros((4, 2))
    ds = LabeledDataset(x, np.array([1.0, 1.0, -1.0, 1.0]), "ltf")
    err, se = estimate_01_error(ds, HalfspaceHypothesis(np.zeros(2), 0.0))  # always +1
    assert err == 0.25 and se == pytest.approx(math.sqrt(0.25 * 0.75 / 4))
    err, _ = estimate_01_error(ds, HalfspaceHypothesis(np.zeros(2), 1.0))  # always -1
    assert err == 0.75
    with pytest.raises(ParameterError):
        estimate_01_error(LabeledDataset(x, np.ones(4), "relu"), HalfspaceHypothesis(np.zeros(2), 0))
    with pytest.raises(ParameterError):
        ltf_witnesses(np.ones(2), T)


def test_relu_correlation_frozen():
    # [DERIVED] frozen quadrature values at T = 0.25, noise T/100
    model = LabelModel(T, NOISE)
    assert relu_correlation(model, T / 6)[0] == pytest.approx(-0.0017583599694283387, abs=1e-10)
    assert relu_correlation(model, T / 4)[0] == pytest.approx(-0.001989549587180857, abs=1e-10)
    assert relu_correlation(model, T / 3)[0] == pytest.approx(-0.0017921002166436807, abs=1e-10)
    assert relu_correlation(LabelModel(T, NOISE, null=True), T / 4)[0] == pytest.approx(0, abs=1e-12)
    with pytest.raises(ParameterError):
        relu_correlation([1, 2], 0.1)


def test_relu_correlation_matches_scipy():
    t = T / 4
    ref = scipy_expect(T, NOISE, lambda u, p: (2 * p - 1) * max(u - t, 0.0))
    assert relu_correlation(LabelModel(T, NOISE), t)[0] == pytest.approx(ref, abs=1e-9)


def test_relu_correlation_empirical_agrees(hard):
    est, se = relu_correlation(hard, T / 4)
    assert abs(est - (-0.001989549587180857)) < 4 * se


def test_correlation_to_l2(hard):
    s = hard.secret
    f = ReluHypothesis(s, T / 4)
    r, _ = relu_correlation(hard, T / 4)
    eps = abs(r)
    g, err, se = correlation_to_l2(hard, f, eps)
    assert g.scale == pytest.approx(-eps)  # negative correlation flips the sign
    assert err <= 1 - eps**2 + 4 * se
    with pytest.raises(ContractError):
        correlation_to_l2(hard, f, 0.5)
    assert relu_pointwise_fraction(hard, T / 4) == 1.0


def test_correlation_to_l2_synthetic():
    # y = sign(u) on a Gaussian, so y ReLU(u) = ReLU(u)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200_000, 3)) / SQRT_2PI
    y = np.where(x[:, 0] >= 0, 1.0, -1.0)
    ds = LabeledDataset(x, y, "relu", secret=np.eye(3)[0])
    est, se = relu_correlation(ds, 0.0)
    # E[ReLU(u)] for u ~ N(0, 1/(2 pi)) is 1/(2 pi)
    assert est == pytest.approx(1 / (2 * math.pi), abs=4 * se)
    g, err, _ = correlation_to_l2(ds, ReluHypothesis(np.eye(3)[0], 0.0), 0.1)
    # E[(y - 0.1 u+)^2] = 1 - 0.2 E[u+] + 0.01 E[u+^2]
    assert err == pytest.approx(1 - 0.2 / (2 * math.pi) + 0.01 / (4 * math.pi), abs=2e-3)
    with pytest.raises(ParameterError):
        ReluHypothesis(np.ones(3), 0.0)


# [DERIVED] frozen maximum deviation and 1-D TV of the collapsed Gaussian
FACT = [(1.0, 0.0864348, 0.0275108), (1.5, 0.00170288, 0.000542042),
        (2.0, 6.9747e-6, 2.2201e-6), (3.0, 1.05e-12, 3.35e-13)]


@pytest.mark.parametrize("sigma,dev,tv", FACT)
def test_collapsed_deviation_values(sigma, dev, tv):
    rep = check_fact_a4(sigma)
    assert rep.estimate == pytest.approx(dev, rel=1e-3)
    assert rep.details["tv_1d"] == pytest.approx(tv, rel=1e-3)
    assert rep.passed == (dev <= 1e-4)


def test_collapsed_tv_against_grid():
    w = (np.arange(200_000) + 0.5) / 200_000
    ref = 0.5 * np.abs(theta_deviation(1.0, w)).mean()
    assert collapsed_tv(1.0) == pytest.approx(ref, rel=1e-6)


def test_fact_dimension_scaling_and_regime():
    one = check_fact_a4(2.0, n=1)
    many = check_fact_a4(2.0, n=100)
    assert many.estimate == pytest.approx((1 + one.estimate) ** 100 - 1, rel=1e-6)
    assert check_fact_a4(0.5).details["regime"].startswith("outside")
    assert check_fact_a4(3.0).details["regime"].startswith("inside")


def test_null_independence_pass_and_power():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((50_000, 6)) / SQRT_2PI
    null = LabeledDataset(x, rng.choice([-1.0, 1.0], 50_000), "ltf")
    assert null_independence_test(null, 8, RandomStream(2)).passed
    dep = LabeledDataset(x, np.where(x[:, 1] > 0, 1.0, -1.0), "ltf")
    rep = null_independence_test(dep, 0, RandomStream(3), directions=np.eye(6)[1])
    assert not rep.passed
    # random directions alone rarely miss a correlation this strong
    assert not null_independence_test(dep, 8, RandomStream(4)).passed


def test_hard_instance_looks_null_along_random_directions():
    # periodic labels with a small period are nearly independent of any fixed projection
    ds = direct_hard_instance(8, np.eye(8)[0], NOISE, 0.05, 100_000, "alternative", RandomStream(5))
    rng = np.random.default_rng(6)
    dirs = rng.standard_normal((4, 8))
    dirs[:, 0] = 0.0
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    assert null_independence_test(ds, 0, directions=dirs).passed


def test_compare_joint_histograms():
    s = np.eye(4)[0]
    a = direct_hard_instance(4, s, NOISE, T, 100_000, "alternative", RandomStream(7))
    b = direct_hard_instance(4, s, NOISE, T, 100_000, "alternative", RandomStream(8))
    assert compare_joint_histograms(a, b).passed
    c = direct_hard_instance(4, s, NOISE, T, 100_000, "null", RandomStream(9))
    c.secret, c.period = s, T
    assert not compare_joint_histograms(a, c).passed


def test_hermite_oracle_against_grid():
    # [DERIVED] coefficient oracle at T=1: compare with a dense-grid projection
    out = hermite_projection_oracle(1.0, 4, 0.01)
    assert out["coefficients"][1] == pytest.approx(0.1379, abs=5e-4)
    assert out["coefficients"][3] == pytest.approx(-0.3537, abs=5e-4)
    assert out["sign_error"] == pytest.approx(0.1786, abs=5e-4)
    z = np.linspace(-9, 9, 400_001)
    u = z / SQRT_2PI
    model = LabelModel(1.0, 0.01)
    p = np.array([model.p_plus(v) for v in u[::50]])
    w = stats.norm.pdf(z[::50])
    he3 = (z[::50] ** 3 - 3 * z[::50]) / math.sqrt(6)
    c3 = np.trapezoid(w * (2 * p - 1) * he3, z[::50])
    assert out["coefficients"][3] == pytest.approx(c3, abs=1e-4)
    assert out["l2_error"] == pytest.approx(1 - sum(c * c for c in out["coefficients"]))
