"""Low-degree polynomial regression as an LWE distinguisher.

The learner fits labels by least squares on tensor Hermite features (an L2
stand-in for L1 polynomial regression) and declares "alternative" when the
sign of the fit beats random guessing on held-out data by a margin.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .core import SQRT_2PI
from .dataset import LabeledDataset
from .errors import ParameterError
from .lwe import Hypothesis
from .reduction import direct_hard_instance
from .samplers import sample_unit_sphere
from .streams import RandomStream

FEATURE_CAP = 5000
_ROWS = 8192


def multi_indices(n: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent vectors of total degree <= ``degree``, graded then lexicographic."""
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(n), d):
            e = [0] * n
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def _standardize(x: np.ndarray, convention: str) -> np.ndarray:
    if convention == "rho-one":
        return x * SQRT_2PI
    if convention == "unit-variance":
        return x
    raise ParameterError(f"Hermite basis needs a Gaussian marginal, got {convention!r}")


def _hermite_table(z: np.ndarray, degree: int) -> np.ndarray:
    """Orthonormal ``He_j(z) / sqrt(j!)`` for j = 0..degree, shape (m, n, degree+1)."""
    h = np.empty(z.shape + (degree + 1,))
    h[..., 0] = 1.0
    if degree >= 1:
        h[..., 1] = z
    for j in range(2, degree + 1):
        h[..., j] = z * h[..., j - 1] - (j - 1) * h[..., j - 2]
    norms = np.sqrt([math.factorial(j) for j in range(degree + 1)])
    return h / norms


def hermite_features(x: np.ndarray, indices: list[tuple[int, ...]], degree: int,
                     convention: str = "rho-one") -> np.ndarray:
    z = _standardize(np.asarray(x, dtype=float), convention)
    table = _hermite_table(z, degree)
    feats = np.ones((z.shape[0], len(indices)))
    for col, e in enumerate(indices):
        for i, p in enumerate(e):
            if p:
                feats[:, col] *= table[:, i, p]
    return feats


@dataclass
class PolynomialHypothesis:
    degree: int
    indices: list
    coefficients: np.ndarray
    convention: str = "rho-one"
    kind: str = "ltf"

    def predict(self, x) -> np.ndarray:
        """The raw polynomial value ``p(x)``."""
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[0])
        for a in range(0, x.shape[0], _ROWS):
            f = hermite_features(x[a:a + _ROWS], self.indices, self.degree, self.convention)
            out[a:a + _ROWS] = f @ self.coefficients
        return out

    def __call__(self, x) -> np.ndarray:
        p = self.predict(x)
        if self.kind == "relu":
            return np.clip(p, -1.0, 1.0)
        return np.where(p >= 0, 1.0, -1.0)

    def to_dict(self) -> dict:
        return {"degree": self.degree, "indices": [list(e) for e in self.indices],
                "coefficients": self.coefficients.tolist(), "convention": self.convention,
                "kind": self.kind}


def fit_poly_l2(ds: LabeledDataset, degree: int, ridge: float = 1e-8,
                feature_cap: int = FEATURE_CAP) -> PolynomialHypothesis:
    """Ridge least squares of labels on Hermite features up to ``degree``."""
    if int(degree) < 1:
        raise ParameterError("degree must be >= 1")
    if ridge < 0:
        raise ParameterError("ridge must be non-negative")
    count = math.comb(ds.n + degree, degree)
    if count > feature_cap:
        raise ParameterError(f"{count} features exceed the cap of {feature_cap}")
    if ds.m == 0:
        raise ParameterError("empty dataset")
    idx = multi_indices(ds.n, degree)
    gram = np.zeros((count, count))
    rhs = np.zeros(count)
    for a in range(0, ds.m, _ROWS):
        f = hermite_features(ds.x[a:a + _ROWS], idx, degree, ds.marginal_convention)
        gram += f.T @ f
        rhs += f.T @ ds.labels[a:a + _ROWS]
    gram /= ds.m
    rhs /= ds.m
    gram[np.diag_indices(count)] += ridge
    coef = np.linalg.solve(gram, rhs)
    kind = "relu" if ds.kind == "relu" else "ltf"
    return PolynomialHypothesis(int(degree), idx, coef, ds.marginal_convention, kind)


def distinguish(train: LabeledDataset, test: LabeledDataset, degree: int,
                threshold: Optional[float] = None, ridge: float = 1e-8,
                details: bool = False):
    """Fit on ``train``; answer alternative iff test 0-1 error <= 1/2 - threshold.

    The default threshold is ``4 / sqrt(m_test)``.
    """
    if train is test:
        raise ParameterError("train and test must be disjoint datasets")
    if train.n != test.n:
        raise ParameterError("train and test dimensions differ")
    if test.m == 0:
        raise ParameterError("empty test set")
    thr = 4.0 / math.sqrt(test.m) if threshold is None else float(threshold)
    h = fit_poly_l2(train, degree, ridge)
    pred = np.where(h.predict(test.x) >= 0, 1.0, -1.0)
    err = float(np.mean(pred != test.labels))
    decision = Hypothesis.ALTERNATIVE if err <= 0.5 - thr else Hypothesis.NULL
    if details:
        return decision, {"test_error": err, "threshold": thr, "m_train": train.m,
                          "m_test": test.m, "degree": int(degree)}
    return decision


@dataclass(frozen=True)
class AdvantageConfig:
    n: int = 6
    T: float = 0.5
    noise: float = 0.005
    degree: int = 4
    m: int = 500_000
    trials: int = 20
    seed: int = 0
    threshold: Optional[float] = None
    ridge: float = 1e-8

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdvantageResult:
    trials: int
    alt_accepts: int
    null_accepts: int
    advantage: float
    alt_interval: tuple
    null_interval: tuple
    advantage_interval: tuple
    null_fp_pvalue: float
    test_errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def summarize_advantage(alt: list[bool], null: list[bool], fp_budget: float = 0.05,
                        errors: Optional[dict] = None) -> AdvantageResult:
    trials = len(alt)
    if len(null) != trials:
        raise ParameterError("alternative and null runs must be paired")
    a, b = int(sum(alt)), int(sum(null))
    ai, ni = wilson_interval(a, trials), wilson_interval(b, trials)
    adv = (a - b) / trials if trials else 0.0
    pval = float(stats.binomtest(b, trials, fp_budget, alternative="greater").pvalue) if trials else 1.0
    return AdvantageResult(trials, a, b, adv, ai, ni,
                           (max(-1.0, ai[0] - ni[1]), min(1.0, ai[1] - ni[0])), pval,
                           errors or {})


def advantage_experiment(config: AdvantageConfig, source=None) -> AdvantageResult:
    """Paired alternative/null trials of :func:`distinguish`.

    ``source(hyp, trial_stream)`` may supply datasets; the default draws
    direct hard instances with a fresh uniform secret per trial. Each
    dataset is split in half for training and testing.
    """
    root = RandomStream(config.seed, 3)
    alt_dec, null_dec = [], []
    errs = {"alternative": [], "null": []}
    for i in range(int(config.trials)):
        trial = root.substream(i)
        secret = sample_unit_sphere(config.n, trial.substream(0))
        for hyp, out in ((Hypothesis.ALTERNATIVE, alt_dec), (Hypothesis.NULL, null_dec)):
            sub = trial.substream(1 if hyp is Hypothesis.ALTERNATIVE else 2)
            if source is None:
                ds = direct_hard_instance(config.n, secret, config.noise, config.T, config.m,
                                          hyp, sub)
            else:
                ds = source(hyp, sub)
            train, test = ds.split(0.5)
            dec, info = distinguish(train, test, config.degree, config.threshold, config.ridge,
                                    details=True)
            out.append(dec is Hypothesis.ALTERNATIVE)
            errs[hyp.value].append(info["test_error"])
    return summarize_advantage(alt_dec, null_dec, errors=errs)
