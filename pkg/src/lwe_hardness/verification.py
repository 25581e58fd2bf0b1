"""Monte Carlo and quadrature checks for the hard-instance claims.

Quadrature oracles work in one dimension: for a unit secret ``s`` the label
of a hard instance depends on ``x`` only through ``u = <s, x>``, which is
``D_{R,1}``-distributed (density ``exp(-pi u^2)``), so every expectation
reduces to an integral over ``u`` against the conditional label function
``p(u) = Pr[y = +1 | u]``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from .core import SQRT_2PI, as_scale, mod_reduce
from .dataset import LabeledDataset
from .errors import ContractError, ParameterError
from .lwe import LweBatch
from .planner import implied_fact_eps
from .streams import RandomStream

SIGMA_X = 1.0 / SQRT_2PI  # std of u under D_{R,1}


# ----------------------------------------------------------------------------
# hypotheses and reports
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class HalfspaceHypothesis:
    """``x -> sign(<w, x> - t)`` with ``sign(0) = +1``."""

    weight: np.ndarray
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=float))

    def __call__(self, x) -> np.ndarray:
        return np.where(np.asarray(x, dtype=float) @ self.weight - self.threshold >= 0, 1.0, -1.0)


@dataclass(frozen=True)
class ReluHypothesis:
    """``x -> scale * max(0, <w, x> - t)`` with ``|w| <= 1``.

    ``scale`` carries the multiplier of the correlation-to-L2 conversion;
    for negative scale the map is a negated ReLU rather than a ReLU.
    """

    weight: np.ndarray
    threshold: float
    scale: float = 1.0

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        if np.linalg.norm(w) > 1.0 + 1e-12:
            raise ParameterError(f"ReLU weight norm {np.linalg.norm(w):.6g} exceeds 1")
        object.__setattr__(self, "weight", w)

    def __call__(self, x) -> np.ndarray:
        u = np.asarray(x, dtype=float) @ self.weight
        return self.scale * np.maximum(0.0, u - self.threshold)


@dataclass
class VerificationReport:
    claim_id: str
    estimate: float
    standard_error: float
    tolerance: float
    passed: bool
    m: int
    seed: Optional[int] = None
    target: Optional[float] = None
    status: str = ""
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ----------------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 60) -> float:
    """Adaptive Simpson rule with Richardson correction (iterative)."""
    if a == b:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        diff = left + right - est
        if depth >= max_depth or abs(diff) <= 15 * eps:
            total += left + right + diff / 15.0
        else:
            stack.append((lo, mid, flo, flm, fmid, left, eps / 2, depth + 1))
            stack.append((mid, hi, fmid, frm, fhi, right, eps / 2, depth + 1))
    return total


def integrate_pieces(f: Callable[[float], float], breakpoints: Sequence[float], a: float,
                     b: float, tol: float = 1e-10) -> float:
    """Integrate over [a, b] split at the breakpoints inside it."""
    cuts = [a] + sorted(p for p in set(breakpoints) if a < p < b) + [b]
    per = tol / max(1, len(cuts) - 1)
    return math.fsum(adaptive_simpson(f, lo, hi, per) for lo, hi in zip(cuts[:-1], cuts[1:]))


@dataclass(frozen=True)
class LabelModel:
    """Conditional label law of the hard instance along the secret.

    ``y = +1`` iff ``mod_T(u + z) <= T/2`` with ``z ~ D_{R, noise}``; under
    the null ``p(u) = 1/2``.
    """

    T: float
    noise: float = 0.0
    null: bool = False

    def __post_init__(self):
        if not self.T > 0:
            raise ParameterError(f"period must be positive, got {self.T}")
        if self.noise < 0:
            raise ParameterError(f"noise width must be non-negative, got {self.noise}")

    def p_plus(self, u: float) -> float:
        if self.null:
            return 0.5
        T = self.T
        if self.noise == 0:
            return 1.0 if mod_reduce(T, u) <= T / 2 else 0.0
        sz = self.noise / SQRT_2PI
        k0 = math.floor((u - 9 * sz) / T) - 1
        k1 = math.ceil((u + 9 * sz) / T) + 1
        ks = np.arange(k0, k1 + 1, dtype=float)
        vals = special.ndtr((ks * T + T / 2 - u) / sz) - special.ndtr((ks * T - u) / sz)
        return float(math.fsum(vals.tolist()))

    def breakpoints(self, extra: Sequence[float] = ()) -> list[float]:
        if self.null:
            return list(extra)
        half = self.T / 2
        lim = 8 * SIGMA_X
        js = range(-int(lim / half) - 1, int(lim / half) + 2)
        return [j * half for j in js] + list(extra)

    def expect(self, g: Callable[[float, float], float], extra: Sequence[float] = (),
               tol: float = 1e-10) -> float:
        """``E[g(u, p(u))]`` for ``u ~ D_{R,1}``."""
        lim = 8 * SIGMA_X
        return integrate_pieces(lambda u: math.exp(-math.pi * u * u) * g(u, self.p_plus(u)),
                                self.breakpoints(extra), -lim, lim, tol)


def witness_oracle(T: float, noise: float = 0.0, tol: float = 1e-10) -> dict:
    """Quadrature values of ``R(h1)``, ``R(h2)``, ``Pr[B]`` and
    ``Pr[y = -1 | B]`` for the witness pair."""
    model = LabelModel(T, noise)
    lo, hi = T / 6, T / 3
    r1 = model.expect(lambda u, p: (1 - p) if u >= lo else p, (lo, hi), tol)
    r2 = model.expect(lambda u, p: (1 - p) if u <= hi else p, (lo, hi), tol)
    pb = model.expect(lambda u, p: 1.0 if lo <= u <= hi else 0.0, (lo, hi), tol)
    neg_b = model.expect(lambda u, p: (1 - p) if lo <= u <= hi else 0.0, (lo, hi), tol)
    return {"R1": r1, "R2": r2, "min": min(r1, r2), "P_B": pb,
            "delta_B": neg_b / pb if pb > 0 else float("nan")}


# ----------------------------------------------------------------------------
# halfspaces
# ----------------------------------------------------------------------------

def _require_nonempty(ds: LabeledDataset):
    if ds.m == 0:
        raise ParameterError("empty dataset")


def estimate_01_error(ds: LabeledDataset, h: HalfspaceHypothesis) -> tuple[float, float]:
    """Empirical 0-1 error of ``h`` on ``ds`` and its binomial standard error."""
    if ds.kind != "ltf":
        raise ParameterError(f"0-1 error needs an ltf dataset, got kind {ds.kind!r}")
    _require_nonempty(ds)
    err = float(np.mean(h(ds.x) != ds.labels))
    return err, math.sqrt(err * (1 - err) / ds.m)


def ltf_witnesses(secret, T: float) -> tuple[HalfspaceHypothesis, HalfspaceHypothesis]:
    """``h1 = sign(<s,x> - T/6)`` and ``h2 = sign(-<s,x> + T/3)``."""
    s = np.asarray(secret, dtype=float)
    if not math.isclose(float(np.linalg.norm(s)), 1.0, abs_tol=1e-9):
        raise ParameterError("witness secret must be a unit vector")
    if not T > 0:
        raise ParameterError(f"period must be positive, got {T}")
    return HalfspaceHypothesis(s, T / 6), HalfspaceHypothesis(-s, -T / 3)


def _instance_noise(ds: LabeledDataset) -> float:
    for stage in reversed(ds.provenance):
        if "noise" in stage and stage.get("stage") == "direct_hard_instance":
            return float(stage["noise"])
    return 0.0


def check_witness_gap(ds: LabeledDataset, secret=None, T: Optional[float] = None, *,
                      noise: Optional[float] = None, bound: Optional[float] = None,
                      min_in_band: int = 1000, seed: Optional[int] = None) -> VerificationReport:
    """Measure both witness errors and the band identity on ``ds``.

    Passes when the identity ``R1 + R2 = 1 - P(B)(1 - 2 delta)`` holds on the
    sample and ``min(R1, R2)`` is at most ``bound`` (default: the quadrature
    prediction plus four standard errors). Fewer than ``min_in_band``
    samples in the band gives an inconclusive report.
    """
    _require_nonempty(ds)
    secret = ds.secret if secret is None else np.asarray(secret, dtype=float)
    T = ds.period if T is None else T
    if secret is None or T is None:
        raise ParameterError("witness check needs the planted secret and the period")
    noise = _instance_noise(ds) if noise is None else noise
    h1, h2 = ltf_witnesses(secret, T)
    p1, p2 = h1(ds.x), h2(ds.x)
    y = ds.labels
    r1, r2 = float(np.mean(p1 != y)), float(np.mean(p2 != y))
    in_b = (p1 > 0) & (p2 > 0)
    n_b = int(in_b.sum())
    m = ds.m
    se1, se2 = math.sqrt(r1 * (1 - r1) / m), math.sqrt(r2 * (1 - r2) / m)
    est = min(r1, r2)
    se = se1 if r1 <= r2 else se2

    oracle = witness_oracle(T, noise)
    target = oracle["min"]
    tolerance = 4 * se if bound is None else 0.0
    limit = target + 4 * se if bound is None else bound
    details = {"R1": r1, "R2": r2, "in_band": n_b, "T": T, "noise": noise, "oracle": oracle,
               "bound": limit}
    if n_b < min_in_band:
        return VerificationReport("witness-gap", est, se, tolerance, False, m, seed, target,
                                  status="inconclusive", details=details)
    p_b = n_b / m
    delta = float(np.mean(y[in_b] == -1))
    lhs, rhs = r1 + r2, 1 - p_b * (1 - 2 * delta)
    se_comb = math.sqrt(se1**2 + se2**2)
    identity_ok = abs(lhs - rhs) <= 4 * se_comb
    details.update({"P_B": p_b, "delta_B": delta, "identity_lhs": lhs, "identity_rhs": rhs,
                    "identity_se": se_comb, "identity_ok": identity_ok,
                    "implied_min_bound": 0.5 - p_b / 2 * (1 - 2 * delta)})
    passed = identity_ok and est <= limit
    return VerificationReport("witness-gap", est, se, tolerance, passed, m, seed, target,
                              details=details)


# ----------------------------------------------------------------------------
# ReLUs
# ----------------------------------------------------------------------------

def relu_correlation_empirical(ds: LabeledDataset, t: float, secret=None) -> tuple[float, float]:
    """``r(t) = E[y ReLU(<s,x> - t)]`` on the sample, with standard error."""
    _require_nonempty(ds)
    u = ds.projection(secret)
    vals = ds.labels * np.maximum(0.0, u - t)
    se = float(vals.std(ddof=1) / math.sqrt(ds.m)) if ds.m > 1 else math.inf
    return float(vals.mean()), se


def relu_correlation_quadrature(T: float, t: float, noise: float = 0.0, null: bool = False,
                                tol: float = 1e-12) -> float:
    model = LabelModel(T, noise, null)
    return model.expect(lambda u, p: (2 * p - 1) * max(u - t, 0.0), (t,), tol)


def relu_correlation(source, t: float, secret=None) -> tuple[float, float]:
    """``r(t)`` from a dataset (estimate, se) or a :class:`LabelModel` (value, 0)."""
    if isinstance(source, LabeledDataset):
        return relu_correlation_empirical(source, t, secret)
    if isinstance(source, LabelModel):
        return relu_correlation_quadrature(source.T, t, source.noise, source.null), 0.0
    raise ParameterError("relu_correlation needs a LabeledDataset or a LabelModel")


def correlation_to_l2(ds: LabeledDataset, f: ReluHypothesis, eps: float
                      ) -> tuple[ReluHypothesis, float, float]:
    """Turn correlation ``|E[y f]| >= eps`` into the ReLU ``g = +-eps f``.

    Returns ``(g, measured E[(y - g)^2], its standard error)`` and enforces
    the contract ``error <= 1 - eps^2 + 4 se``.
    """
    if f.threshold < 0:
        raise ParameterError("conversion needs a non-negative threshold")
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {eps}")
    _require_nonempty(ds)
    fx = f(ds.x)
    corr = float(np.mean(ds.labels * fx))
    if abs(corr) < eps:
        raise ContractError(f"correlation {corr:.6g} is below eps={eps:.6g}")
    k = eps if corr > 0 else -eps
    g = ReluHypothesis(f.weight, f.threshold, scale=f.scale * k)
    sq = (ds.labels - g(ds.x)) ** 2
    err = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(ds.m)) if ds.m > 1 else 0.0
    if err > 1 - eps**2 + 4 * se:
        raise ContractError(f"L2 error {err:.6g} exceeds 1 - eps^2 + 4 se = {1 - eps**2 + 4 * se:.6g}")
    return g, err, se


def relu_pointwise_fraction(ds: LabeledDataset, t: float, secret=None) -> float:
    """Fraction of samples with ``ReLU(u - t)^2 <= u^2`` (should be 1 for t >= 0)."""
    u = ds.projection(secret)
    return float(np.mean(np.maximum(0.0, u - t) ** 2 <= u * u))


# ----------------------------------------------------------------------------
# collapsed Gaussian
# ----------------------------------------------------------------------------

def theta_deviation(sigma: float, w) -> np.ndarray:
    """``sum_k rho_sigma(w + k) - 1`` via its Fourier series (no cancellation)."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    j = 1
    while True:
        amp = 2.0 * math.exp(-math.pi * sigma**2 * j * j)
        if amp < 1e-300:
            break
        out = out + amp * np.cos(2 * math.pi * j * w)
        if amp < 1e-18 * max(float(np.abs(out).max(initial=0.0)), 1e-300):
            break
        j += 1
    return out


def collapsed_tv(sigma: float) -> float:
    """Exact 1-D total variation between ``mod_1(D_{R,sigma})`` and ``U[0,1)``."""
    amp = 2.0 * math.exp(-math.pi * sigma**2)
    f = lambda w: abs(float(theta_deviation(sigma, np.array([w]))[0]))
    # zeros of the deviation are where the integrand has kinks; split on a fine grid
    cuts = np.linspace(0.0, 1.0, 65).tolist()
    return 0.5 * integrate_pieces(f, cuts, 0.0, 1.0, tol=max(amp, 1e-300) * 1e-8)


def check_fact_a4(scale, n: int = 1, grid: int = 4096, tol: float = 1e-4,
                  seed: Optional[int] = None) -> VerificationReport:
    """Pointwise ratio of the collapsed density to the uniform one, and 1-D TV."""
    sigma = as_scale(scale).sigma
    if int(n) < 1:
        raise ParameterError("dimension must be >= 1")
    w = np.arange(grid) / grid
    dev = theta_deviation(sigma, w)
    lo, hi = 1 + float(dev.min()), 1 + float(dev.max())
    max_dev = max(abs(hi**n - 1), abs(lo**n - 1))
    tv = collapsed_tv(sigma)
    eps = implied_fact_eps(sigma, n)
    in_regime = eps < 1 / 3
    details = {"sigma": sigma, "n": int(n), "grid": grid, "tv_1d": tv, "implied_eps": eps,
               "regime": "inside smoothing regime" if in_regime else "outside smoothing regime"}
    return VerificationReport("fact-a4", max_dev, 0.0, tol, max_dev <= tol, grid, seed,
                              target=0.0, details=details)


# ----------------------------------------------------------------------------
# independence
# ----------------------------------------------------------------------------

def _random_directions(n: int, count: int, stream: RandomStream) -> np.ndarray:
    v = stream.rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _quantile_bins(u: np.ndarray, bins: int) -> np.ndarray:
    edges = np.unique(np.quantile(u, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, u, side="right")


def _chi2_pvalue(a: np.ndarray, b: np.ndarray) -> float:
    table = np.zeros((int(a.max()) + 1, int(b.max()) + 1))
    np.add.at(table, (a, b), 1)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if min(table.shape) < 2:
        return 1.0
    return float(stats.chi2_contingency(table, correction=False)[1])


def _independence(x: np.ndarray, label_bins: np.ndarray, projections: int, stream: RandomStream,
                  directions, bins: int, alpha: float, claim: str, seed) -> VerificationReport:
    m, n = x.shape
    if m == 0:
        raise ParameterError("empty dataset")
    dirs = [] if directions is None else [np.asarray(d, dtype=float) for d in np.atleast_2d(directions)]
    if projections > 0:
        dirs += list(_random_directions(n, projections, stream))
    if not dirs:
        raise ParameterError("independence test needs at least one direction")
    pvals = [_chi2_pvalue(_quantile_bins(x @ v, bins), label_bins) for v in dirs]
    level = alpha / len(dirs)
    pmin = min(pvals)
    return VerificationReport(claim, pmin, 0.0, level, pmin > level, m, seed,
                              details={"p_values": pvals, "directions": len(dirs), "bins": bins})


def null_independence_test(ds: LabeledDataset, projections: int = 8,
                           stream: Optional[RandomStream] = None, directions=None,
                           bins: int = 10, alpha: float = 1e-3,
                           seed: Optional[int] = None) -> VerificationReport:
    """Chi-square test of label vs binned ``<v, x>`` over random unit ``v``.

    Passes when every p-value exceeds ``alpha / #directions``.
    """
    stream = stream or RandomStream(0 if seed is None else seed, 7)
    if ds.kind == "raw":
        labels = _quantile_bins(ds.labels, bins)
    else:
        labels = (ds.labels > 0).astype(int)
    return _independence(ds.x, labels, projections, stream, directions, bins, alpha,
                         "null-independence", seed)


def batch_independence_test(batch: LweBatch, projections: int = 8,
                            stream: Optional[RandomStream] = None, directions=None,
                            bins: int = 10, alpha: float = 1e-3,
                            seed: Optional[int] = None) -> VerificationReport:
    """Same test for an LWE batch, with ``y`` binned into ``bins`` torus cells."""
    stream = stream or RandomStream(0 if seed is None else seed, 7)
    q = batch.modulus
    cells = np.minimum((batch.y / q * bins).astype(int), bins - 1)
    return _independence(batch.x, cells, projections, stream, directions, bins, alpha,
                         "batch-independence", seed)


# ----------------------------------------------------------------------------
# pipeline comparisons
# ----------------------------------------------------------------------------

def joint_histogram(ds: LabeledDataset, bins: int = 50, secret=None,
                    T: Optional[float] = None) -> np.ndarray:
    """Counts of ``(mod_T(<s,x>), label)`` on a ``bins x 2`` grid."""
    T = ds.period if T is None else T
    if T is None:
        raise ParameterError("joint histogram needs the period")
    w = mod_reduce(T, ds.projection(secret))
    cell = np.minimum((w / T * bins).astype(int), bins - 1)
    col = (ds.labels < 0).astype(int)
    hist = np.zeros((bins, 2))
    np.add.at(hist, (cell, col), 1)
    return hist


def compare_joint_histograms(a: LabeledDataset, b: LabeledDataset, bins: int = 50,
                             n_se: float = 4.0, seed: Optional[int] = None) -> VerificationReport:
    """Cell-by-cell two-sample comparison of the joint histograms."""
    ha, hb = joint_histogram(a, bins), joint_histogram(b, bins)
    pa, pb = ha / a.m, hb / b.m
    var = pa * (1 - pa) / a.m + pb * (1 - pb) / b.m
    # pooled variance keeps empty cells from giving zero standard error
    pooled = (ha + hb) / (a.m + b.m)
    var = np.maximum(var, pooled * (1 - pooled) * (1 / a.m + 1 / b.m))
    z = np.where(var > 0, np.abs(pa - pb) / np.sqrt(np.where(var > 0, var, 1)), 0.0)
    zmax = float(z.max())
    return VerificationReport("pipeline-equivalence", zmax, 0.0, n_se, zmax <= n_se,
                              min(a.m, b.m), seed, target=0.0,
                              details={"bins": bins, "m_a": a.m, "m_b": b.m,
                                       "cells_over": int((z > n_se).sum())})


def check_residual_width(batch: LweBatch, secret, predicted: float, rel_tol: float = 0.1,
                         seed: Optional[int] = None) -> VerificationReport:
    """Compare the planted residual width (rho convention) with a prediction."""
    from .lwe import residual_stats
    _, std = residual_stats(batch, secret)
    width = std * SQRT_2PI
    return VerificationReport("residual-width", width, 0.0, rel_tol,
                              abs(width - predicted) <= rel_tol * predicted, batch.m, seed,
                              target=predicted)


# ----------------------------------------------------------------------------
# Hermite projection oracle
# ----------------------------------------------------------------------------

def hermite_projection_oracle(T: float, degree: int, noise: float = 0.0,
                              tol: float = 1e-10) -> dict:
    """Best degree-``d`` L2 approximation of ``E[y | u]`` along the secret.

    Returns the orthonormal Hermite coefficients (in ``z = sqrt(2 pi) u``),
    the L2 error ``E[(y - P(u))^2]`` and the 0-1 error of ``sign(P(u))``.
    """
    from numpy.polynomial import hermite_e

    model = LabelModel(T, noise)

    def he(j, u):
        c = np.zeros(j + 1)
        c[j] = 1.0
        return float(hermite_e.hermeval(SQRT_2PI * u, c)) / math.sqrt(math.factorial(j))

    coefs = [model.expect(lambda u, p, j=j: (2 * p - 1) * he(j, u), (), tol)
             for j in range(degree + 1)]

    def poly(u):
        return sum(c * he(j, u) for j, c in enumerate(coefs))

    l2 = 1.0 - sum(c * c for c in coefs)
    # sign(P) may flip between grid cells; split on a fine grid so the kinks are resolved
    extra = np.linspace(-8 * SIGMA_X, 8 * SIGMA_X, 257).tolist()
    sign_err = model.expect(lambda u, p: (1 - p) if poly(u) >= 0 else p, extra, tol)
    return {"coefficients": coefs, "l2_error": l2, "sign_error": sign_err}
