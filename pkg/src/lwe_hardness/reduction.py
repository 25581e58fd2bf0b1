"""Stages of the LWE to Gaussian-cLWE to LTF/ReLU reduction chain.

Each stage maps an :class:`LweBatch` to a new batch (or, at the end, to a
:class:`LabeledDataset`) and appends a provenance record. Stages are
deterministic given their :class:`RandomStream`; large batches are handled
in chunks with one substream per chunk.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import haar_rotation, mod_reduce
from .dataset import LabeledDataset
from .errors import ContractError, ParameterError, StatisticalAlarm
from .lwe import CHUNK, Hypothesis, LweBatch, LweSpec, as_hypothesis, gen_lwe
from .planner import ReductionPlan
from .samplers import (DistributionDescriptor, density_ratio_f, discrete_gaussian_coset,
                       sample_continuous_gaussian, theta_bounds)
from .streams import RandomStream

STAGES = ("widen", "continuize", "gaussianize", "rotate")


def _chunks(m: int):
    for ci, start in enumerate(range(0, m, CHUNK)):
        yield ci, start, min(m, start + CHUNK)


def widen_noise(batch: LweBatch, extra: float, stream: RandomStream) -> LweBatch:
    """Add continuous noise ``D_{R, extra}`` to every label (mod q).

    Turns discrete-noise LWE into continuous-noise LWE; labels land on R_q.
    """
    if not extra > 0:
        raise ParameterError(f"extra noise width must be positive, got {extra}")
    y = np.empty(batch.m)
    for ci, a, b in _chunks(batch.m):
        z = sample_continuous_gaussian(extra, 1, stream.substream(ci), b - a)[:, 0]
        y[a:b] = mod_reduce(batch.modulus, batch.y[a:b] + z)
    return batch.derive({"stage": "widen_noise", "extra": float(extra)}, y=y)


def continuize_samples(batch: LweBatch, smoothing: float, stream: RandomStream) -> LweBatch:
    """Replace integer samples by ``mod_q(x + e)`` with ``e ~ D_{R^n, smoothing}``.

    The label noise grows by ``<s, e>``, whose width is ``|s| * smoothing``,
    which is why the secret family must have a known common norm.
    """
    if batch.secret_norm is None:
        raise ContractError("continuize_samples needs secrets of a fixed known norm")
    if not smoothing > 0:
        raise ParameterError(f"smoothing width must be positive, got {smoothing}")
    x = np.empty_like(batch.x)
    for ci, a, b in _chunks(batch.m):
        e = sample_continuous_gaussian(smoothing, batch.n, stream.substream(ci), b - a)
        x[a:b] = mod_reduce(batch.modulus, batch.x[a:b] + e)
    stage = {"stage": "continuize_samples", "smoothing": float(smoothing),
             "added_label_noise": float(batch.secret_norm * smoothing)}
    return batch.derive(stage, x=x)


def gaussianize(batch: LweBatch, plan: ReductionPlan, stream: RandomStream,
                tol: float = 1e-12) -> LweBatch:
    """Turn continuous LWE on R_q^n into Gaussian-cLWE with modulus alpha.

    Each sample ``x`` is replaced by a draw ``x_t`` of
    ``D_{Z^n + x/q, sigma_tilde} / sigma_tilde`` that is kept with probability
    ``f(x_t) / max f``. Kept samples are distributed as ``D_{R^n,1}``. Labels
    become ``mod_alpha(y / (q r sigma_tilde))`` and the secret ``s / r``.

    A squeeze test accepts most draws using the lower bound on ``f``; only the
    rest need the exact weight.
    """
    if batch.secret_norm is None:
        raise ContractError("gaussianize needs secrets of a fixed known norm")
    if not math.isclose(batch.secret_norm, plan.r, rel_tol=1e-9):
        raise ParameterError(f"secret norm {batch.secret_norm} does not match plan r={plan.r}")
    if batch.n != plan.n:
        raise ParameterError(f"batch dimension {batch.n} does not match plan n={plan.n}")
    q = float(batch.modulus)
    st, r, alpha, n = plan.sigma_tilde, plan.r, plan.alpha, batch.n

    lo, hi = theta_bounds(st, tol)
    max_f = hi**n
    squeeze = max(lo, 0.0) ** n / max_f

    kept_x, kept_y = [], []
    for ci, a, b in _chunks(batch.m):
        sub = stream.substream(ci)
        offsets = batch.x[a:b] / q
        xt = discrete_gaussian_coset(st, 1.0, offsets, sub.rng, tol) / st
        u = sub.rng.random(b - a)
        keep = u <= squeeze
        rest = ~keep
        if rest.any():
            keep[rest] = u[rest] <= density_ratio_f(st, xt[rest], tol) / max_f
        kept_x.append(xt[keep])
        kept_y.append(batch.y[a:b][keep])
    x_new = np.concatenate(kept_x) if kept_x else np.empty((0, n))
    y_new = np.concatenate(kept_y) if kept_y else np.empty(0)
    accepted = x_new.shape[0]
    if batch.m > 0 and accepted < batch.m / 4:
        raise StatisticalAlarm(
            f"rejection sampling kept {accepted} of {batch.m} samples (< m/4); "
            f"bound on max f was {max_f:.6g}")
    y_new = mod_reduce(alpha, y_new / (q * r * st))

    secret = None if batch.planted_secret is None else batch.planted_secret / r
    stage = {"stage": "gaussianize", "sigma_tilde": st, "alpha": alpha, "max_f": max_f,
             "input": batch.m, "accepted": accepted,
             "acceptance_rate": accepted / batch.m if batch.m else None}
    return batch.derive(stage, x=x_new, y=y_new, modulus=alpha,
                        planted_secret=secret, secret_norm=1.0)


def rotate_batch(batch: LweBatch, rotation: Optional[np.ndarray] = None,
                 stream: Optional[RandomStream] = None, atol: float = 1e-10) -> LweBatch:
    """Apply an orthogonal map ``Q`` to every sample and to the secret.

    Labels are unchanged because ``<Qx, Qs> = <x, s>``. Without an explicit
    matrix a Haar rotation is drawn from ``stream``.
    """
    if rotation is None:
        if stream is None:
            raise ParameterError("rotate_batch needs a rotation matrix or a stream")
        rotation = haar_rotation(batch.n, stream)
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (batch.n, batch.n):
        raise ParameterError(f"rotation has shape {rotation.shape}, expected ({batch.n}, {batch.n})")
    err = float(np.abs(rotation.T @ rotation - np.eye(batch.n)).max())
    if err > atol:
        raise ParameterError(f"rotation is not orthogonal (max |Q^T Q - I| = {err:.3g})")
    secret = None if batch.planted_secret is None else rotation @ batch.planted_secret
    stage = {"stage": "rotate", "orthogonality_error": err}
    return batch.derive(stage, x=batch.x @ rotation.T, planted_secret=secret)


def _marginal(batch: LweBatch) -> str:
    stages = [p.get("stage") for p in batch.provenance]
    return "rho-one" if "gaussianize" in stages else "other"


def _labels_in_period(batch: LweBatch, T: float) -> np.ndarray:
    if not T > 0:
        raise ParameterError(f"period must be positive, got {T}")
    y = batch.y
    if y.size and (y.min() < 0 or y.max() >= T):
        raise ContractError(f"labels must lie in [0, {T}); got range [{y.min()}, {y.max()}]")
    return np.where(y <= T / 2, 1.0, -1.0)


def to_ltf_instance(batch: LweBatch, T: float) -> LabeledDataset:
    """Binary labels ``+1`` if ``y <= T/2`` else ``-1`` for the halfspace problem."""
    labels = _labels_in_period(batch, T)
    stage = {"stage": "to_ltf_instance", "T": float(T)}
    return LabeledDataset(batch.x, labels, "ltf", _marginal(batch),
                          list(batch.provenance) + [stage], batch.planted_secret,
                          batch.hypothesis.value, float(T))


def to_relu_instance(batch: LweBatch, T: float) -> LabeledDataset:
    """Same labels as :func:`to_ltf_instance`; tagged for ReLU verification."""
    labels = _labels_in_period(batch, T)
    stage = {"stage": "to_relu_instance", "T": float(T)}
    return LabeledDataset(batch.x, labels, "relu", _marginal(batch),
                          list(batch.provenance) + [stage], batch.planted_secret,
                          batch.hypothesis.value, float(T))


def direct_hard_instance(n: int, secret, noise: float, T: float, m: int, hyp,
                         stream: RandomStream, kind: str = "ltf") -> LabeledDataset:
    """Sample the terminal Gaussian-cLWE LTF instance directly.

    ``x ~ D_{R^n,1}``; under the alternative ``y = mod_T(<x, s> + z)`` with
    ``z ~ D_{R, noise}`` (``noise = 0`` gives exact labels), under the null
    ``y ~ U[0, T)``. Labels are ``+1`` iff ``y <= T/2``.
    """
    hyp = as_hypothesis(hyp)
    secret = np.asarray(secret, dtype=float)
    if secret.shape != (n,):
        raise ParameterError(f"secret has shape {secret.shape}, expected ({n},)")
    if not math.isclose(float(np.linalg.norm(secret)), 1.0, abs_tol=1e-9):
        raise ParameterError("secret must be a unit vector")
    if not 0 < T < 1:
        raise ParameterError(f"period T must lie in (0, 1), got {T}")
    if noise < 0:
        raise ParameterError(f"noise width must be non-negative, got {noise}")
    if kind not in ("ltf", "relu"):
        raise ParameterError(f"unknown instance kind {kind!r}")
    m = int(m)
    xs = np.empty((m, n))
    labels = np.empty(m)
    for ci, a, b in _chunks(m):
        sub = stream.substream(ci)
        x = sample_continuous_gaussian(1.0, n, sub, b - a)
        if hyp is Hypothesis.ALTERNATIVE:
            u = x @ secret
            if noise > 0:
                u = u + sample_continuous_gaussian(noise, 1, sub, b - a)[:, 0]
            y = mod_reduce(T, u)
        else:
            y = mod_reduce(T, sub.rng.random(b - a) * T)
        xs[a:b] = x
        labels[a:b] = np.where(y <= T / 2, 1.0, -1.0)
    stage = {"stage": "direct_hard_instance", "n": n, "noise": float(noise), "T": float(T),
             "hypothesis": hyp.value}
    return LabeledDataset(xs, labels, kind, "rho-one", [stage], secret.copy(), hyp.value, float(T))


def desk_lwe_spec(plan: ReductionPlan, m: int, noise: Optional[float] = None) -> LweSpec:
    """Integer LWE matching the plan: uniform Z_q samples, k-sparse secret,
    discrete Gaussian noise of width ``plan.lwe_noise`` unless overridden."""
    return LweSpec(
        m=int(m),
        sample_dist=DistributionDescriptor.box(plan.q, plan.n, integer=True),
        secret_dist=DistributionDescriptor.sparse(plan.n, plan.k),
        noise_dist=DistributionDescriptor.discrete(plan.lwe_noise if noise is None else noise, 1),
        modulus=plan.q,
    )


def apply_stages(batch: LweBatch, plan: ReductionPlan, stream: RandomStream,
                 stages=STAGES) -> LweBatch:
    """Run the named stages in order; each gets its own substream."""
    for name in stages:
        if name not in STAGES:
            raise ParameterError(f"unknown stage {name!r}; choose from {', '.join(STAGES)}")
        sub = stream.substream(10 + STAGES.index(name))
        if name == "widen":
            batch = widen_noise(batch, plan.widen_extra, sub)
        elif name == "continuize":
            batch = continuize_samples(batch, plan.smoothing, sub)
        elif name == "gaussianize":
            batch = gaussianize(batch, plan, sub)
        else:
            batch = rotate_batch(batch, stream=sub)
    return batch


def run_pipeline(plan: ReductionPlan, m: int, hyp, stream: RandomStream,
                 disclose_secret: bool = True, kind: str = "ltf") -> LabeledDataset:
    """Generate integer LWE and push it through the whole chain."""
    batch = gen_lwe(desk_lwe_spec(plan, m), hyp, disclose_secret, stream.substream(1))
    batch = apply_stages(batch, plan, stream.substream(2))
    make = to_ltf_instance if kind == "ltf" else to_relu_instance
    # alpha and T agree up to rounding; use the modulus the labels live on
    T = batch.modulus if math.isclose(batch.modulus, plan.T, rel_tol=1e-12) else plan.T
    return make(batch, T)
