"""Generic LWE instances under either hypothesis."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .core import Modulus, as_modulus, mod_reduce
from .errors import ParameterError
from .samplers import DistributionDescriptor, draw
from .streams import RandomStream

CHUNK = 65_536


class Hypothesis(str, Enum):
    ALTERNATIVE = "alternative"
    NULL = "null"


def as_hypothesis(h) -> Hypothesis:
    return h if isinstance(h, Hypothesis) else Hypothesis(str(h))


def secret_hash(secret: Optional[np.ndarray]) -> Optional[str]:
    if secret is None:
        return None
    arr = np.ascontiguousarray(np.asarray(secret, dtype="<f8"))
    return hashlib.sha256(arr.tobytes()).hexdigest()


@dataclass(frozen=True)
class LweSpec:
    m: int
    sample_dist: DistributionDescriptor
    secret_dist: DistributionDescriptor
    noise_dist: DistributionDescriptor
    modulus: Modulus

    def __post_init__(self):
        if int(self.m) < 0:
            raise ParameterError("sample count must be non-negative")
        if self.sample_dist.n != self.secret_dist.n:
            raise ParameterError(
                f"sample dimension {self.sample_dist.n} != secret dimension {self.secret_dist.n}")
        if self.noise_dist.n != 1:
            raise ParameterError("noise distribution must be one-dimensional")
        object.__setattr__(self, "modulus", as_modulus(self.modulus))

    @property
    def n(self) -> int:
        return self.sample_dist.n

    def label_support(self) -> str:
        """``"integer"`` for Z_q, ``"torus"`` for R_q.

        Raises when the alternative's label support is something else, since
        the null hypothesis could not then be sampled faithfully.
        """
        q = self.modulus.q
        if (self.sample_dist.integer_valued and self.secret_dist.integer_valued
                and self.noise_dist.integer_valued and float(q).is_integer()):
            return "integer"
        if self.noise_dist.kind == "continuous-gaussian":
            return "torus"
        if self.sample_dist.kind in ("continuous-gaussian", "expanded") or (
                self.sample_dist.kind == "uniform-box" and not self.sample_dist.integer):
            return "torus"
        raise ParameterError("cannot characterise the label support of this LWE spec")

    def to_dict(self) -> dict:
        return {
            "m": int(self.m),
            "sample_dist": self.sample_dist.to_dict(),
            "secret_dist": self.secret_dist.to_dict(),
            "noise_dist": self.noise_dist.to_dict(),
            "q": self.modulus.q,
        }


@dataclass
class LweBatch:
    """``m`` samples ``(x, y)`` with ``y`` on the torus ``[0, q)``.

    ``secret_norm`` records the common norm of the secret family (needed by
    the continuization step); ``planted_secret`` is the current effective
    secret and is only kept when disclosure was requested.
    """

    x: np.ndarray
    y: np.ndarray
    hypothesis: Hypothesis
    modulus: float
    planted_secret: Optional[np.ndarray] = None
    secret_norm: Optional[float] = None
    provenance: list = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.hypothesis = as_hypothesis(self.hypothesis)
        if self.x.ndim != 2 or self.y.shape != (self.x.shape[0],):
            raise ParameterError("x must be (m, n) and y must be (m,)")

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def derive(self, stage: dict, **changes) -> "LweBatch":
        """Copy with ``changes`` applied and ``stage`` appended to provenance."""
        return replace(self, provenance=list(self.provenance) + [stage], **changes)


def gen_lwe(spec: LweSpec, hyp, disclose_secret: bool, stream: RandomStream) -> LweBatch:
    """Generate one batch of ``LWE(m, D_sample, D_secret, D_noise, mod_q)``.

    The secret is drawn once for the whole batch. Under the null hypothesis
    labels are uniform on the alternative's label support (Z_q or R_q),
    independent of the samples. The secret hash is always recorded in
    provenance, disclosed or not.
    """
    hyp = as_hypothesis(hyp)
    support = spec.label_support()
    q = spec.modulus.q
    m, n = int(spec.m), spec.n

    secret = draw(spec.secret_dist, 1, stream.substream(0))[0]
    xs = np.empty((m, n))
    ys = np.empty(m)
    for ci, start in enumerate(range(0, m, CHUNK)):
        stop = min(m, start + CHUNK)
        sub = stream.substream(1, ci)
        x = draw(spec.sample_dist, stop - start, sub)
        if hyp is Hypothesis.ALTERNATIVE:
            z = draw(spec.noise_dist, stop - start, sub)[:, 0]
            y = mod_reduce(q, x @ secret + z)
        elif support == "integer":
            y = sub.rng.integers(0, int(q), size=stop - start).astype(float)
        else:
            y = mod_reduce(q, sub.rng.random(stop - start) * q)
        xs[start:stop] = x
        ys[start:stop] = y

    alt = hyp is Hypothesis.ALTERNATIVE
    stage = {
        "stage": "gen_lwe",
        "spec": spec.to_dict(),
        "hypothesis": hyp.value,
        "label_support": support,
        "secret_hash": secret_hash(secret) if alt else None,
    }
    if spec.secret_dist.kind == "sparse-secret":
        stage["note"] = "sparse-secret LWE generated directly (no standard-to-sparse reduction)"
    return LweBatch(
        x=xs,
        y=ys,
        hypothesis=hyp,
        modulus=q,
        planted_secret=secret.copy() if (alt and disclose_secret) else None,
        secret_norm=spec.secret_dist.fixed_norm,
        provenance=[stage],
    )


def residual_stats(batch: LweBatch, secret) -> tuple[float, float]:
    """Circular mean and standard deviation of ``mod_q(y - <s, x>)`` on R_q."""
    secret = np.asarray(secret, dtype=float)
    if secret.shape != (batch.n,):
        raise ParameterError(f"secret has shape {secret.shape}, expected ({batch.n},)")
    if batch.m == 0:
        raise ParameterError("empty batch")
    q = batch.modulus
    resid = mod_reduce(q, batch.y - batch.x @ secret)
    ang = 2 * math.pi * resid / q
    c, s = np.cos(ang).mean(), np.sin(ang).mean()
    rbar = math.hypot(c, s)
    mean = (math.atan2(s, c) % (2 * math.pi)) * q / (2 * math.pi)
    std = math.sqrt(-2 * math.log(rbar)) * q / (2 * math.pi) if rbar > 0 else math.inf
    return float(mean), float(std)
