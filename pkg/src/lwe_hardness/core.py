"""Numeric kernels: the rho Gaussian kernel, shifted-lattice sums, torus
reduction and Haar rotations.

Widths follow the rho convention throughout: ``rho_sigma(x) = sigma^-n *
exp(-pi |x|^2 / sigma^2)``, so the continuous law of width ``sigma`` has
per-coordinate standard deviation ``sigma / sqrt(2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError
from .streams import RandomStream

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianScale:
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"Gaussian width must be positive, got {self.sigma}")

    @property
    def std(self) -> float:
        """Per-coordinate standard deviation of the continuous law."""
        return self.sigma / SQRT_2PI


@dataclass(frozen=True)
class ShiftedLattice:
    """The product lattice ``(spacing * Z + offset)^dimension``."""

    spacing: float
    offset: float = 0.0
    dimension: int = 1

    def __post_init__(self):
        if not self.spacing > 0:
            raise ParameterError(f"lattice spacing must be positive, got {self.spacing}")
        if int(self.dimension) < 1:
            raise ParameterError("lattice dimension must be >= 1")

    def contains(self, u, atol: float = 1e-9) -> np.ndarray:
        k = (np.asarray(u, dtype=float) - self.offset) / self.spacing
        return np.abs(k - np.round(k)) * self.spacing <= atol


@dataclass(frozen=True)
class Modulus:
    q: float

    def __post_init__(self):
        if not (self.q > 0 and math.isfinite(self.q)):
            raise ParameterError(f"modulus must be positive, got {self.q}")


ScaleLike = Union[GaussianScale, float]
ModulusLike = Union[Modulus, float]


def as_scale(scale: ScaleLike) -> GaussianScale:
    return scale if isinstance(scale, GaussianScale) else GaussianScale(float(scale))


def as_modulus(q: ModulusLike) -> Modulus:
    return q if isinstance(q, Modulus) else Modulus(float(q))


def rho(scale: ScaleLike, x) -> np.ndarray | float:
    """Evaluate ``rho_sigma`` on a vector (last axis) or a batch of vectors.

    A scalar ``x`` is treated as a point of R^1.
    """
    sigma = as_scale(scale).sigma
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return float(math.exp(-math.pi * (float(x) / sigma) ** 2) / sigma)
    n = x.shape[-1]
    sq = np.sum(x * x, axis=-1)
    out = sigma ** (-n) * np.exp(-math.pi * sq / sigma**2)
    return float(out) if np.ndim(out) == 0 else out


def lattice_tail_bound(sigma: float, spacing: float, radius: float) -> float:
    """Upper bound on the rho mass of a 1-D shifted lattice outside [-R, R].

    Each side is at most ``rho(R) + (1/spacing) * int_R^inf rho``, and the
    Gaussian tail integral is at most ``rho(R) sigma^2 / (2 pi R)``.
    """
    r = float(radius)
    edge = math.exp(-math.pi * (r / sigma) ** 2) / sigma
    return 2.0 * edge * (1.0 + sigma**2 / (2.0 * math.pi * r * spacing))


def truncation_radius(sigma: float, spacing: float, tol: float) -> float:
    """Smallest radius (on a sigma/8 ladder) whose tail bound is below ``tol``."""
    r = sigma * math.sqrt(max(math.log(max(sigma, 1.0) / tol), 1.0) / math.pi)
    step = sigma / 8.0
    while lattice_tail_bound(sigma, spacing, r) >= tol:
        r += step
    return r


def _lattice_mass_1d(sigma: float, spacing: float, offset: float, tol: float) -> float:
    radius = truncation_radius(sigma, spacing, tol)
    c = offset % spacing
    lo = math.ceil((-radius - c) / spacing)
    hi = math.floor((radius - c) / spacing)
    pts = spacing * np.arange(lo, hi + 1, dtype=float) + c
    vals = np.exp(-math.pi * (pts / sigma) ** 2) / sigma
    return math.fsum(vals.tolist())


def lattice_mass(scale: ScaleLike, lattice: ShiftedLattice, tol: float = 1e-12,
                 offset=None) -> float:
    """Sum of ``rho_sigma`` over a shifted product lattice, error below ``tol``.

    ``offset`` may override the lattice offset with a per-coordinate vector.
    """
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    sigma = as_scale(scale).sigma
    n = int(lattice.dimension)
    offs = np.broadcast_to(
        np.asarray(lattice.offset if offset is None else offset, dtype=float), (n,))
    if n == 1:
        return _lattice_mass_1d(sigma, lattice.spacing, float(offs[0]), tol)
    # per-coordinate tolerances chosen so the product error stays below tol
    rough = [_lattice_mass_1d(sigma, lattice.spacing, float(o), 1e-3) + 1e-3 for o in offs]
    total = 1.0
    for i, o in enumerate(offs):
        others = math.prod(rough[:i] + rough[i + 1:])
        total *= _lattice_mass_1d(sigma, lattice.spacing, float(o), tol / (n * max(others, 1.0) * 2))
    return total


def mod_reduce(q: ModulusLike, x) -> np.ndarray | float:
    """Coordinate-wise reduction into ``[0, q)``."""
    qv = as_modulus(q).q
    arr = np.asarray(x, dtype=float)
    r = np.mod(arr, qv)
    # np.mod can round tiny negatives up to exactly q
    r = np.where(r >= qv, 0.0, r)
    return float(r) if r.ndim == 0 else r


def haar_rotation(n: int, stream: RandomStream) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-fixed QR of a Gaussian matrix."""
    if int(n) < 1:
        raise ParameterError("dimension must be >= 1")
    g = stream.rng.standard_normal((n, n))
    qmat, rmat = np.linalg.qr(g)
    signs = np.sign(np.diag(rmat))
    signs[signs == 0] = 1.0
    return qmat * signs
