"""Seeded samplers and exact density evaluators.

Covers discrete Gaussians on shifted lattices, continuous Gaussians, the
expanded and collapsed torus Gaussians, uniform spheres and boxes, and
sparse ternary secrets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    GaussianScale,
    ScaleLike,
    ShiftedLattice,
    as_scale,
    lattice_mass,
    mod_reduce,
    truncation_radius,
)
from .errors import DomainError, ParameterError
from .streams import RandomStream

# rows * window cells per inverse-CDF chunk; bounds peak memory to ~100 MB
_CDF_CELLS = 4_000_000

KINDS = (
    "continuous-gaussian",
    "discrete-gaussian",
    "uniform-box",
    "uniform-sphere",
    "sparse-secret",
    "expanded",
    "collapsed",
)


@dataclass(frozen=True)
class DistributionDescriptor:
    """Names one of the distributions used by LWE instances.

    ``integer`` only matters for ``uniform-box`` (U(Z_q^n) vs U(R_q^n)).
    """

    kind: str
    n: int = 1
    sigma: Optional[float] = None
    spacing: float = 1.0
    offset: float = 0.0
    q: Optional[float] = None
    k: Optional[int] = None
    integer: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}")
        if int(self.n) < 1:
            raise ParameterError("dimension must be >= 1")
        if self.kind in ("continuous-gaussian", "discrete-gaussian", "expanded", "collapsed"):
            GaussianScale(self.sigma if self.sigma is not None else -1.0)
        if self.kind == "discrete-gaussian" and not self.spacing > 0:
            raise ParameterError("lattice spacing must be positive")
        if self.kind == "uniform-box" and not (self.q is not None and self.q > 0):
            raise ParameterError("uniform-box needs a positive q")
        if self.kind == "sparse-secret" and not (self.k is not None and 1 <= self.k <= self.n):
            raise ParameterError(f"sparse-secret needs 1 <= k <= n, got k={self.k}, n={self.n}")

    # convenience constructors
    @classmethod
    def gaussian(cls, sigma: float, n: int = 1) -> "DistributionDescriptor":
        return cls("continuous-gaussian", n=n, sigma=sigma)

    @classmethod
    def discrete(cls, sigma: float, n: int = 1, spacing: float = 1.0,
                 offset: float = 0.0) -> "DistributionDescriptor":
        return cls("discrete-gaussian", n=n, sigma=sigma, spacing=spacing, offset=offset)

    @classmethod
    def box(cls, q: float, n: int, integer: bool = False) -> "DistributionDescriptor":
        return cls("uniform-box", n=n, q=q, integer=integer)

    @classmethod
    def sphere(cls, n: int) -> "DistributionDescriptor":
        return cls("uniform-sphere", n=n)

    @classmethod
    def sparse(cls, n: int, k: int) -> "DistributionDescriptor":
        return cls("sparse-secret", n=n, k=k)

    @property
    def integer_valued(self) -> bool:
        if self.kind == "uniform-box":
            return self.integer
        if self.kind == "sparse-secret":
            return True
        if self.kind == "discrete-gaussian":
            return float(self.spacing).is_integer() and float(self.offset).is_integer()
        return False

    @property
    def fixed_norm(self) -> Optional[float]:
        """The common l2 norm of every support point, when there is one."""
        if self.kind == "sparse-secret":
            return math.sqrt(self.k)
        if self.kind == "uniform-sphere":
            return 1.0
        return None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


# ----------------------------------------------------------------------------
# discrete Gaussians
# ----------------------------------------------------------------------------

def discrete_gaussian_coset(sigma: float, spacing: float, offsets, rng: np.random.Generator,
                            tol: float = 1e-12) -> np.ndarray:
    """Draw one point of ``D_{spacing Z + offset, sigma}`` for every offset.

    Inverse CDF over a truncated window. The window radius makes the
    excluded mass below ``tol`` relative to the coset's total mass.
    """
    offsets = np.asarray(offsets, dtype=float)
    shape = offsets.shape
    c = np.mod(offsets.ravel(), spacing)
    c = np.where(c >= spacing, 0.0, c)
    # every coset has a point within spacing/2 of 0, so its mass is at least this
    min_mass = math.exp(-math.pi * (spacing / (2 * sigma)) ** 2) / sigma
    radius = truncation_radius(sigma, spacing, tol * min_mass)
    half = int(math.ceil(radius / spacing)) + 1
    js = spacing * np.arange(-half, half + 1, dtype=float)
    width = js.size
    out = np.empty(c.size)
    rows = max(1, _CDF_CELLS // width)
    for start in range(0, c.size, rows):
        cc = c[start:start + rows]
        pts = js[None, :] + cc[:, None]
        cdf = np.exp(-math.pi * (pts / sigma) ** 2)
        np.cumsum(cdf, axis=1, out=cdf)
        u = rng.random(cc.size) * cdf[:, -1]
        idx = np.minimum((cdf < u[:, None]).sum(axis=1), width - 1)
        out[start:start + rows] = pts[np.arange(cc.size), idx]
    return out.reshape(shape)


def sample_discrete_gaussian(scale: ScaleLike, lattice: ShiftedLattice, stream: RandomStream,
                             size: Optional[int] = None):
    """Sample ``D_{T Z + y, sigma}`` on the (product) lattice.

    Returns a float for a 1-D lattice without ``size``; otherwise an array of
    shape ``(size,)`` or ``(size, dimension)``.
    """
    sigma = as_scale(scale).sigma
    n = int(lattice.dimension)
    count = 1 if size is None else int(size)
    offs = np.full((count, n), float(lattice.offset))
    draws = discrete_gaussian_coset(sigma, lattice.spacing, offs, stream.rng)
    if size is None:
        return float(draws[0, 0]) if n == 1 else draws[0]
    return draws[:, 0] if n == 1 else draws


def discrete_gaussian_pmf(scale: ScaleLike, lattice: ShiftedLattice, u, tol: float = 1e-12):
    sigma = as_scale(scale).sigma
    mass = lattice_mass(sigma, ShiftedLattice(lattice.spacing, lattice.offset, 1), tol)
    u = np.asarray(u, dtype=float)
    vals = np.exp(-math.pi * (u / sigma) ** 2) / sigma
    vals = np.where(lattice.contains(u), vals, 0.0)
    return vals / mass


# ----------------------------------------------------------------------------
# continuous and torus Gaussians
# ----------------------------------------------------------------------------

def sample_continuous_gaussian(scale: ScaleLike, n: int, stream: RandomStream,
                               size: Optional[int] = None) -> np.ndarray:
    """``D_{R^n, sigma}``: i.i.d. normals with standard deviation sigma/sqrt(2 pi)."""
    if int(n) < 1:
        raise ParameterError("dimension must be >= 1")
    std = as_scale(scale).std
    shape = (n,) if size is None else (int(size), n)
    return stream.rng.normal(0.0, std, size=shape)


def sample_expanded(scale: ScaleLike, n: int, stream: RandomStream, size: int) -> np.ndarray:
    """Two-stage draw: ``w ~ U([0,1)^n)`` then a point of ``D_{Z^n + w, sigma}``."""
    sigma = as_scale(scale).sigma
    w = stream.rng.random((int(size), n))
    return discrete_gaussian_coset(sigma, 1.0, w, stream.rng)


def sample_collapsed(scale: ScaleLike, n: int, stream: RandomStream, size: int) -> np.ndarray:
    return mod_reduce(1.0, sample_continuous_gaussian(scale, n, stream, size))


def _theta_window(sigma: float, tol: float) -> np.ndarray:
    radius = truncation_radius(sigma, 1.0, tol)
    half = int(math.ceil(radius)) + 1
    return np.arange(-half, half + 1, dtype=float)


def wrapped_density(scale: ScaleLike, w, tol: float = 1e-12) -> np.ndarray:
    """``sum_k rho_sigma(w + k)`` elementwise: the 1-D collapsed density.

    Unlike :func:`density_collapsed` this accepts any real ``w`` (periodic).
    """
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    sigma = as_scale(scale).sigma
    w = np.asarray(w, dtype=float)
    ks = _theta_window(sigma, tol)
    flat = np.mod(w.ravel(), 1.0)
    out = np.empty(flat.size)
    rows = max(1, _CDF_CELLS // ks.size)
    for start in range(0, flat.size, rows):
        pts = flat[start:start + rows, None] + ks[None, :]
        out[start:start + rows] = np.exp(-math.pi * (pts / sigma) ** 2).sum(axis=1) / sigma
    return out.reshape(w.shape)


def _as_points(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return t.reshape(1) if t.ndim == 0 else t


def _collapse_result(vals: np.ndarray, t_in):
    return float(vals) if np.ndim(vals) == 0 else vals


def log_density_expanded(scale: ScaleLike, t, tol: float = 1e-12):
    sigma = as_scale(scale).sigma
    t = _as_points(t)
    logs = -math.pi * (t / sigma) ** 2 - math.log(sigma) - np.log(wrapped_density(sigma, t, tol))
    return logs.sum(axis=-1)


def density_expanded(scale: ScaleLike, t, tol: float = 1e-12):
    """Density of the expanded Gaussian at ``t`` (last axis = coordinates)."""
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    vals = np.exp(log_density_expanded(scale, t, tol))
    return _collapse_result(vals, t)


def density_collapsed(scale: ScaleLike, w, tol: float = 1e-12):
    """Density of ``mod_1(x)``, ``x ~ D_{R^n, sigma}``, at ``w`` in ``[0,1)^n``."""
    if not tol > 0:
        raise ParameterError(f"tol must be positive, got {tol}")
    w = _as_points(w)
    if np.any(w < 0) or np.any(w >= 1):
        raise DomainError("collapsed density is defined on the unit box [0, 1)^n")
    vals = np.prod(wrapped_density(scale, w, tol), axis=-1)
    return _collapse_result(vals, w)


def density_ratio_f(scale: ScaleLike, t, tol: float = 1e-12):
    """Rejection weight: standard ``D_{R^n,1}`` density over the density of
    the expanded Gaussian of width ``sigma_tilde`` rescaled by ``1/sigma_tilde``.
    """
    sigma = as_scale(scale).sigma
    t = _as_points(t)
    n = t.shape[-1]
    log_target = -math.pi * np.sum(t * t, axis=-1)
    # density of X / s at t is s^n times the density of X at s t
    log_proposal = n * math.log(sigma) + log_density_expanded(sigma, sigma * t, tol)
    return _collapse_result(np.exp(log_target - log_proposal), t)


def theta_derivative_bound(sigma: float) -> float:
    """Bound on ``|d/dw sum_k rho_sigma(w+k)|`` from its Fourier series."""
    total, j = 0.0, 1
    while True:
        term = j * math.exp(-math.pi * sigma**2 * j * j)
        total += term
        if term < 1e-300 or (j > 3 and term < 1e-18 * total):
            break
        j += 1
    return 4.0 * math.pi * total


def theta_bounds(scale: ScaleLike, tol: float = 1e-12, grid: int = 4096) -> tuple[float, float]:
    """Rigorous lower and upper bounds on ``sum_k rho_sigma(w + k)`` over all w.

    Grid extremes widened by a Lipschitz slack for the grid spacing and the
    truncation error.
    """
    sigma = as_scale(scale).sigma
    w = np.arange(grid, dtype=float) / grid
    vals = wrapped_density(sigma, w, tol)
    slack = theta_derivative_bound(sigma) * (0.5 / grid) + tol
    return float(vals.min()) - slack, float(vals.max()) + slack


def max_density_ratio(scale: ScaleLike, n: int, tol: float = 1e-12, grid: int = 4096) -> float:
    """Rigorous upper bound on ``sup_t f(t)`` for the rejection weight.

    ``f`` factorises into wrapped densities of ``mod_1(sigma t_i)``, so the
    bound is the per-coordinate upper bound raised to the n-th power.
    """
    if int(n) < 1:
        raise ParameterError("dimension must be >= 1")
    return theta_bounds(scale, tol, grid)[1] ** int(n)


# ----------------------------------------------------------------------------
# secrets, spheres, boxes
# ----------------------------------------------------------------------------

def sample_sparse_secret(n: int, k: int, stream: RandomStream, size: Optional[int] = None) -> np.ndarray:
    """Uniform draw from ``{s in {0, +-1}^n : |s|_1 = k}``."""
    if not 1 <= int(k) <= int(n):
        raise ParameterError(f"need 1 <= k <= n, got k={k}, n={n}")
    count = 1 if size is None else int(size)
    out = np.zeros((count, n))
    rng = stream.rng
    for row in out:
        pos = rng.choice(n, size=k, replace=False)
        row[pos] = rng.choice((-1.0, 1.0), size=k)
    return out[0] if size is None else out


def sample_unit_sphere(n: int, stream: RandomStream, size: Optional[int] = None) -> np.ndarray:
    if int(n) < 1:
        raise ParameterError("dimension must be >= 1")
    shape = (n,) if size is None else (int(size), n)
    g = stream.rng.standard_normal(shape)
    norms = np.linalg.norm(g, axis=-1, keepdims=True)
    return g / norms


def sample_uniform_box(q: float, n: int, stream: RandomStream, size: int,
                       integer: bool = False) -> np.ndarray:
    if integer:
        return stream.rng.integers(0, int(q), size=(int(size), n)).astype(float)
    return mod_reduce(q, stream.rng.random((int(size), n)) * q)


def draw(desc: DistributionDescriptor, size: int, stream: RandomStream) -> np.ndarray:
    """Draw ``size`` points from ``desc``; always returns shape ``(size, n)``."""
    n, kind = desc.n, desc.kind
    if kind == "continuous-gaussian":
        return sample_continuous_gaussian(desc.sigma, n, stream, size)
    if kind == "discrete-gaussian":
        lat = ShiftedLattice(desc.spacing, desc.offset, n)
        out = sample_discrete_gaussian(desc.sigma, lat, stream, size)
        return out.reshape(int(size), n)
    if kind == "uniform-box":
        return sample_uniform_box(desc.q, n, stream, size, desc.integer)
    if kind == "uniform-sphere":
        return sample_unit_sphere(n, stream, size)
    if kind == "sparse-secret":
        return sample_sparse_secret(n, desc.k, stream, size)
    if kind == "expanded":
        return sample_expanded(desc.sigma, n, stream, size)
    if kind == "collapsed":
        return sample_collapsed(desc.sigma, n, stream, size)
    raise ParameterError(f"unknown distribution kind {kind!r}")


__all__ = [
    "DistributionDescriptor",
    "density_collapsed",
    "density_expanded",
    "density_ratio_f",
    "discrete_gaussian_coset",
    "discrete_gaussian_pmf",
    "draw",
    "log_density_expanded",
    "max_density_ratio",
    "sample_collapsed",
    "sample_continuous_gaussian",
    "sample_discrete_gaussian",
    "sample_expanded",
    "sample_sparse_secret",
    "sample_uniform_box",
    "sample_unit_sphere",
    "theta_bounds",
    "theta_derivative_bound",
    "wrapped_density",
]
