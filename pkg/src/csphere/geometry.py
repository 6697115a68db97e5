"""Points, samplers and quadrature on the complex sphere and the weighted disk.

The sphere S^d(C) is the unit sphere of C^n, n = (d+1)/2, with d odd.  Its
normalized invariant measure pushes forward, under z -> <z, pole>, to the
disk measure (alpha+1)/pi (1-|w|^2)^alpha dA with alpha = n-2, which is what
the disk rules integrate.  For d = 3 the sphere itself carries an exact
tensor rule in Hopf-type coordinates

    z1 = sqrt(v) e^{i a},  z2 = sqrt(1-v) e^{i b},   v uniform on [0, 1],

so monomial integrals reduce to Gauss-Legendre in u = 2v - 1 times uniform
angular grids.  Higher d falls back to Monte Carlo, explicitly flagged.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "SphereContext",
    "SpherePoint",
    "RandomSource",
    "DiskQuadrature",
    "SphereQuadrature",
    "build_disk_rule",
    "build_sphere_rule",
    "zonal_integral",
    "sample_real_sphere",
    "sample_complex_sphere",
    "discrete_lp_norm",
    "sup_point_set",
]


@dataclass(frozen=True)
class SphereContext:
    """Fixes the sphere: topological dimension d (odd, >= 3), complex
    dimension n = (d+1)/2, disk weight exponent alpha = n-2."""

    d: int

    def __post_init__(self):
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError("topological dimension d must be odd and >= 3")

    @property
    def n(self) -> int:
        return (self.d + 1) // 2

    @property
    def alpha(self) -> float:
        return float(self.n - 2)


@dataclass(frozen=True)
class SpherePoint:
    """A single point of S^d(C): n complex coordinates of unit length."""

    coords: tuple

    def __post_init__(self):
        nrm = sum(abs(c) ** 2 for c in self.coords)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"|z|^2 = {nrm!r} is not 1 within 1e-12")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=complex)


@dataclass(frozen=True)
class RandomSource:
    """Counter-based reproducible randomness.

    The same (seed, stream) always produces the same draw sequence, and
    substreams derived through split() are independent of execution order,
    so trials can run in any schedule and still reproduce bitwise.
    """

    seed: int
    stream: tuple = ()

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(ss))

    def split(self, *ids: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + tuple(int(i) for i in ids))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be a RandomSource or numpy Generator")


class DiskQuadrature:
    """Tensor rule on the closed unit disk for the normalized measure
    (alpha+1)/pi (1-|z|^2)^alpha dA: Gauss-Jacobi in u = 2r^2 - 1 times a
    uniform angular grid.

    Integrates every disk polynomial R_{p,q} with p + q <= exact_degree to
    its exact value (1 for (0,0), 0 otherwise), and products of two such
    polynomials of total degree within exact_degree.
    """

    def __init__(self, alpha, exact_degree, u_nodes, u_weights, n_angular):
        self.alpha = float(alpha)
        self.exact_degree = int(exact_degree)
        self.u_nodes = np.asarray(u_nodes, dtype=float)
        self.u_weights = np.asarray(u_weights, dtype=float)
        self.n_angular = int(n_angular)
        self._nodes = None

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular

    @property
    def radii(self) -> np.ndarray:
        return np.sqrt(0.5 * (1.0 + self.u_nodes))

    @property
    def node_count(self) -> int:
        return self.u_nodes.size * self.n_angular

    @property
    def nodes(self) -> np.ndarray:
        """Flattened complex nodes, radial index slowest."""
        if self._nodes is None:
            z = self.radii[:, None] * np.exp(1j * self.angles)[None, :]
            self._nodes = z.reshape(-1)
        return self._nodes

    @property
    def weights(self) -> np.ndarray:
        w = np.repeat(self.u_weights, self.n_angular) / self.n_angular
        return w

    def content_key(self) -> str:
        return f"disk:alpha={self.alpha:.12g}:degree={self.exact_degree}:count={self.node_count}"

    def content_hash(self) -> str:
        return hashlib.sha256(self.content_key().encode()).hexdigest()[:16]


def build_disk_rule(ctx: SphereContext, degree: int, max_nodes: int = 4_000_000) -> DiskQuadrature:
    """Disk rule exact for R_{p,q} with p + q <= degree under ctx's weight."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n_radial = degree // 2 + 1
    n_angular = degree + 1
    if n_radial * n_angular > max_nodes:
        raise RuntimeError(
            f"disk rule for degree {degree} needs {n_radial * n_angular} nodes,"
            f" above the cap {max_nodes}"
        )
    alpha = ctx.alpha
    u, w = roots_jacobi(n_radial, alpha, 0.0)
    w = w * (alpha + 1.0) / 2.0 ** (alpha + 1.0)
    return DiskQuadrature(alpha, degree, u, w, n_angular)


def zonal_integral(psi, ctx: SphereContext, rule: DiskQuadrature):
    """Integral of the zonal profile psi over the sphere, i.e. the weighted
    disk integral (n-1)/pi * integral of psi(z) (1-|z|^2)^(n-2) dA."""
    if abs(rule.alpha - ctx.alpha) > 1e-12:
        raise ValueError(
            f"rule weight alpha={rule.alpha} does not match context alpha={ctx.alpha}"
        )
    vals = np.asarray(psi(rule.nodes))
    return np.sum(rule.weights * vals)


class SphereQuadrature:
    """Quadrature on S^d(C).

    For d = 3 this is the exact tensor product rule described in the module
    docstring; exact_degree bounds the total degree of restricted monomials
    z^a conj(z)^b it integrates exactly.  For d >= 5 only a Monte Carlo rule
    is available and is flagged through monte_carlo / exact_degree = 0.
    """

    def __init__(self, ctx, exact_degree, u_nodes=None, u_weights=None,
                 n_ang1=None, n_ang2=None, mc_points=None):
        self.ctx = ctx
        self.exact_degree = int(exact_degree)
        self.monte_carlo = mc_points is not None
        self.u_nodes = None if u_nodes is None else np.asarray(u_nodes, dtype=float)
        self.u_weights = None if u_weights is None else np.asarray(u_weights, dtype=float)
        self.n_ang1 = n_ang1
        self.n_ang2 = n_ang2
        self._points = mc_points
        self._weights = None

    @property
    def grid_shape(self):
        if self.monte_carlo:
            return (len(self._points),)
        return (self.u_nodes.size, self.n_ang1, self.n_ang2)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.grid_shape))

    @property
    def angles1(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_ang1) / self.n_ang1

    @property
    def angles2(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_ang2) / self.n_ang2

    @property
    def points(self) -> np.ndarray:
        """(node_count, n) complex coordinates; tensor rules flatten with the
        radial index slowest, then the first angle, then the second."""
        if self._points is None:
            v = 0.5 * (1.0 + self.u_nodes)
            e1 = np.exp(1j * self.angles1)
            e2 = np.exp(1j * self.angles2)
            R, A1, A2 = self.grid_shape
            z1 = (np.sqrt(v)[:, None, None] * e1[None, :, None]) * np.ones((1, 1, A2))
            z2 = (np.sqrt(1.0 - v)[:, None, None] * e2[None, None, :]) * np.ones((1, A1, 1))
            pts = np.stack([z1.reshape(-1), z2.reshape(-1)], axis=1)
            self._points = pts
        return self._points

    @property
    def weights(self) -> np.ndarray:
        if self._weights is None:
            if self.monte_carlo:
                self._weights = np.full(len(self._points), 1.0 / len(self._points))
            else:
                R, A1, A2 = self.grid_shape
                w = np.repeat(self.u_weights, A1 * A2) / (A1 * A2)
                self._weights = w
        return self._weights

    def content_key(self) -> str:
        kind = "mc" if self.monte_carlo else "tensor"
        return (
            f"sphere:d={self.ctx.d}:kind={kind}:degree={self.exact_degree}"
            f":count={self.node_count}"
        )

    def content_hash(self) -> str:
        return hashlib.sha256(self.content_key().encode()).hexdigest()[:16]


def build_sphere_rule(ctx: SphereContext, degree: int, mc_nodes: int = 20000,
                      rng: RandomSource | None = None,
                      max_nodes: int = 50_000_000) -> SphereQuadrature:
    """Quadrature on S^d(C) exact to the requested degree.

    Only d = 3 supports the exact product rule.  Other dimensions return a
    Monte Carlo rule with exact_degree 0 and monte_carlo = True; callers that
    need exactness must check the flag.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if ctx.d != 3:
        if rng is None:
            rng = RandomSource(0)
        pts = sample_complex_sphere(ctx.n, mc_nodes, rng)
        return SphereQuadrature(ctx, 0, mc_points=pts)
    n_radial = degree // 2 + 1
    n_ang = degree + 1
    if n_radial * n_ang * n_ang > max_nodes:
        raise RuntimeError(
            f"sphere rule for degree {degree} needs {n_radial * n_ang * n_ang} nodes,"
            f" above the cap {max_nodes}"
        )
    u, w = np.polynomial.legendre.leggauss(n_radial)
    w = w / 2.0  # normalized du/2 measure
    return SphereQuadrature(ctx, degree, u_nodes=u, u_weights=w,
                            n_ang1=n_ang, n_ang2=n_ang)


def sample_real_sphere(dim: int, count: int, rng) -> np.ndarray:
    """(count, dim) i.i.d. uniform points on the real unit sphere S^{dim-1},
    drawn as normalized Gaussian vectors."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    g = _as_generator(rng).standard_normal((count, dim))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    # a numerically zero Gaussian vector has probability ~0; resampling would
    # break the counter-based reproducibility contract, so just guard
    nrm[nrm == 0.0] = 1.0
    return g / nrm


def sample_complex_sphere(n: int, count: int, rng) -> np.ndarray:
    """(count, n) i.i.d. uniform points on the unit sphere of C^n."""
    real = sample_real_sphere(2 * n, count, rng)
    return real[:, :n] + 1j * real[:, n:]


def discrete_lp_norm(values, weights, p) -> float:
    """Discrete L_p norm (sum w_j |v_j|^p)^(1/p); max |v_j| for p = inf.

    Weights are probability weights of the underlying rule.  Summation uses
    numpy's pairwise reduction, so results are stable across runs.
    """
    v = np.abs(np.asarray(values))
    if p == np.inf or p == "inf":
        return float(np.max(v))
    p = float(p)
    if p < 1.0:
        raise ValueError("p must be >= 1 or infinity")
    w = np.asarray(weights, dtype=float)
    if w.shape != v.shape:
        raise ValueError("values and weights must have matching shapes")
    if p == 1.0:
        return float(np.sum(w * v))
    if p == 2.0:
        return float(np.sqrt(np.sum(w * v * v)))
    return float(np.sum(w * v ** p) ** (1.0 / p))


def sup_point_set(ctx: SphereContext, rule: SphereQuadrature, rng,
                  factor: int = 4) -> np.ndarray:
    """Grid for sup-norm estimates: the rule's nodes plus uniform random
    points, at least `factor` times the rule's node count in total."""
    pts = rule.points
    extra = max(0, (factor - 1) * len(pts))
    if extra == 0:
        return pts
    rand = sample_complex_sphere(ctx.n, extra, rng)
    return np.concatenate([pts, rand], axis=0)
