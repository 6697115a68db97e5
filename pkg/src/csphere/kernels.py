"""Zonal multiplier kernels and convolution.

A zonal kernel is a finite multiplier sequence lambda_0..lambda_K acting on
the level projectors: its profile on the closed unit disk is

    Psi(z) = sum_k lambda_k m_k(z),
    m_k(z) = sum_{p+q=k} dim H(p,q) * R_{p,q}^{(n-2)}(z),

which is real valued because the (p,q) and (q,p) terms pair into cosines.
Grouping by angular order m = |p-q| gives

    Psi(r e^{i t}) = sum_m G_m(u) r^m cos(m t),   u = 2 r^2 - 1,

where each G_m is a Jacobi series in u evaluated by upward recurrence, so a
degree-K kernel costs O(K^2) scalar recurrence steps, vectorized over the
radial nodes.  Convolution acts on Fourier data as plain multiplication by
lambda_k.
"""

from __future__ import annotations

import json
import warnings
from math import comb, fsum

import numpy as np

from .geometry import DiskQuadrature, SphereContext, build_disk_rule
from .specfun import (
    cesaro_sequence,
    chi_smooth,
    difference_table,
    jacobi_value_at_one,
)
from .spectral import SpectralFunction, bidegree_dim, eigenspace_dim, eigenvalue

__all__ = [
    "ZonalKernel",
    "projector_kernel",
    "cesaro_kernel",
    "vallee_poussin_kernel",
    "fractional_kernel_split",
    "fractional_tail_kernel",
    "kernel_lp_norm",
    "kernel_sup_norm",
    "convolve",
    "convolve_quadrature",
]


class ZonalKernel:
    """Finite multiplier sequence over the level projectors, evaluable as a
    univariate profile on the closed unit disk."""

    def __init__(self, ctx: SphereContext, multipliers):
        self.ctx = ctx
        lam = np.asarray(multipliers, dtype=float).copy()
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("multipliers must be a nonempty 1-d sequence")
        lam.setflags(write=False)
        self.lambdas = lam

    @property
    def degree(self) -> int:
        return self.lambdas.size - 1

    def multiplier(self, k: int) -> float:
        return float(self.lambdas[k]) if 0 <= k <= self.degree else 0.0

    def pole_value(self) -> float:
        """Psi(1) = sum lambda_k dim H_k, the reproducing-kernel diagonal."""
        dims = np.array([eigenspace_dim(k, self.ctx) for k in range(self.degree + 1)])
        return float(np.sum(self.lambdas * dims))

    # -- evaluation ---------------------------------------------------------

    def _angular_profiles(self, u: np.ndarray) -> np.ndarray:
        """Matrix G with rows m = 0..K: the radial factor of the cos(m t)
        component, including r^m, at radial points u = 2r^2 - 1."""
        alpha = self.ctx.alpha
        n = self.ctx.n
        K = self.degree
        u = np.asarray(u, dtype=float)
        r = np.sqrt(np.maximum(0.0, 0.5 * (1.0 + u)))
        G = np.zeros((K + 1, u.size))
        for m in range(K + 1):
            lmax = (K - m) // 2
            beta = float(m)
            acc = np.zeros_like(u)
            p_prev = np.zeros_like(u)
            p_cur = np.ones_like(u)
            for l in range(lmax + 1):
                lam = self.lambdas[2 * l + m]
                if lam != 0.0:
                    w = (1.0 if m == 0 else 2.0) * bidegree_dim(l + m, l, self.ctx)
                    acc = acc + (lam * w / jacobi_value_at_one(l, alpha)) * p_cur
                # advance the Jacobi recurrence to degree l+1
                nn = l + 1
                c = 2.0 * nn + alpha + beta
                if nn == 1:
                    p_next = 0.5 * (alpha - beta + (alpha + beta + 2.0) * u)
                else:
                    a1 = 2.0 * nn * (nn + alpha + beta) * (c - 2.0)
                    a2 = (c - 1.0) * (alpha * alpha - beta * beta)
                    a3 = (c - 2.0) * (c - 1.0) * c
                    a4 = 2.0 * (nn + alpha - 1.0) * (nn + beta - 1.0) * c
                    p_next = ((a2 + a3 * u) * p_cur - a4 * p_prev) / a1
                p_prev, p_cur = p_cur, p_next
            G[m] = acc * r ** m
        return G

    def eval_tensor(self, u: np.ndarray, angles: np.ndarray) -> np.ndarray:
        """Profile values on the tensor grid {r(u_i) e^{i t_j}}, shape
        (len(u), len(angles))."""
        G = self._angular_profiles(u)
        m = np.arange(self.degree + 1)
        C = np.cos(np.outer(m, np.asarray(angles, dtype=float)))
        return G.T @ C

    def eval(self, z) -> np.ndarray:
        """Profile values at arbitrary points of the closed disk."""
        za = np.atleast_1d(np.asarray(z, dtype=complex))
        r = np.abs(za)
        if np.any(r > 1.0 + 1e-12):
            raise ValueError("argument outside the closed unit disk")
        u = 2.0 * np.minimum(r, 1.0) ** 2 - 1.0
        t = np.angle(za)
        G = self._angular_profiles(u)
        out = G[0].copy()
        for m in range(1, self.degree + 1):
            out += G[m] * np.cos(m * t)
        return out if np.ndim(z) else float(out[0])

    # -- serialization --------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"d": self.ctx.d, "lambdas": list(map(float, self.lambdas))})

    @classmethod
    def from_json(cls, text: str) -> "ZonalKernel":
        payload = json.loads(text)
        return cls(SphereContext(payload["d"]), payload["lambdas"])


def projector_kernel(k: int, ctx: SphereContext) -> ZonalKernel:
    """Reproducing kernel of the eigenspace H_k: multiplier indicator at k."""
    if k < 0:
        raise ValueError("level must be nonnegative")
    lam = np.zeros(k + 1)
    lam[k] = 1.0
    return ZonalKernel(ctx, lam)


def cesaro_kernel(n: int, delta: float, ctx: SphereContext) -> ZonalKernel:
    """Cesaro kernel of order n and index delta: multipliers
    C_{n-m}^delta / C_n^delta for m <= n."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    cs = cesaro_sequence(n, delta)
    return ZonalKernel(ctx, cs[::-1] / cs[n])


def vallee_poussin_kernel(N: int, ctx: SphereContext, chi=None) -> ZonalKernel:
    """Delayed-mean kernel with smoothed multipliers chi_d(k / (2N)): acts as
    the identity on levels <= N and vanishes from level 2N on, with L1 norms
    bounded uniformly in N."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if chi is None:
        chi = chi_smooth(ctx.d)
    from fractions import Fraction
    lam = [float(chi.eval_exact(ctx.d, Fraction(k, 2 * N))) for k in range(2 * N + 1)]
    return ZonalKernel(ctx, lam)


def _abel_split_multipliers(lam: np.ndarray, N: int, s: int):
    """Exact summation-by-parts split of sum_{k=0}^N lam_k at difference
    order s+1:

        interior_i = sum_{k=i}^{N-s-1} D^{s+1}lam_k * C_{k-i}^s
        boundary_i = sum_{j=0}^{s}  D^j lam_{N-j} * C_{N-j-i}^j  (N-j >= i)

    whose sum reproduces lam_i for every i <= N.  The index ranges start the
    interior sum at k = 0 so the identity holds including level 0; all inner
    sums run through fsum and the integer Cesaro numbers are exact.
    """
    if N <= s + 1:
        raise ValueError(f"need N > s + 1 = {s + 1}")
    if len(lam) < N + 1:
        raise ValueError("multiplier sequence too short")
    tables = [difference_table(lam[: N + 1], j) for j in range(s + 2)]
    diffs = tables[s + 1]  # D^{s+1} lam_k, k = 0..N-s-1
    interior = np.zeros(N - s)
    for i in range(N - s):
        interior[i] = fsum(diffs[k] * comb(k - i + s, s) for k in range(i, N - s))
    boundary = np.zeros(N + 1)
    for i in range(N + 1):
        terms = []
        for j in range(s + 1):
            if N - j >= i:
                terms.append(tables[j][N - j] * comb(N - i, j))
        boundary[i] = fsum(terms)
    return interior, boundary


def fractional_kernel_split(N: int, gamma: float, ctx: SphereContext,
                            diff_order: int | None = None):
    """Abel-transform split of the truncated fractional kernel
    K_N = sum_{k=1}^N theta_k^{-gamma/2} M_k into an interior part (a Cesaro
    smoothed accumulation at index s = (d+1)/2) and a boundary part, such
    that the multipliers satisfy interior + boundary = K_N exactly.

    Returns (interior, boundary, truncated) as ZonalKernels.  diff_order
    overrides the number of Abel passes (default s + 1 = (d+3)/2).
    """
    if gamma <= 0:
        raise ValueError("order gamma must be positive")
    s = (ctx.d + 1) // 2
    order = (s + 1) if diff_order is None else int(diff_order)
    if order < 1:
        raise ValueError("difference order must be positive")
    if N <= order:
        raise ValueError(f"need N > {order}")
    lam = np.zeros(N + 1)
    for k in range(1, N + 1):
        lam[k] = eigenvalue(k, ctx) ** (-gamma / 2.0)
    interior, boundary = _abel_split_multipliers(lam, N, order - 1)
    return (
        ZonalKernel(ctx, interior),
        ZonalKernel(ctx, boundary),
        ZonalKernel(ctx, lam),
    )


def fractional_tail_kernel(N: int, M: int, gamma: float, ctx: SphereContext) -> ZonalKernel:
    """Difference of the interior split parts at truncations M and N
    (M > N).  Proxies the distance between the full fractional kernel and
    its interior approximation when M is taken well beyond N."""
    if M <= N:
        raise ValueError("need M > N")
    k1_m, _, _ = fractional_kernel_split(M, gamma, ctx)
    k1_n, _, _ = fractional_kernel_split(N, gamma, ctx)
    lam = k1_m.lambdas.copy()
    lam[: k1_n.lambdas.size] -= k1_n.lambdas
    return ZonalKernel(ctx, lam)


def kernel_lp_norm(kernel: ZonalKernel, p, rule: DiskQuadrature) -> float:
    """Zonal L_p norm via the weighted disk rule.

    For p = 1 the integrand |Psi| is not polynomial; a rule of exact degree
    at least twice the kernel degree is the recommended resolution, below
    which a warning is emitted.
    """
    if abs(rule.alpha - kernel.ctx.alpha) > 1e-12:
        raise ValueError("rule weight does not match the kernel's context")
    if p != np.inf and p < 1:
        raise ValueError("p must be >= 1 or infinity")
    if rule.exact_degree < 2 * kernel.degree:
        warnings.warn(
            f"disk rule degree {rule.exact_degree} is under-resolved for a"
            f" kernel of degree {kernel.degree}", stacklevel=2)
    if p == np.inf:
        return kernel_sup_norm(kernel)
    vals = np.abs(kernel.eval_tensor(rule.u_nodes, rule.angles))
    w = rule.u_weights[:, None] / rule.n_angular
    if p == 1:
        return float(np.sum(w * vals))
    return float(np.sum(w * vals ** p) ** (1.0 / p))


def kernel_sup_norm(kernel: ZonalKernel, oversample: int = 4) -> float:
    """Max of |Psi| over a dense tensor grid of the closed disk, including
    the boundary circle and the pole z = 1 where zonal kernels peak."""
    K = max(kernel.degree, 1)
    nu = oversample * (K + 1)
    u = np.cos(np.pi * np.arange(nu + 1) / nu)  # Chebyshev points, includes +-1
    angles = np.pi * np.arange(2 * oversample * (K + 1) + 1) / (oversample * (K + 1))
    vals = kernel.eval_tensor(u, angles)
    return float(np.max(np.abs(vals)))


def convolve(kernel: ZonalKernel, F: SpectralFunction) -> SpectralFunction:
    """Multiplier action: level-k coefficients scale by lambda_k.

    Levels of F above the kernel degree are annihilated; that truncation is
    flagged on the result.
    """
    if kernel.ctx != F.ctx:
        raise ValueError("kernel and function live on different spheres")
    factors = np.array([kernel.multiplier(k) for k in range(F.N + 1)])
    flags = F.flags
    if F.N > kernel.degree and any(
            np.any(F.level(k) != 0) for k in range(kernel.degree + 1, F.N + 1)):
        flags = flags + ("kernel-degree truncation",)
    return F.scale_levels(factors, flags=flags)


def convolve_quadrature(kernel: ZonalKernel, values_on_rule, rule, points) -> np.ndarray:
    """Direct quadrature realization of the convolution at given points:
    (f * kappa)(x) = sum_j w_j f(y_j) Psi(<x, y_j>).

    Cross-validates the multiplier action; cost scales with points x nodes.
    """
    pts = np.asarray(points, dtype=complex)
    ys = rule.points
    vals = np.asarray(values_on_rule, dtype=complex).reshape(-1)
    out = np.empty(len(pts), dtype=complex)
    for i, x in enumerate(pts):
        inner = ys @ np.conj(x)
        out[i] = np.sum(rule.weights * vals * kernel.eval(inner))
    return out
