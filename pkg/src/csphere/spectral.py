"""Spectral side of the Laplace-Beltrami operator on S^d(C): eigenvalues
theta_k = k(k+d-1), eigenspace dimensions through the bidegree refinement,
orthonormal bases built by Gram-Schmidt against a discrete inner product,
Fourier analysis/synthesis, and the fractional calculus of multipliers
theta_k^{+-gamma/2}.

Bases exist for d = 3, where the sphere carries an exact tensor rule.  The
two-torus action (z1, z2) -> (e^{ia} z1, e^{ib} z2) splits every eigenspace
into one-dimensional character slices (m1, m2), which makes the discrete
Gram matrix block diagonal: Gram-Schmidt then runs independently per
character on small radial problems.  Each basis function has the closed form

    Y(z) = g(v) e^{i(m1 xi1 + m2 xi2)},      v = |z1|^2,
    g(v) = v^{|m1|/2} (1-v)^{|m2|/2} * sum_b c_b v^b (1-v)^{l-b},

with l = (k - |m1| - |m2|)/2, and the coefficients c are what the cache
stores.
"""

from __future__ import annotations

import json
from math import comb

import numpy as np

from .geometry import RandomSource, SphereContext, SphereQuadrature, build_sphere_rule
from .specfun import JacobiParams, jacobi_sequence

__all__ = [
    "eigenvalue",
    "bidegree_dim",
    "eigenspace_dim",
    "space_dim",
    "SpectralFunction",
    "BasisSet",
    "build_orthonormal_basis",
    "analyze",
    "synthesize",
    "fractional_derivative",
    "fractional_integral",
    "sobolev_sample",
]

_GRAM_TOL = 1e-10


def eigenvalue(k: int, ctx: SphereContext) -> float:
    """Laplace-Beltrami eigenvalue theta_k = k (k + d - 1)."""
    if k < 0:
        raise ValueError("level must be nonnegative")
    return float(k * (k + ctx.d - 1))


def bidegree_dim(p: int, q: int, ctx: SphereContext) -> int:
    """Dimension of the bidegree-(p, q) harmonic space H(p, q)."""
    if p < 0 or q < 0:
        raise ValueError("bidegree indices must be nonnegative")
    n = ctx.n
    num = (p + q + n - 1) * comb(p + n - 2, p) * comb(q + n - 2, q)
    if num % (n - 1):
        raise AssertionError("bidegree dimension is not integral")
    return num // (n - 1)


def eigenspace_dim(k: int, ctx: SphereContext) -> int:
    """dim H_k = sum of bidegree dimensions over p + q = k."""
    if k < 0:
        raise ValueError("level must be nonnegative")
    return sum(bidegree_dim(p, k - p, ctx) for p in range(k + 1))


def space_dim(N: int, ctx: SphereContext) -> int:
    """Dimension of the polynomial space spanned by levels 0..N."""
    return sum(eigenspace_dim(k, ctx) for k in range(N + 1))


class SpectralFunction:
    """Fourier data of a polynomial on S^d(C): one complex coefficient array
    per level k = 0..N, of length dim H_k.  Immutable."""

    __slots__ = ("ctx", "_levels", "flags")

    def __init__(self, ctx: SphereContext, levels, flags=()):
        self.ctx = ctx
        lv = []
        for k, arr in enumerate(levels):
            a = np.asarray(arr, dtype=complex).copy()
            if a.shape != (eigenspace_dim(k, ctx),):
                raise ValueError(
                    f"level {k} must have {eigenspace_dim(k, ctx)} coefficients, got {a.shape}"
                )
            a.setflags(write=False)
            lv.append(a)
        self._levels = tuple(lv)
        self.flags = tuple(flags)

    @classmethod
    def zeros(cls, ctx: SphereContext, N: int) -> "SpectralFunction":
        return cls(ctx, [np.zeros(eigenspace_dim(k, ctx), dtype=complex)
                         for k in range(N + 1)])

    @property
    def N(self) -> int:
        return len(self._levels) - 1

    def level(self, k: int) -> np.ndarray:
        return self._levels[k]

    def levels(self):
        return self._levels

    def level_energies(self) -> np.ndarray:
        return np.array([np.sum(np.abs(c) ** 2) for c in self._levels])

    def norm2(self) -> float:
        """L2 norm through Parseval."""
        return float(np.sqrt(np.sum(self.level_energies())))

    def scale_levels(self, factors, flags=None) -> "SpectralFunction":
        f = np.asarray(factors, dtype=float)
        if f.shape != (self.N + 1,):
            raise ValueError("need one factor per level")
        return SpectralFunction(
            self.ctx, [c * f[k] for k, c in enumerate(self._levels)],
            self.flags if flags is None else flags)

    def truncated(self, N: int) -> "SpectralFunction":
        if N >= self.N:
            return self
        return SpectralFunction(self.ctx, self._levels[: N + 1], self.flags)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        if other.N != self.N or other.ctx != self.ctx:
            raise ValueError("operands must share context and degree")
        return SpectralFunction(
            self.ctx, [a - b for a, b in zip(self._levels, other._levels)])

    def to_json(self) -> str:
        payload = {
            "d": self.ctx.d,
            "N": self.N,
            "levels": [
                {"k": k, "coeffs": [[float(c.real), float(c.imag)] for c in arr]}
                for k, arr in enumerate(self._levels)
            ],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "SpectralFunction":
        payload = json.loads(text)
        ctx = SphereContext(payload["d"])
        levels = [None] * (payload["N"] + 1)
        for entry in payload["levels"]:
            levels[entry["k"]] = np.array(
                [complex(re, im) for re, im in entry["coeffs"]])
        return cls(ctx, levels)


class _Chain:
    """Gram-Schmidt state of one torus character (m1, m2).

    Radial profiles are stored as coefficients over the degree-graded family
    pref(v) * P_j^{(|m2|,|m1|)}(2v - 1); that family spans the same space as
    the restricted monomials of the character but keeps the stored
    representation well conditioned, so coefficient evaluation reproduces
    the orthonormalized values to machine precision at any level.
    """

    __slots__ = ("m1", "m2", "k0", "values", "coeffs")

    def __init__(self, m1, m2):
        self.m1 = m1
        self.m2 = m2
        self.k0 = abs(m1) + abs(m2)
        self.values = []  # orthonormal radial profiles at the rule's v nodes
        self.coeffs = []  # matching coefficient vectors over the graded family


class BasisSet:
    """Orthonormal bases of the eigenspaces H_k for d = 3, bound to an exact
    sphere rule, built lazily per level."""

    def __init__(self, ctx: SphereContext, rule: SphereQuadrature):
        if ctx.d != 3:
            raise ValueError("orthonormal bases are only available for d = 3")
        if rule.monte_carlo:
            raise ValueError("basis construction needs the exact tensor rule")
        self.ctx = ctx
        self.rule = rule
        self.v_nodes = 0.5 * (1.0 + rule.u_nodes)
        self.w_nodes = rule.u_weights
        self._chains = {}
        self.max_level = -1

    # -- construction -----------------------------------------------------

    def _characters(self, k: int):
        """Characters (m1, m2) appearing in H_k, in deterministic order."""
        out = []
        for m1 in range(-k, k + 1):
            rem = k - abs(m1)
            for m2 in range(-rem, rem + 1):
                if (abs(m1) + abs(m2) - k) % 2 == 0:
                    out.append((m1, m2))
        return out

    def ensure(self, K: int):
        """Build all bases up to level K."""
        if self.rule.exact_degree < 2 * K:
            raise ValueError(
                f"rule of exact degree {self.rule.exact_degree} is insufficient"
                f" for level {K}; need at least {2 * K}")
        for k in range(self.max_level + 1, K + 1):
            for m1, m2 in self._characters(k):
                chain = self._chains.get((m1, m2))
                if chain is None:
                    chain = _Chain(m1, m2)
                    self._chains[(m1, m2)] = chain
                self._extend(chain, k)
            if sum(1 for (m1, m2) in self._characters(k)) != eigenspace_dim(k, self.ctx):
                raise AssertionError("character count does not match eigenspace dimension")
            self.max_level = k

    def _extend(self, chain: _Chain, k: int):
        l = (k - chain.k0) // 2
        v, w = self.v_nodes, self.w_nodes
        cand = _graded_family(chain.m1, chain.m2, l, v)
        prev = np.stack(chain.values) if chain.values else np.zeros((0, v.size))

        def project_out(rows):
            if prev.shape[0] == 0:
                return rows, np.zeros((rows.shape[0], 0))
            proj = (rows * w) @ prev.T  # weighted inner products, all real
            return rows - proj @ prev, proj

        resid, proj1 = project_out(cand)
        norms = np.sqrt(np.maximum(0.0, (resid * resid * w).sum(axis=1)))
        pivot = int(np.argmax(norms))
        r = resid[pivot]
        r2, proj2 = project_out(r[None, :])  # second pass kills rounding residue
        r = r2[0]
        nrm = float(np.sqrt((r * r * w).sum()))
        scale0 = float(np.sqrt((cand[pivot] ** 2 * w).sum()))
        if nrm < 1e-8 * scale0:
            raise ArithmeticError(
                f"rank collapse in Gram-Schmidt at level {k},"
                f" character ({chain.m1},{chain.m2}): residual {nrm:.3e}")
        g = r / nrm

        # coefficient bookkeeping mirrors the two projection passes; previous
        # coefficient vectors embed by zero padding since the family is graded
        c = np.zeros(l + 1)
        c[pivot] = 1.0
        for j, gc in enumerate(chain.coeffs):
            c[: gc.size] -= (proj1[pivot, j] + proj2[0, j]) * gc
        c /= nrm
        imax = int(np.argmax(np.abs(c)))
        if c[imax] < 0:
            c = -c
            g = -g

        # the leftover candidates must now lie in span(prev, g)
        rest = resid - np.outer((resid * w) @ g, g)
        worst = float(np.sqrt((rest * rest * w).sum(axis=1)).max())
        if worst > 1e-7 * max(1.0, scale0):
            raise ArithmeticError(
                f"harmonic projection left rank above 1 at level {k},"
                f" character ({chain.m1},{chain.m2}): residual {worst:.3e}")

        chain.values.append(g)
        chain.coeffs.append(c)

    # -- access ------------------------------------------------------------

    def functions(self, k: int):
        """Level-k basis as a list of (m1, m2, coeffs), deterministic order."""
        self.ensure(k)
        out = []
        for m1, m2 in self._characters(k):
            chain = self._chains[(m1, m2)]
            idx = (k - chain.k0) // 2
            out.append((m1, m2, chain.coeffs[idx]))
        return out

    def _radial(self, m1, m2, coeffs, v):
        fam = _graded_family(m1, m2, len(coeffs) - 1, np.asarray(v, dtype=float))
        return np.asarray(coeffs) @ fam

    def eval_level(self, k: int, points: np.ndarray) -> np.ndarray:
        """Values of the level-k basis at points (M, 2): array (d_k, M)."""
        pts = np.asarray(points, dtype=complex)
        v = np.abs(pts[:, 0]) ** 2
        xi1 = np.angle(pts[:, 0])
        xi2 = np.angle(pts[:, 1])
        rows = []
        for m1, m2, coeffs in self.functions(k):
            phase = np.exp(1j * (m1 * xi1 + m2 * xi2))
            rows.append(self._radial(m1, m2, coeffs, v) * phase)
        return np.stack(rows)

    def eval_level_real(self, k: int, points: np.ndarray) -> np.ndarray:
        """Real orthonormal basis of the real-valued part of H_k at points.

        Conjugation sends the (m1, m2) character to (-m1, -m2) with the same
        radial profile, so conjugate pairs recombine into sqrt(2) cos and
        sqrt(2) sin rows; the self-conjugate (0, 0) character is already
        real.  Row count equals dim H_k and the addition formula persists.
        """
        pts = np.asarray(points, dtype=complex)
        v = np.abs(pts[:, 0]) ** 2
        xi1 = np.angle(pts[:, 0])
        xi2 = np.angle(pts[:, 1])
        rows = []
        for m1, m2, coeffs in self.functions(k):
            if (m1, m2) < (-m1, -m2):
                continue
            rad = self._radial(m1, m2, coeffs, v)
            if (m1, m2) == (0, 0):
                rows.append(rad)
            else:
                phase = m1 * xi1 + m2 * xi2
                rows.append(np.sqrt(2.0) * rad * np.cos(phase))
                rows.append(np.sqrt(2.0) * rad * np.sin(phase))
        return np.stack(rows)

    def pole_values(self, k: int) -> np.ndarray:
        """Basis values at the pole e1 = (1, 0); only (m1, 0) characters
        survive there, where every family member equals 1."""
        vals = []
        for m1, m2, coeffs in self.functions(k):
            vals.append(float(np.sum(coeffs)) if m2 == 0 else 0.0)
        return np.asarray(vals, dtype=complex)

    def level_matrix(self, levels) -> np.ndarray:
        """Stacked node-value matrix of the requested levels at the rule's
        own grid, one row per basis function."""
        R, A1, A2 = self.rule.grid_shape
        e1 = np.exp(1j * self.rule.angles1)
        e2 = np.exp(1j * self.rule.angles2)
        rows = []
        for k in levels:
            for m1, m2, coeffs in self.functions(k):
                rad = self._radial(m1, m2, coeffs, self.v_nodes)
                row = (rad[:, None, None]
                       * (e1 ** m1)[None, :, None]
                       * (e2 ** m2)[None, None, :])
                rows.append(row.reshape(-1))
        return np.stack(rows)

    # -- transforms ---------------------------------------------------------

    def analyze_values(self, values: np.ndarray, N: int, f_degree=None) -> SpectralFunction:
        """Coefficients c_{k,m} = <f, Y_m^k> from values on the rule's grid.

        The angular sums are a 2-D FFT; the radial sum is the Gauss weight
        contraction.  When f_degree is provided and the rule cannot resolve
        N + f_degree exactly, the result carries an under-resolved flag.
        """
        self.ensure(N)
        R, A1, A2 = self.rule.grid_shape
        grid = np.asarray(values, dtype=complex).reshape(R, A1, A2)
        hat = np.fft.fft2(grid, axes=(1, 2)) / (A1 * A2)
        flags = ()
        if f_degree is not None and self.rule.exact_degree < N + f_degree:
            flags = ("under-resolved rule",)
        levels = []
        for k in range(N + 1):
            coeffs = []
            for m1, m2, c in self.functions(k):
                rad = self._radial(m1, m2, c, self.v_nodes)
                coeffs.append(np.sum(self.w_nodes * rad * hat[:, m1 % A1, m2 % A2]))
            levels.append(np.asarray(coeffs))
        return SpectralFunction(self.ctx, levels, flags)

    def synthesize(self, F: SpectralFunction, points: np.ndarray) -> np.ndarray:
        """Pointwise sum of c_{k,m} Y_m^k over all stored levels."""
        self.ensure(F.N)
        pts = np.asarray(points, dtype=complex)
        v = np.abs(pts[:, 0]) ** 2
        xi1 = np.angle(pts[:, 0])
        xi2 = np.angle(pts[:, 1])
        K = F.N
        # phase tables e^{i m xi}, m = -K..K, built by cumulative products
        p1 = np.exp(1j * xi1)
        p2 = np.exp(1j * xi2)
        tab1 = _power_table(p1, K)
        tab2 = _power_table(p2, K)
        out = np.zeros(len(pts), dtype=complex)
        for k in range(K + 1):
            cs = F.level(k)
            for (m1, m2, coeffs), c in zip(self.functions(k), cs):
                if c == 0:
                    continue
                out += c * self._radial(m1, m2, coeffs, v) * tab1[m1 + K] * tab2[m2 + K]
        return out

    def synthesize_batch(self, coeff_rows: np.ndarray, N: int,
                         points: np.ndarray, chunk: int = 20000) -> np.ndarray:
        """Values of many functions at once: rows of coeff_rows are flat
        coefficient vectors over levels 0..N (concatenated level blocks).
        One matrix product per level and point chunk, so large grids cost
        BLAS throughput instead of per-function loops."""
        self.ensure(N)
        pts = np.asarray(points, dtype=complex)
        rows = np.asarray(coeff_rows, dtype=complex)
        out = np.empty((rows.shape[0], len(pts)), dtype=complex)
        dims = [eigenspace_dim(k, self.ctx) for k in range(N + 1)]
        offs = np.cumsum([0] + dims)
        if rows.shape[1] != offs[-1]:
            raise ValueError("coefficient rows do not match the level layout")
        for lo in range(0, len(pts), chunk):
            sub = pts[lo: lo + chunk]
            acc = np.zeros((rows.shape[0], len(sub)), dtype=complex)
            for k in range(N + 1):
                block = rows[:, offs[k]: offs[k + 1]]
                if not np.any(block):
                    continue
                acc += block @ self.eval_level(k, sub)
            out[:, lo: lo + len(sub)] = acc
        return out

    # -- cache --------------------------------------------------------------

    def cache_payload(self):
        keys, arrays = [], []
        for (m1, m2), chain in sorted(self._chains.items()):
            for i, c in enumerate(chain.coeffs):
                keys.append((m1, m2, chain.k0 + 2 * i))
                arrays.append(c)
        meta = {"d": self.ctx.d, "max_level": self.max_level,
                "rule_hash": self.rule.content_hash(),
                "keys": [list(k) for k in keys]}
        return meta, arrays

    def load_cache_payload(self, meta, arrays):
        if meta["rule_hash"] != self.rule.content_hash():
            raise ValueError("cache was built against a different rule")
        by_char = {}
        for (m1, m2, k), arr in zip(meta["keys"], arrays):
            by_char.setdefault((m1, m2), []).append((k, np.asarray(arr, dtype=float)))
        for (m1, m2), entries in by_char.items():
            chain = _Chain(m1, m2)
            for k, c in sorted(entries):
                chain.coeffs.append(c)
                chain.values.append(self._radial(m1, m2, c, self.v_nodes))
            self._chains[(m1, m2)] = chain
        self.max_level = int(meta["max_level"])


def _graded_family(m1: int, m2: int, l: int, v: np.ndarray) -> np.ndarray:
    """Rows j = 0..l of v^{|m1|/2} (1-v)^{|m2|/2} P_j^{(|m2|,|m1|)}(2v - 1),
    the stable spanning family of the character's radial profiles."""
    pref = v ** (abs(m1) / 2.0) * (1.0 - v) ** (abs(m2) / 2.0)
    polys = jacobi_sequence(l, JacobiParams(float(abs(m2)), float(abs(m1))),
                            2.0 * v - 1.0)
    return polys * pref


def _power_table(base: np.ndarray, K: int) -> np.ndarray:
    """Rows m = -K..K of base**m."""
    tab = np.empty((2 * K + 1, base.size), dtype=complex)
    tab[K] = 1.0
    for m in range(1, K + 1):
        tab[K + m] = tab[K + m - 1] * base
        tab[K - m] = np.conj(tab[K + m])
    return tab


def build_orthonormal_basis(k: int, ctx: SphereContext, rule: SphereQuadrature,
                            basis: BasisSet | None = None) -> np.ndarray:
    """Node-value matrix of an orthonormal basis of H_k under the rule's
    discrete inner product; the row count equals eigenspace_dim(k)."""
    if basis is None:
        basis = BasisSet(ctx, rule)
    basis.ensure(k)
    return basis.level_matrix([k])


def analyze(values, N: int, ctx: SphereContext, rule: SphereQuadrature,
            basis: BasisSet | None = None, f_degree=None) -> SpectralFunction:
    if basis is None:
        basis = BasisSet(ctx, rule)
    return basis.analyze_values(values, N, f_degree=f_degree)


def synthesize(F: SpectralFunction, points, basis: BasisSet) -> np.ndarray:
    return basis.synthesize(F, np.asarray(points, dtype=complex))


def fractional_derivative(F: SpectralFunction, gamma: float) -> SpectralFunction:
    """Multiplier theta_k^{gamma/2} on levels k >= 1; the mean is dropped."""
    if gamma <= 0:
        raise ValueError("order gamma must be positive")
    factors = np.array([0.0] + [eigenvalue(k, F.ctx) ** (gamma / 2.0)
                                for k in range(1, F.N + 1)])
    return F.scale_levels(factors)


def fractional_integral(F: SpectralFunction, gamma: float,
                        constant: float = 0.0) -> SpectralFunction:
    """Multiplier theta_k^{-gamma/2} on levels k >= 1; the level-0
    coefficient becomes the free constant."""
    if gamma <= 0:
        raise ValueError("order gamma must be positive")
    factors = np.array([0.0] + [eigenvalue(k, F.ctx) ** (-gamma / 2.0)
                                for k in range(1, F.N + 1)])
    out = F.scale_levels(factors)
    lv = [arr.copy() for arr in out.levels()]
    lv[0] = np.array([complex(constant)])
    return SpectralFunction(F.ctx, lv, F.flags)


def zonal_profile_extremal(N: int, ctx: SphereContext) -> np.ndarray:
    """Multiplier profile a_1..a_N of the pole-concentrated smooth sample:
    level energies a_k^2 d_k proportional to 1/k, so the energy is spread
    evenly across dyadic level blocks."""
    a = np.zeros(N + 1)
    for k in range(1, N + 1):
        a[k] = 1.0 / np.sqrt(k * eigenspace_dim(k, ctx))
    return a


def sobolev_sample(gamma: float, N: int, ctx: SphereContext, rng,
                   kind: str = "random", p: float = 2.0,
                   basis: BasisSet | None = None) -> SpectralFunction:
    """Mean-zero sample g with ||g||_p <= 1, to be pushed through the
    fractional integral when a smoothness-class member is needed.

    kind="random": i.i.d. complex Gaussian coefficients on levels 1..N,
    then L_p-normalized.  kind="zonal-extremal": a zonal polynomial
    concentrated at the pole e1 with level energies proportional to 1/k,
    the worst-case candidate for approximation-rate experiments.
    """
    if gamma <= 0:
        raise ValueError("order gamma must be positive")
    if N < 1:
        raise ValueError("degree must be at least 1")
    if kind == "random":
        gen = rng.generator() if isinstance(rng, RandomSource) else rng
        levels = [np.zeros(1, dtype=complex)]
        for k in range(1, N + 1):
            dk = eigenspace_dim(k, ctx)
            levels.append((gen.standard_normal(dk) + 1j * gen.standard_normal(dk))
                          / np.sqrt(2.0))
        g = SpectralFunction(ctx, levels)
        return _normalize_lp(g, p, ctx, basis)
    if kind == "zonal-extremal":
        a = zonal_profile_extremal(N, ctx)
        a = a / _zonal_profile_lp_norm(a, p, ctx)
        if basis is None:
            basis = BasisSet(ctx, build_sphere_rule(ctx, 2 * N))
        basis.ensure(N)
        levels = [np.zeros(1, dtype=complex)]
        for k in range(1, N + 1):
            levels.append(a[k] * np.conj(basis.pole_values(k)))
        return SpectralFunction(ctx, levels)
    raise ValueError(f"unknown sample kind {kind!r}")


def _zonal_profile_lp_norm(a: np.ndarray, p, ctx: SphereContext) -> float:
    """L_p norm of the zonal function with multiplier profile a."""
    if p == 2:
        dims = np.array([eigenspace_dim(k, ctx) for k in range(len(a))])
        return float(np.sqrt(np.sum(a * a * dims)))
    from .kernels import ZonalKernel, kernel_lp_norm, kernel_sup_norm
    from .geometry import build_disk_rule
    kern = ZonalKernel(ctx, a)
    if p == np.inf:
        return kernel_sup_norm(kern)
    rule = build_disk_rule(ctx, max(2 * (len(a) - 1), 8))
    return kernel_lp_norm(kern, p, rule)


def _normalize_lp(g: SpectralFunction, p, ctx, basis: BasisSet | None) -> SpectralFunction:
    if p == 2:
        nrm = g.norm2()
    else:
        if basis is None:
            raise ValueError("L_p normalization with p != 2 needs a basis")
        from .geometry import discrete_lp_norm, sup_point_set
        rule = basis.rule
        vals = basis.synthesize(g, rule.points)
        if p == np.inf:
            extra = sup_point_set(ctx, rule, RandomSource(7, (int(g.N),)), factor=2)
            vals = basis.synthesize(g, extra)
            nrm = discrete_lp_norm(vals, None, np.inf)
        else:
            nrm = discrete_lp_norm(vals, rule.weights, p)
    return g.scale_levels(np.full(g.N + 1, 1.0 / nrm))
