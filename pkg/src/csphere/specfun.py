"""Scalar special functions: Jacobi and disk polynomials, Cesaro numbers,
the iterated-average smoothing function chi, forward differences, and
Euclidean ball volumes.

Everything here is pure and reentrant.  Gamma-ratio quantities go through
log-gamma so that nothing overflows before degree ~10^5, and the smoothing
function is built once per dimension in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, exp, fsum, lgamma, pi

import numpy as np

__all__ = [
    "JacobiParams",
    "jacobi_eval",
    "jacobi_sequence",
    "jacobi_value_at_one",
    "disk_poly_eval",
    "cesaro_number",
    "cesaro_sequence",
    "finite_difference",
    "ChiFunction",
    "chi_smooth",
    "chi_eval",
    "ball_volume",
    "volume_ratio",
]


@dataclass(frozen=True)
class JacobiParams:
    """Weight exponents (alpha, beta) of a Jacobi family, both > -1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1.0 and self.beta > -1.0):
            raise ValueError(
                f"Jacobi parameters must exceed -1, got alpha={self.alpha}, beta={self.beta}"
            )


def jacobi_value_at_one(n: int, alpha: float) -> float:
    """P_n^(alpha,beta)(1) = binomial(n + alpha, n), independent of beta."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return exp(lgamma(n + alpha + 1.0) - lgamma(alpha + 1.0) - lgamma(n + 1.0))


def jacobi_sequence(nmax: int, params: JacobiParams, x):
    """All Jacobi polynomial values P_0..P_nmax at x via the three-term
    recurrence, standard normalization P_n(1) = binomial(n+alpha, n).

    Returns an array of shape (nmax+1,) + shape(x).
    """
    if nmax < 0:
        raise ValueError("degree must be nonnegative")
    a, b = params.alpha, params.beta
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape, dtype=float)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = 0.5 * (a - b + (a + b + 2.0) * x)
    for n in range(2, nmax + 1):
        c = 2.0 * n + a + b
        a1 = 2.0 * n * (n + a + b) * (c - 2.0)
        a2 = (c - 1.0) * (a * a - b * b)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * c
        out[n] = ((a2 + a3 * x) * out[n - 1] - a4 * out[n - 2]) / a1
    return out


def jacobi_eval(n: int, params: JacobiParams, x):
    """Jacobi polynomial P_n^(alpha,beta)(x) for |x| <= 1."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0 + 1e-12):
        raise ValueError("argument outside [-1, 1]")
    val = jacobi_sequence(n, params, np.clip(xa, -1.0, 1.0))[n]
    return float(val) if np.isscalar(x) else val


def disk_poly_eval(p: int, q: int, alpha: float, z):
    """Disk polynomial R_{p,q}^(alpha)(z) on the closed unit disk,
    normalized so R_{p,q}(1) = 1.

    R_{p,q}(r e^{i t}) = r^{|p-q|} e^{i(p-q)t} P_l^{(alpha,|p-q|)}(2r^2-1) / P_l(1)
    with l = min(p, q).
    """
    if p < 0 or q < 0:
        raise ValueError("bidegree indices must be nonnegative")
    za = np.asarray(z, dtype=complex)
    r = np.abs(za)
    if np.any(r > 1.0 + 1e-12):
        raise ValueError("argument outside the closed unit disk")
    r = np.minimum(r, 1.0)
    m = abs(p - q)
    l = min(p, q)
    u = 2.0 * r * r - 1.0
    radial = jacobi_sequence(l, JacobiParams(alpha, float(m)), u)[l]
    radial = radial / jacobi_value_at_one(l, alpha)
    val = (r ** m) * np.exp(1j * (p - q) * np.angle(za)) * radial
    return complex(val) if np.isscalar(z) else val


def cesaro_number(n, delta: float):
    """Cesaro number C_n^delta = Gamma(n+delta+1) / (Gamma(delta+1) Gamma(n+1)).

    Computed through log-gamma; accepts scalar or array n >= 0.
    """
    if delta < 0:
        raise ValueError("index delta must be nonnegative")
    na = np.asarray(n, dtype=float)
    if np.any(na < 0):
        raise ValueError("order n must be nonnegative")
    lg = np.vectorize(lgamma)
    val = np.exp(lg(na + delta + 1.0) - lgamma(delta + 1.0) - lg(na + 1.0))
    return float(val) if np.isscalar(n) else val


def cesaro_sequence(nmax: int, delta: float) -> np.ndarray:
    """C_0^delta .. C_nmax^delta.  Integer delta is computed exactly."""
    if delta < 0:
        raise ValueError("index delta must be nonnegative")
    if float(delta).is_integer():
        s = int(delta)
        return np.array([float(comb(n + s, n)) for n in range(nmax + 1)])
    return cesaro_number(np.arange(nmax + 1), delta)


def finite_difference(seq, order: int, k: int) -> float:
    """Forward difference D^order applied to seq at index k, with the sign
    convention D^1 f_k = f_k - f_{k+1}.

    Computed by iterated pairwise subtraction rather than the binomial sum:
    for smooth sequences consecutive values are close enough that every
    subtraction is exact in floating point, so the severe cancellation costs
    no accuracy.
    """
    if order < 0:
        raise ValueError("difference order must be nonnegative")
    if k < 0 or k + order >= len(seq):
        raise ValueError(
            f"difference of order {order} at index {k} needs entries up to {k + order}"
        )
    window = np.asarray(seq[k: k + order + 1], dtype=float)
    for _ in range(order):
        window = window[:-1] - window[1:]
    return float(window[0])


def difference_table(seq, order: int) -> np.ndarray:
    """All forward differences D^order f_k, k = 0..len(seq)-order-1, by
    iterated pairwise subtraction."""
    if order < 0:
        raise ValueError("difference order must be nonnegative")
    if order >= len(seq):
        raise ValueError("sequence too short for the requested order")
    cur = np.asarray(seq, dtype=float)
    for _ in range(order):
        cur = cur[:-1] - cur[1:]
    return cur


# ---------------------------------------------------------------------------
# Smoothing function chi_s: iterated sliding averages of the unit indicator.
#
# chi_0 = indicator of [0, 1];  chi_s(t) = 2d * integral of chi_{s-1} over
# [t, t + 1/(2d)].  Each level is a piecewise polynomial of degree s on the
# uniform grid {j/(2d)}, computed here with exact rational coefficients in
# local coordinates so every downstream multiplier is exact.
# ---------------------------------------------------------------------------


def _poly_integral(coeffs):
    return (Fraction(0),) + tuple(c / (i + 1) for i, c in enumerate(coeffs))


def _poly_eval(coeffs, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _poly_axpy(scale, a, b):
    """scale * (a - b) with tuple padding."""
    n = max(len(a), len(b))
    a = a + (Fraction(0),) * (n - len(a))
    b = b + (Fraction(0),) * (n - len(b))
    return tuple(scale * (x - y) for x, y in zip(a, b))


@dataclass(frozen=True)
class ChiFunction:
    """Exact piecewise-polynomial representation of the levels chi_0..chi_d.

    Level s lives on 2d uniform cells covering [0, 1); pieces are stored in
    local coordinates relative to the left cell endpoint.  chi_d is 1 on
    [0, 1/2], vanishes for t >= 1, and equals (2d)^d/d! (1-t)^d on the last
    cell.
    """

    d: int
    pieces: tuple  # pieces[s][cell] = tuple of Fractions, local coordinates
    _float_pieces: tuple = field(repr=False, default=())

    @property
    def cell_width(self) -> Fraction:
        return Fraction(1, 2 * self.d)

    def breakpoints(self, s: int) -> list:
        """Knots t_j = 1 - j/(2d), j = 0..s, of level s."""
        return [1 - Fraction(j, 2 * self.d) for j in range(s + 1)]

    def eval_exact(self, s: int, t: Fraction) -> Fraction:
        if not (0 <= s <= self.d):
            raise ValueError(f"level must lie in 0..{self.d}")
        t = Fraction(t)
        if t < 0:
            raise ValueError("argument must be nonnegative")
        if t >= 1:
            return Fraction(0)
        cell = int(t * 2 * self.d)
        xi = t - Fraction(cell, 2 * self.d)
        return _poly_eval(self.pieces[s][cell], xi)

    def eval(self, s: int, t):
        """Float evaluation of level s at scalar or array t >= 0."""
        if not (0 <= s <= self.d):
            raise ValueError(f"level must lie in 0..{self.d}")
        ta = np.asarray(t, dtype=float)
        if np.any(ta < 0):
            raise ValueError("argument must be nonnegative")
        coeffs = self._float_pieces[s]  # (2d, s+1)
        cells = np.minimum((ta * (2 * self.d)).astype(int), 2 * self.d - 1)
        xi = ta - cells / (2.0 * self.d)
        c = coeffs[cells]
        acc = np.zeros_like(ta)
        for j in range(c.shape[-1] - 1, -1, -1):
            acc = acc * xi + c[..., j]
        acc = np.where(ta >= 1.0, 0.0, acc)
        return float(acc) if np.isscalar(t) else acc


def chi_smooth(d: int) -> ChiFunction:
    """Build the smoothing function levels chi_0..chi_d for odd d >= 3."""
    if d < 3 or d % 2 == 0:
        raise ValueError("dimension must be an odd integer >= 3")
    cells = 2 * d
    h = Fraction(1, cells)
    levels = [tuple((Fraction(1),) for _ in range(cells))]
    for _ in range(d):
        prev = levels[-1]
        anti = [_poly_integral(c) for c in prev]
        cum = [Fraction(0)]
        for i in range(cells):
            cum.append(cum[-1] + _poly_eval(anti[i], h))
        anti.append((Fraction(0),))  # everything vanishes past t = 1
        cum.append(cum[cells])
        new = []
        for i in range(cells):
            piece = _poly_axpy(Fraction(2 * d), anti[i + 1], anti[i])
            const = 2 * d * (cum[i + 1] - cum[i])
            piece = (piece[0] + const,) + piece[1:]
            new.append(piece)
        levels.append(tuple(new))

    float_levels = []
    for s, level in enumerate(levels):
        arr = np.zeros((cells, s + 1))
        for i, piece in enumerate(level):
            for j, c in enumerate(piece):
                arr[i, j] = float(c)
        float_levels.append(arr)
    return ChiFunction(d=d, pieces=tuple(levels), _float_pieces=tuple(float_levels))


def chi_eval(f: ChiFunction, s: int, t):
    """Evaluate level s of a smoothing function, per ChiFunction.eval."""
    return f.eval(s, t)


def ball_volume(n: int) -> float:
    """Volume of the unit Euclidean ball in R^n; Vol_0 := 1."""
    if n < 0:
        raise ValueError("dimension must be nonnegative")
    return exp(0.5 * n * np.log(pi) - lgamma(0.5 * n + 1.0))


def volume_ratio(l: int, s: int, n: int | None = None) -> float:
    """(Vol_s(B^s) Vol_l(B^l) / Vol_n(B^n))^(1/l) for l + s = n, in log space.

    Collapses to (Gamma(n/2+1) / (Gamma(s/2+1) Gamma(l/2+1)))^(1/l).
    """
    if n is None:
        n = l + s
    if l < 1 or s < 0 or l + s != n:
        raise ValueError("need l >= 1, s >= 0 and l + s = n")
    log_ratio = lgamma(0.5 * n + 1.0) - lgamma(0.5 * s + 1.0) - lgamma(0.5 * l + 1.0)
    return exp(log_ratio / l)
