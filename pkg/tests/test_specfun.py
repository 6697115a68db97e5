import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from csphere.specfun import (
    ChiFunction,
    JacobiParams,
    ball_volume,
    cesaro_number,
    cesaro_sequence,
    chi_eval,
    chi_smooth,
    difference_table,
    disk_poly_eval,
    finite_difference,
    jacobi_eval,
    jacobi_sequence,
    volume_ratio,
)


def fit_slope(x, y):
    lx, ly = np.log(x), np.log(y)
    return np.polyfit(lx, ly, 1)[0]


# ---------------------------------------------------------------------------
# Jacobi polynomials
# ---------------------------------------------------------------------------


def test_jacobi_degree_zero_is_one():
    assert jacobi_eval(0, JacobiParams(0.3, 1.7), 0.42) == 1.0


def test_jacobi_normalization_at_one():
    assert jacobi_eval(2, JacobiParams(0.0, 0.0), 1.0) == pytest.approx(1.0, abs=1e-15)


def test_jacobi_legendre_value():
    # brute-force series oracle for the Legendre case: P2 = (3x^2 - 1)/2
    assert jacobi_eval(2, JacobiParams(0.0, 0.0), 0.0) == pytest.approx(-0.5, abs=1e-15)


def test_jacobi_low_degree_closed_forms():
    rng = np.random.default_rng(0)
    a, b = 0.5, 1.5
    x = rng.uniform(-1, 1, 20)
    p1 = 0.5 * (a - b + (a + b + 2) * x)
    p2 = (0.125 * (a + b + 3) * (a + b + 4) * (x - 1) ** 2
          + 0.5 * (a + 2) * (a + b + 3) * (x - 1)
          + 0.5 * (a + 1) * (a + 2))
    p3 = (Fraction(1, 48) * 1.0 * (a + b + 4) * (a + b + 5) * (a + b + 6) * (x - 1) ** 3
          + 0.25 * (a + 3) * (a + b + 4) * (a + b + 5) * (x - 1) ** 2 / 2
          + 0.25 * (a + 2) * (a + 3) * (a + b + 4) * (x - 1)
          + (a + 1) * (a + 2) * (a + 3) / 6)
    assert_allclose(jacobi_eval(1, JacobiParams(a, b), x), p1, atol=1e-12)
    assert_allclose(jacobi_eval(2, JacobiParams(a, b), x), p2, atol=1e-12)
    assert_allclose(jacobi_eval(3, JacobiParams(a, b), x), p3, atol=1e-12)


def test_jacobi_sequence_matches_scipy():
    from scipy.special import eval_jacobi
    x = np.linspace(-1, 1, 11)
    table = jacobi_sequence(12, JacobiParams(1.0, 2.0), x)
    for n in range(13):
        assert_allclose(table[n], eval_jacobi(n, 1.0, 2.0, x), rtol=1e-10)


def test_jacobi_domain_errors():
    with pytest.raises(ValueError):
        JacobiParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        jacobi_eval(2, JacobiParams(0.0, 0.0), 1.5)
    with pytest.raises(ValueError):
        jacobi_eval(-1, JacobiParams(0.0, 0.0), 0.0)


# ---------------------------------------------------------------------------
# disk polynomials
# ---------------------------------------------------------------------------


def test_disk_poly_constant():
    assert disk_poly_eval(0, 0, 1.3, 0.2 + 0.5j) == pytest.approx(1.0)


def test_disk_poly_monomial():
    # degree-(1,0) member is forced to z by the normalization R(1) = 1
    z = np.array([0.3 + 0.1j, -0.7j, 0.9])
    assert_allclose(disk_poly_eval(1, 0, 0.0, z), z, atol=1e-14)


def test_disk_poly_11_at_zero():
    # P_1^{(0,0)}(2*0 - 1) = -1
    assert disk_poly_eval(1, 1, 0.0, 0.0 + 0.0j) == pytest.approx(-1.0)


def test_disk_poly_conjugate_symmetry():
    z = 0.4 + 0.25j
    assert disk_poly_eval(2, 5, 1.0, z) == pytest.approx(
        np.conj(disk_poly_eval(5, 2, 1.0, z)))


def test_disk_poly_gram_schmidt_oracle():
    # R_{1,1} for alpha=0 must match Gram-Schmidt of |z|^2 against 1 under
    # the uniform disk measure: |z|^2 - 1/2, normalized to 1 at z = 1.
    rng = np.random.default_rng(1)
    z = np.sqrt(rng.uniform(0, 1, 4000)) * np.exp(2j * np.pi * rng.uniform(0, 1, 4000))
    gs = (np.abs(z) ** 2 - 0.5) / 0.5
    assert_allclose(disk_poly_eval(1, 1, 0.0, z), gs, atol=1e-12)


def test_disk_poly_domain():
    with pytest.raises(ValueError):
        disk_poly_eval(1, 0, 0.0, 1.2 + 0j)


# ---------------------------------------------------------------------------
# Cesaro numbers
# ---------------------------------------------------------------------------


def test_cesaro_index_zero():
    assert cesaro_number(5, 0.0) == pytest.approx(1.0)


def test_cesaro_values():
    assert cesaro_number(3, 1.0) == pytest.approx(4.0, rel=1e-12)
    assert cesaro_number(10, 2.0) == pytest.approx(66.0, rel=1e-12)


def test_cesaro_sequence_integer_exact():
    seq = cesaro_sequence(20, 3.0)
    assert seq[0] == 1.0
    assert seq[10] == math.comb(13, 10)


def test_cesaro_asymptotics():
    # C_n^delta / n^delta -> 1/Gamma(delta+1)
    for delta in (0.5, 1.0, 2.5):
        val = cesaro_number(10_000, delta) / 10_000 ** delta
        assert val == pytest.approx(1.0 / math.gamma(delta + 1.0), rel=1e-2)


def test_cesaro_domain():
    with pytest.raises(ValueError):
        cesaro_number(3, -0.5)
    with pytest.raises(ValueError):
        cesaro_number(-1, 1.0)


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------


def test_difference_constant_sequence():
    seq = np.full(10, 3.25)
    for s in (1, 2, 3):
        assert finite_difference(seq, s, 2) == 0.0


def test_difference_linear_sequence():
    seq = np.arange(8.0)
    assert finite_difference(seq, 1, 3) == -1.0


def test_difference_table_matches_binomial():
    rng = np.random.default_rng(2)
    seq = rng.standard_normal(12)
    for s in (1, 2, 3):
        tab = difference_table(seq, s)
        for k in range(len(seq) - s):
            ref = sum((-1) ** j * math.comb(s, j) * seq[k + j] for j in range(s + 1))
            assert tab[k] == pytest.approx(ref, abs=1e-12)


def test_difference_decay_slope():
    # lambda_k = theta_k^{-gamma/2} for d=3, gamma=2; order (d+3)/2 = 3.
    # The decay exponent is -gamma-(d+3)/2 = -5; prefactor corrections tilt
    # low windows (about -4.82 over [20,200]), so the tight tolerance is
    # checked in the asymptotic window.
    k = np.arange(0, 2100)
    lam = np.zeros(len(k))
    lam[1:] = (k[1:] * (k[1:] + 2.0)) ** (-1.0)
    tab = np.abs(difference_table(lam, 3))
    low = np.arange(20, 201)
    high = np.arange(200, 2001)
    assert fit_slope(low, tab[low]) == pytest.approx(-5.0, abs=0.2)
    assert fit_slope(high, tab[high]) == pytest.approx(-5.0, abs=0.1)


def test_difference_domain():
    with pytest.raises(ValueError):
        finite_difference([1.0, 2.0], 2, 0)
    with pytest.raises(ValueError):
        finite_difference([1.0, 2.0, 3.0], 1, -1)


# ---------------------------------------------------------------------------
# smoothing function chi
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def chi3() -> ChiFunction:
    return chi_smooth(3)


def test_chi_level_zero_indicator(chi3):
    assert chi3.eval(0, 0.5) == 1.0
    assert chi3.eval(0, 0.0) == 1.0
    assert chi3.eval(0, 1.0) == 0.0


def test_chi_top_level_plateau(chi3):
    ts = np.linspace(0.0, 0.5, 101)
    assert_allclose(chi3.eval(3, ts), 1.0, atol=1e-15)
    assert chi3.eval(3, 0.3) == 1.0


def test_chi_vanishes_past_one(chi3):
    assert chi3.eval(3, 1.0) == 0.0
    assert chi3.eval(3, 2.7) == 0.0


def test_chi_value_by_numeric_recursion(chi3):
    # d-fold numerical integration of the recursion, no piecewise algebra;
    # inner integrals split at the multiples of 1/(2d) where the integrand
    # loses smoothness, so quad sees only polynomial pieces
    from scipy.integrate import quad

    def chi_num(s, t):
        if s == 0:
            return 1.0 if 0 <= t <= 1 else 0.0
        lo, hi = t, t + 1.0 / 6.0
        cuts = [lo] + [j / 6.0 for j in range(13) if lo < j / 6.0 < hi] + [hi]
        total = sum(quad(lambda u: chi_num(s - 1, u), a, b)[0]
                    for a, b in zip(cuts[:-1], cuts[1:]))
        return 6.0 * total

    t = 11.0 / 12.0
    oracle = chi_num(3, t)
    assert oracle == pytest.approx(1.0 / 48.0, abs=1e-9)
    assert chi3.eval(3, t) == pytest.approx(1.0 / 48.0, abs=1e-12)
    assert chi3.eval_exact(3, Fraction(11, 12)) == Fraction(1, 48)


def test_chi_endpoint_closed_form():
    for d in (3, 5):
        chi = chi_smooth(d)
        scale = (2 * d) ** d / math.factorial(d)
        for t in np.linspace(1.0 - 1.0 / (2 * d), 1.0, 23, endpoint=False):
            assert chi.eval(d, t) == pytest.approx(scale * (1 - t) ** d, abs=1e-12)


def test_chi_smoothness_exact(chi3):
    # C^{d-1} continuity holds exactly for the rational representation:
    # derivatives up to order d-1 agree at every interior breakpoint
    d = chi3.d
    h = chi3.cell_width
    pieces = chi3.pieces[d]

    def derivs(coeffs, x, order):
        out = []
        c = list(coeffs)
        for _ in range(order + 1):
            acc = Fraction(0)
            for cc in reversed(c):
                acc = acc * x + cc
            out.append(acc)
            c = [i * c[i] for i in range(1, len(c))]
        return out

    for cell in range(2 * d - 1):
        left = derivs(pieces[cell], h, d - 1)
        right = derivs(pieces[cell + 1], Fraction(0), d - 1)
        assert left == right


def test_chi_smoothness_divided_difference(chi3):
    # divided-difference estimates of the (d-1)-th derivative from the two
    # sides of each breakpoint; exact rational evaluation allows a spacing
    # tiny enough that the one-sided bias sits far below the tolerance
    d = chi3.d
    eps = Fraction(1, 10 ** 14)
    fact = math.factorial(d - 1)

    def divided_difference(points):
        vals = [chi3.eval_exact(d, t) for t in points]
        pts = list(points)
        for order in range(1, len(pts)):
            vals = [(vals[i + 1] - vals[i]) / (pts[i + order] - pts[i])
                    for i in range(len(vals) - 1)]
        return vals[0]

    for bp in chi3.breakpoints(d)[1:]:
        left = divided_difference([bp - j * eps for j in range(d, 0, -1)])
        right = divided_difference([bp + j * eps for j in range(1, d + 1)])
        assert abs(float(left - right)) * fact < 1e-8


def test_chi_eval_helper_and_domains(chi3):
    assert chi_eval(chi3, 1, 0.25) == chi3.eval(1, 0.25)
    with pytest.raises(ValueError):
        chi3.eval(4, 0.5)
    with pytest.raises(ValueError):
        chi3.eval(3, -0.1)
    with pytest.raises(ValueError):
        chi_smooth(4)
    with pytest.raises(ValueError):
        chi_smooth(1)


# ---------------------------------------------------------------------------
# ball volumes
# ---------------------------------------------------------------------------


def test_ball_volume_small_dims():
    assert ball_volume(0) == pytest.approx(1.0)
    assert ball_volume(1) == pytest.approx(2.0)
    assert ball_volume(2) == pytest.approx(math.pi)
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_ball_volume_no_overflow():
    assert ball_volume(400) > 0.0


def test_volume_ratio_collapse():
    for n in (1, 7, 40):
        assert volume_ratio(n, 0, n) == pytest.approx(1.0)


def test_volume_ratio_value():
    assert volume_ratio(2, 2, 4) == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_volume_ratio_balanced_split_flat():
    ns = np.arange(50, 501, 25)
    vals = [volume_ratio(math.ceil(n / 2), n - math.ceil(n / 2), int(n)) for n in ns]
    slope = fit_slope(ns, vals)
    assert abs(slope) <= 0.05


def test_volume_ratio_domain():
    with pytest.raises(ValueError):
        volume_ratio(2, 2, 5)
    with pytest.raises(ValueError):
        volume_ratio(0, 4, 4)
