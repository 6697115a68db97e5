import numpy as np
import pytest
from numpy.testing import assert_allclose

from csphere.geometry import (
    RandomSource,
    SphereContext,
    build_sphere_rule,
    discrete_lp_norm,
    sample_complex_sphere,
)
from csphere.spectral import (
    BasisSet,
    SpectralFunction,
    analyze,
    bidegree_dim,
    build_orthonormal_basis,
    eigenspace_dim,
    eigenvalue,
    fractional_derivative,
    fractional_integral,
    sobolev_sample,
    space_dim,
    synthesize,
)


@pytest.fixture(scope="module")
def ctx3():
    return SphereContext(3)


@pytest.fixture(scope="module")
def rule20(ctx3):
    return build_sphere_rule(ctx3, 40)


@pytest.fixture(scope="module")
def basis20(ctx3, rule20):
    b = BasisSet(ctx3, rule20)
    b.ensure(20)
    return b


def random_function(ctx, N, seed=0):
    gen = RandomSource(seed).generator()
    levels = [np.zeros(1, complex)]
    for k in range(1, N + 1):
        dk = eigenspace_dim(k, ctx)
        levels.append(gen.standard_normal(dk) + 1j * gen.standard_normal(dk))
    return SpectralFunction(ctx, levels)


# ---------------------------------------------------------------------------
# eigenvalues and dimensions
# ---------------------------------------------------------------------------


def test_eigenvalue_values(ctx3):
    assert eigenvalue(0, ctx3) == 0.0
    assert eigenvalue(1, ctx3) == 3.0
    assert eigenvalue(2, SphereContext(5)) == 12.0
    with pytest.raises(ValueError):
        eigenvalue(-1, ctx3)


def test_dims_small(ctx3):
    assert eigenspace_dim(0, ctx3) == 1
    assert bidegree_dim(1, 0, ctx3) == 2
    assert eigenspace_dim(2, ctx3) == 9


def test_dims_closed_form_d3(ctx3):
    for k in range(51):
        assert eigenspace_dim(k, ctx3) == (k + 1) ** 2


def test_space_dim_formula(ctx3):
    for N in range(31):
        assert space_dim(N, ctx3) == (N + 1) * (N + 2) * (2 * N + 3) // 6


def test_dims_rank_oracle(ctx3):
    # numerical rank of restricted monomial values: rank(deg k) - rank(deg k-2)
    # counts the top eigenspace because |z|^2-multiples restrict to lower
    # degree monomials
    gen = RandomSource(17).generator()

    def monomial_matrix(k, pts):
        rows = []
        for p in range(k + 1):
            q = k - p
            for a1 in range(p + 1):
                for b1 in range(q + 1):
                    rows.append(pts[:, 0] ** a1 * pts[:, 1] ** (p - a1)
                                * np.conj(pts[:, 0]) ** b1
                                * np.conj(pts[:, 1]) ** (q - b1))
        return np.stack(rows)

    def rank(k):
        pts = sample_complex_sphere(2, 400, RandomSource(17, (k,)))
        M = monomial_matrix(k, pts)
        s = np.linalg.svd(M, compute_uv=False)
        return int(np.sum(s > 1e-8 * s[0]))

    assert rank(2) - rank(0) == eigenspace_dim(2, ctx3)  # 9
    assert rank(3) - rank(1) == eigenspace_dim(3, ctx3)

    # bidegree (1,0): restrictions of z1, z2 are independent
    pts = sample_complex_sphere(2, 50, RandomSource(18))
    M = np.stack([pts[:, 0], pts[:, 1]])
    s = np.linalg.svd(M, compute_uv=False)
    assert int(np.sum(s > 1e-10 * s[0])) == bidegree_dim(1, 0, ctx3)


def test_dim_exponent_growth(ctx3):
    # exact dimensions grow like k^(d-1); the claimed 2d-1 exponent fails
    ks = np.arange(10, 60)
    dims = np.array([eigenspace_dim(int(k), ctx3) for k in ks])
    slope = np.polyfit(np.log(ks), np.log(dims), 1)[0]
    assert slope == pytest.approx(ctx3.d - 1, abs=0.1)
    assert abs(slope - (2 * ctx3.d - 1)) > 1.0


# ---------------------------------------------------------------------------
# orthonormal bases
# ---------------------------------------------------------------------------


def test_level_zero_is_constant(ctx3, basis20, rule20):
    row = basis20.level_matrix([0])
    assert row.shape == (1, rule20.node_count)
    assert_allclose(row, 1.0, atol=1e-14)


def test_basis_dimensions(ctx3, basis20):
    for k in (1, 4, 11, 20):
        assert len(basis20.functions(k)) == eigenspace_dim(k, ctx3)


def test_gram_identity(ctx3, basis20, rule20):
    for k in (1, 5, 12, 20):
        M = basis20.level_matrix([k])
        gram = (M * rule20.weights) @ M.conj().T
        assert np.max(np.abs(gram - np.eye(len(gram)))) < 1e-10


def test_addition_formula(ctx3, basis20):
    pts = sample_complex_sphere(2, 100, RandomSource(0))
    for k in range(21):
        vals = basis20.eval_level(k, pts)
        diag = np.sum(np.abs(vals) ** 2, axis=0)
        dk = eigenspace_dim(k, ctx3)
        assert np.max(np.abs(diag - dk)) < 1e-8 * dk


def test_real_basis_recombination(ctx3, basis20, rule20):
    for k in (0, 3, 6):
        R = basis20.eval_level_real(k, rule20.points)
        assert R.shape[0] == eigenspace_dim(k, ctx3)
        assert np.max(np.abs(R.imag)) == 0.0 if np.isrealobj(R) else True
        gram = (R * rule20.weights) @ R.T
        assert np.max(np.abs(gram - np.eye(len(gram)))) < 1e-10


def test_basis_requires_exact_rule(ctx3):
    rule = build_sphere_rule(ctx3, 8)
    basis = BasisSet(ctx3, rule)
    with pytest.raises(ValueError):
        basis.ensure(5)
    mc = build_sphere_rule(SphereContext(5), 4)
    with pytest.raises(ValueError):
        BasisSet(SphereContext(5), mc)


def test_build_orthonormal_basis_entry(ctx3, rule20):
    M = build_orthonormal_basis(3, ctx3, rule20)
    assert M.shape == (16, rule20.node_count)


def test_basis_cache_roundtrip(ctx3, rule20, basis20):
    fresh = BasisSet(ctx3, rule20)
    meta, arrays = basis20.cache_payload()
    fresh.load_cache_payload(meta, arrays)
    assert fresh.max_level == basis20.max_level
    pts = sample_complex_sphere(2, 10, RandomSource(5))
    for k in (2, 9):
        assert_allclose(fresh.eval_level(k, pts), basis20.eval_level(k, pts),
                        atol=1e-14)
    wrong = BasisSet(ctx3, build_sphere_rule(ctx3, 44))
    with pytest.raises(ValueError):
        wrong.load_cache_payload(meta, arrays)


# ---------------------------------------------------------------------------
# analyze / synthesize
# ---------------------------------------------------------------------------


def test_analyze_basis_function(ctx3, basis20, rule20):
    row = basis20.level_matrix([3])[5]
    F = analyze(row, 6, ctx3, rule20, basis=basis20, f_degree=3)
    for k in range(7):
        ref = np.zeros(eigenspace_dim(k, ctx3), dtype=complex)
        if k == 3:
            ref[5] = 1.0
        assert np.max(np.abs(F.level(k) - ref)) < 1e-10


def test_analyze_constant(ctx3, basis20, rule20):
    F = analyze(np.ones(rule20.node_count), 4, ctx3, rule20, basis=basis20)
    assert F.level(0)[0] == pytest.approx(1.0, abs=1e-13)
    for k in range(1, 5):
        assert np.max(np.abs(F.level(k))) < 1e-12


def test_parseval(ctx3, basis20, rule20):
    F = random_function(ctx3, 6, seed=2)
    vals = synthesize(F, rule20.points, basis20)
    q = discrete_lp_norm(vals, rule20.weights, 2)
    assert q == pytest.approx(F.norm2(), abs=1e-10 * F.norm2())


def test_roundtrip(ctx3, basis20, rule20):
    F = random_function(ctx3, 8, seed=3)
    vals = synthesize(F, rule20.points, basis20)
    back = analyze(vals, 8, ctx3, rule20, basis=basis20, f_degree=8)
    err = max(np.max(np.abs(back.level(k) - F.level(k))) for k in range(9))
    assert err < 1e-10


def test_synthesize_constant(ctx3, basis20):
    F = SpectralFunction.zeros(ctx3, 2)
    levels = [arr.copy() for arr in F.levels()]
    levels[0][0] = 1.0
    F = SpectralFunction(ctx3, levels)
    pts = sample_complex_sphere(2, 17, RandomSource(4))
    assert_allclose(synthesize(F, pts, basis20), 1.0, atol=1e-14)


def test_synthesize_batch_matches(ctx3, basis20):
    pts = sample_complex_sphere(2, 300, RandomSource(6))
    fs = [random_function(ctx3, 5, seed=s) for s in (10, 11, 12)]
    rows = np.stack([np.concatenate(F.levels()) for F in fs])
    batch = basis20.synthesize_batch(rows, 5, pts, chunk=128)
    for i, F in enumerate(fs):
        assert_allclose(batch[i], basis20.synthesize(F, pts), atol=1e-12)


def test_analyze_underresolved_flag(ctx3, basis20):
    vals = np.ones(basis20.rule.node_count)
    F = analyze(vals, 20, ctx3, basis20.rule, basis=basis20, f_degree=30)
    assert "under-resolved rule" in F.flags


# ---------------------------------------------------------------------------
# fractional calculus
# ---------------------------------------------------------------------------


def test_fractional_inverse(ctx3):
    F = random_function(ctx3, 5, seed=7)
    G = fractional_derivative(fractional_integral(F, 2.0, constant=0.0), 2.0)
    for k in range(1, 6):
        assert_allclose(G.level(k), F.level(k), atol=0)
    assert G.level(0)[0] == 0.0


def test_fractional_single_harmonic(ctx3):
    levels = [np.zeros(1, complex), np.zeros(4, complex)]
    levels[1][2] = 1.0
    F = SpectralFunction(ctx3, levels)
    D = fractional_derivative(F, 2.0)
    assert D.level(1)[2] == pytest.approx(3.0)  # theta_1 = 3


def test_fractional_level_scaling(ctx3):
    F = random_function(ctx3, 6, seed=8)
    G = fractional_integral(F, 3.0, constant=0.0)
    eF, eG = F.level_energies(), G.level_energies()
    for k in range(1, 7):
        assert eG[k] == pytest.approx(eF[k] * eigenvalue(k, ctx3) ** (-3.0),
                                      rel=1e-12)


def test_fractional_composition(ctx3):
    F = random_function(ctx3, 4, seed=9)
    a = fractional_derivative(fractional_derivative(F, 1.0), 2.0)
    b = fractional_derivative(F, 3.0)
    for k in range(1, 5):
        assert_allclose(a.level(k), b.level(k), rtol=1e-14)


def test_fractional_domain(ctx3):
    F = random_function(ctx3, 3)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            fractional_derivative(F, bad)
        with pytest.raises(ValueError):
            fractional_integral(F, bad)


def test_fractional_integral_constant(ctx3):
    F = random_function(ctx3, 3, seed=10)
    G = fractional_integral(F, 1.0, constant=2.5)
    assert G.level(0)[0] == pytest.approx(2.5)


# ---------------------------------------------------------------------------
# Sobolev samples
# ---------------------------------------------------------------------------


def test_sobolev_sample_random(ctx3, basis20):
    g = sobolev_sample(2.0, 8, ctx3, RandomSource(0), kind="random", p=2)
    assert g.norm2() == pytest.approx(1.0, abs=1e-9)
    assert g.level(0)[0] == 0.0


def test_sobolev_sample_sup_normalized(ctx3, basis20):
    g = sobolev_sample(2.0, 6, ctx3, RandomSource(1), kind="random",
                       p=np.inf, basis=basis20)
    assert g.level(0)[0] == 0.0
    # the declared sup grid gives norm exactly 1 by construction
    assert g.norm2() < 1.5


def test_sobolev_sample_zonal(ctx3, basis20):
    g = sobolev_sample(2.0, 10, ctx3, RandomSource(2), kind="zonal-extremal",
                       p=2, basis=basis20)
    assert g.norm2() == pytest.approx(1.0, abs=1e-9)
    assert g.level(0)[0] == 0.0
    # level energies proportional to 1/k
    e = g.level_energies()
    ratios = np.array([e[k] * k for k in range(1, 11)])
    assert np.max(ratios) / np.min(ratios) == pytest.approx(1.0, abs=1e-9)
    # fractional integral scales level energies by theta^-gamma
    f = fractional_integral(g, 2.0)
    ef = f.level_energies()
    for k in range(1, 11):
        assert ef[k] == pytest.approx(e[k] * eigenvalue(k, ctx3) ** (-2.0),
                                      rel=1e-12)


def test_sobolev_sample_zonal_is_zonal(ctx3, basis20):
    # the sample must be a function of <x, pole> alone: its values on a
    # torus orbit with fixed |z1| are constant
    g = sobolev_sample(1.0, 6, ctx3, RandomSource(3), kind="zonal-extremal",
                       p=2, basis=basis20)
    angles = np.linspace(0, 2 * np.pi, 9, endpoint=False)
    v = 0.37
    pts = np.stack([np.sqrt(v) * np.ones(9) * np.exp(0j),
                    np.sqrt(1 - v) * np.exp(1j * angles)], axis=1)
    vals = basis20.synthesize(g, pts)
    assert np.max(np.abs(vals - vals[0])) < 1e-12


def test_sobolev_domain(ctx3):
    with pytest.raises(ValueError):
        sobolev_sample(0.0, 4, ctx3, RandomSource(0))
    with pytest.raises(ValueError):
        sobolev_sample(1.0, 0, ctx3, RandomSource(0))
    with pytest.raises(ValueError):
        sobolev_sample(1.0, 4, ctx3, RandomSource(0), kind="bogus")


# ---------------------------------------------------------------------------
# SpectralFunction plumbing
# ---------------------------------------------------------------------------


def test_spectral_function_shape_guard(ctx3):
    with pytest.raises(ValueError):
        SpectralFunction(ctx3, [np.zeros(2)])


def test_spectral_function_json_roundtrip(ctx3):
    F = random_function(ctx3, 4, seed=11)
    G = SpectralFunction.from_json(F.to_json())
    assert G.N == F.N
    for k in range(5):
        assert_allclose(G.level(k), F.level(k), atol=0)


def test_spectral_function_subtraction(ctx3):
    F = random_function(ctx3, 3, seed=12)
    Z = F - F
    assert Z.norm2() == 0.0
