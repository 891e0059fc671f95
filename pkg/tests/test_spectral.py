import numpy as np
import pytest
from scipy.integrate import quad

from surfpam.errors import TruncationWarning
from surfpam.spectral import (
    HeatKernelAsym,
    K_t_mode_integrals,
    K_t_time_integral,
    SphereBasis,
    TorusBasis,
    apply_Pt,
    counterterm,
    heat_kernel,
    k2t_increment,
    k2t_mode_weights,
    k2t_increment_modesum,
    legendre_series,
    legendre_table,
    make_basis,
)

TB = TorusBasis(16)
SB = SphereBasis(16)


@pytest.mark.parametrize("basis", [TB, SB], ids=["torus", "sphere"])
def test_basis_orthonormal(basis):
    S = basis.surface
    if S.kind == "torus":
        nodes, w = S.quadrature(2 * basis.band + 2)
    else:
        nodes, w = S.quadrature(basis.band + 2, 2 * basis.band + 2)
    E = basis.evaluate(nodes)
    G = (E * w[:, None]).T @ E
    np.testing.assert_allclose(G, np.eye(basis.n_modes), atol=1e-10)


@pytest.mark.parametrize("basis", [TB, SB], ids=["torus", "sphere"])
def test_eigenvalues_match_laplacian(basis):
    # -Delta e_k = lambda_k e_k checked through the second-order jet of a mode
    from surfpam.geometry import sym_nabla

    rng = np.random.default_rng(0)
    p = basis.surface.random_points(rng, 1)[0]
    for k in (1, 5, basis.n_modes // 3):
        f = lambda z, k=k: basis.evaluate(z)[..., k]
        H = sym_nabla(basis.surface, f, p, 2)
        lap = H[0] + H[2]
        assert -lap == pytest.approx(basis.eigenvalues[k] * f(p), abs=1e-4 * (1 + basis.eigenvalues[k]))


def test_heat_kernel_examples():
    p = np.array([0.3, 1.0])
    assert heat_kernel(TB, 50.0, p, p) == pytest.approx(1.0 / (4 * np.pi**2), abs=1e-12)
    for basis in (TB, SB):
        S = basis.surface
        nodes, w = S.quadrature(2 * basis.band + 2) if S.kind == "torus" else S.quadrature(basis.band + 2, 2 * basis.band + 2)
        q = S.random_points(np.random.default_rng(1), 1)[0]
        assert np.sum(w * heat_kernel(basis, 0.1, q, nodes)) == pytest.approx(1.0, abs=1e-8)


def test_sphere_heat_kernel_against_doubled_truncation():
    p = np.array([0.0, 0.0, 1.0])
    lhs = heat_kernel(SphereBasis(64), 0.05, p, p)
    ref = legendre_series([(2 * l + 1) / (4 * np.pi) * np.exp(-l * (l + 1) * 0.05) for l in range(129)], 1.0)
    assert lhs == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("basis", [TB, SB], ids=["torus", "sphere"])
def test_heat_kernel_symmetry_and_chapman_kolmogorov(basis):
    S = basis.surface
    rng = np.random.default_rng(2)
    p, q = S.random_points(rng, 3), S.random_points(rng, 3)
    np.testing.assert_allclose(heat_kernel(basis, 0.1, p, q), heat_kernel(basis, 0.1, q, p), atol=1e-12)
    nodes, w = S.quadrature(2 * basis.band + 2) if S.kind == "torus" else S.quadrature(basis.band + 2, 2 * basis.band + 2)
    for a, b in zip(p, q):
        ck = np.sum(w * heat_kernel(basis, 0.03, a, nodes) * heat_kernel(basis, 0.05, nodes, b))
        assert ck == pytest.approx(heat_kernel(basis, 0.08, a, b), abs=1e-6)


def test_below_resolved_window_warns():
    with pytest.warns(TruncationWarning):
        heat_kernel(TB, 0.1 * TB.t_min, np.zeros(2), np.zeros(2))


def test_diagonal_blowup_bounded():
    ts = np.geomspace(TB.t_min, 1.0, 12)
    vals = [t * heat_kernel(TB, t, np.zeros(2), np.zeros(2)) for t in ts]
    assert max(vals) < 1.0


def test_asymptotic_expansion_examples():
    S = TB.surface
    basis = TorusBasis(64)
    p = np.array([1.0, 1.0])
    near = S.exp(p, np.array([0.05, 0.02]))
    asym0 = HeatKernelAsym(S, 0)
    spec = heat_kernel(basis, 0.01, p, near)
    assert abs(asym0(0.01, p, near) - spec) / spec < 1e-3
    far = S.exp(p, np.array([S.delta / 4 + 0.01, 0.0]))
    assert asym0(0.01, p, far) == 0.0
    Sp = SB.surface
    big = SphereBasis(96)
    n = np.array([0.0, 0.0, 1.0])
    exact = heat_kernel(big, 0.005, n, n)
    e0 = abs(HeatKernelAsym(Sp, 0)(0.005, n, n) - exact)
    e1 = abs(HeatKernelAsym(Sp, 1)(0.005, n, n) - exact)
    assert e1 < e0


def test_apply_Pt_examples():
    rng = np.random.default_rng(3)
    c = rng.standard_normal(TB.n_modes)
    np.testing.assert_allclose(apply_Pt(TB, c, 0.0), c, atol=0)
    const = np.zeros(TB.n_modes)
    const[0] = 2.0
    np.testing.assert_allclose(apply_Pt(TB, const, 3.0), const, atol=1e-15)
    np.testing.assert_allclose(apply_Pt(TB, apply_Pt(TB, c, 0.02), 0.05), apply_Pt(TB, c, 0.07), atol=1e-12)


def test_K_t_mode_integrals_examples():
    np.testing.assert_allclose(K_t_mode_integrals(TB, 0.0), 0.0, atol=0)
    assert K_t_mode_integrals(np.array([1.0]), 1.0)[0] == pytest.approx(1 - np.exp(-1), abs=1e-12)
    assert K_t_mode_integrals(np.array([0.0]), 0.7)[0] == pytest.approx(0.7)
    a, b = K_t_mode_integrals(TB, 0.1), K_t_mode_integrals(TB, 0.2)
    assert np.all(b >= a)
    for lam in (0.0, 0.5, 40.0):
        ref = quad(lambda s: (1 - np.exp(-lam * s)) / lam if lam else s, 0, 0.3)[0]
        assert K_t_time_integral(np.array([lam]), 0.3)[0] == pytest.approx(ref, rel=1e-10)


def test_counterterm_matches_time_quadrature():
    p = np.array([0.4, 2.0])
    t = 0.2
    ref = quad(lambda s: heat_kernel(TB, s, p, p, warn=False), 0.0, t, limit=200, epsabs=1e-12)[0]
    assert counterterm(TB, t, p[None])[0] == pytest.approx(ref, abs=1e-8)
    assert counterterm(TB, t) == pytest.approx(ref, abs=1e-8)


def test_k2t_examples():
    rng = np.random.default_rng(4)
    p, q = TB.surface.random_points(rng, 2)
    assert k2t_increment(TB, 0.1, p, p) == pytest.approx(0.0, abs=1e-12)
    assert k2t_increment(TB, 0.1, p, q) == pytest.approx(k2t_increment_modesum(TB, 0.1, p, q), abs=1e-8)
    ps, qs = SB.surface.random_points(rng, 2)
    assert k2t_increment(SB, 0.1, ps, qs) == pytest.approx(k2t_increment_modesum(SB, 0.1, ps, qs), abs=1e-8)
    assert k2t_increment(SB, 0.1, ps, qs) >= 0
    for lam in (0.0, 1e-4, 3.0, 500.0):
        ref = quad(lambda s: s * np.exp(-lam * s), 0, 0.2)[0]
        assert k2t_mode_weights(np.array([lam]), 0.1)[0] == pytest.approx(ref, rel=1e-9)


def test_k2t_slope_in_acceptance_band():
    from surfpam.checks import check_k2t

    res = check_k2t()
    assert 1.7 <= res.metrics["slope"] <= 2.0


def test_legendre_helpers_and_factory():
    x = np.linspace(-1, 1, 7)
    tab = legendre_table(4, x)
    np.testing.assert_allclose(tab[:, 2], 0.5 * (3 * x**2 - 1), atol=1e-14)
    np.testing.assert_allclose(legendre_series([0, 0, 0, 1.0], x), 0.5 * (5 * x**3 - 3 * x), atol=1e-14)
    assert isinstance(make_basis("torus", 4), TorusBasis)
    assert isinstance(make_basis("sphere", 4), SphereBasis)
