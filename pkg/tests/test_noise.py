import numpy as np
import pytest
from scipy.integrate import quad

from surfpam.geometry import Torus
from surfpam.noise import (
    constant_noise,
    ensemble,
    excess_kurtosis,
    product_grid,
    resolved_noise_lambdas,
    sample,
    time_increment_moment,
    time_increment_study,
    variance_formula_modesum,
    wick_centering,
    wick_product_nodal,
    z_mean,
    z_moment_samples,
    z_pair,
    z_pair_time_quadrature,
    z_pairs_at_point,
    z_variance_study,
    zero_noise,
)
from surfpam.spectral import SphereBasis, TorusBasis, heat_kernel

T = Torus()
P0 = np.array([1.0, 2.0])


def test_sample_determinism_and_nesting():
    B = TorusBasis(8)
    np.testing.assert_array_equal(sample(B, 5).g, sample(B, 5).g)
    assert not np.array_equal(sample(B, 5).g, sample(B, 6).g)
    np.testing.assert_array_equal(sample(B, 5).g, sample(TorusBasis(16), 5).g[: B.n_modes])
    seeds = [nz.seed for nz in ensemble(B, 3, 4)]
    assert seeds == [(3, 0), (3, 1), (3, 2), (3, 3)]


def test_coefficient_variance_calibration():
    B = TorusBasis(4)
    G = np.stack([nz.g for nz in ensemble(B, 1, 1000)])
    var = G.var(axis=0, ddof=1)
    for v in (var[0], var[1], var[5], var.mean()):
        assert 0.91 <= v <= 1.09


def test_special_noises():
    B = TorusBasis(4)
    z = zero_noise(B)
    assert z.counterterm(0.3) == 0.0
    c = constant_noise(B, 2.0)
    np.testing.assert_allclose(c.xi(T.mesh(8)), 2.0, atol=1e-12)
    assert c.counterterm(0.3) == pytest.approx(0.3 / T.volume)


def test_z_pair_at_time_zero_and_time_quadrature_oracle():
    B = TorusBasis(8)
    nz = sample(B, 1)
    assert z_pair(nz, 0.0, P0, 0.5) == 0.0
    for k in (0, 5, 40):
        assert z_pair(nz, 0.2, P0, mode=k) == pytest.approx(z_pair_time_quadrature(nz, 0.2, P0, k), abs=1e-8)
    S = SphereBasis(6)
    ns = sample(S, 2)
    ps = np.array([0.0, 0.6, 0.8])
    assert z_pair(ns, 0.2, ps, mode=7) == pytest.approx(z_pair_time_quadrature(ns, 0.2, ps, 7), abs=1e-8)


@pytest.mark.parametrize("basis", [TorusBasis(8), SphereBasis(8)], ids=["torus", "sphere"])
def test_consistency_identity_pathwise(basis):
    nz = sample(basis, 4)
    rng = np.random.default_rng(5)
    P, Q = basis.surface.random_points(rng, 3), basis.surface.random_points(rng, 3)
    for p, q in zip(P, Q):
        S = float(nz.S(0.3, p, q))
        for k in range(0, basis.n_modes, 7):
            res = z_pair(nz, 0.3, q, mode=k) - z_pair(nz, 0.3, p, mode=k) - S * nz.g[k]
            assert abs(res) <= 1e-10


def test_time_coherence_of_S():
    nz = sample(TorusBasis(8), 6)
    p, q, r = T.random_points(np.random.default_rng(6), 3)
    assert nz.S(0.2, p, q) + nz.S(0.2, q, r) == pytest.approx(nz.S(0.2, p, r), abs=1e-12)


def test_wick_identity_and_counterterm():
    B = TorusBasis(8)
    nz = sample(B, 7)
    pts = T.mesh(16)
    s = 0.05
    lhs = wick_product_nodal(nz, s, pts) + nz.wick_diagonal(s)
    np.testing.assert_allclose(lhs, nz.xi(pts) * nz.Psxi(s, pts), atol=1e-10)
    t = 0.1
    ref = quad(lambda r: heat_kernel(B, r, P0, P0, warn=False), 0, t, epsabs=1e-12, limit=200)[0]
    assert nz.counterterm(t) == pytest.approx(ref, abs=1e-8)


def test_isometry():
    B = TorusBasis(6)
    phi = lambda z: np.exp(np.cos(z[..., 0]) + 0.5 * np.sin(z[..., 1]))
    nodes, w = product_grid(B)
    proj = (B.evaluate(nodes) * w[:, None]).T @ phi(nodes)
    vals = np.array([np.sum(w * nz.xi(nodes) * phi(nodes)) for nz in ensemble(B, 8, 2000)])
    m2 = np.mean(vals**2)
    se = np.std(vals**2) / np.sqrt(len(vals))
    assert abs(m2 - np.sum(proj**2)) <= 4 * se


def test_variance_formula_against_kernel_integrals():
    B = TorusBasis(3)
    s = 0.1
    n = 32
    nodes, w = T.quadrature(n)
    phi = 1.0 + 0.5 * np.cos(nodes[:, 0]) + 0.2 * np.sin(nodes[:, 0] + nodes[:, 1])
    E = B.evaluate(nodes)
    M = (E * (w * phi)[:, None]).T @ E
    closed = variance_formula_modesum(B, s, M)
    proj = E @ E.T
    p2s = (E * np.exp(-2 * B.eigenvalues * s)) @ E.T
    ps = (E * np.exp(-B.eigenvalues * s)) @ E.T
    wphi = w * phi
    direct = wphi @ (proj * p2s) @ wphi + wphi @ (ps**2) @ wphi
    assert closed == pytest.approx(direct, abs=1e-8)


def test_wick_part_centered_and_mean_of_Z():
    B = TorusBasis(32)
    lams = resolved_noise_lambdas(B)
    smp = z_moment_samples(B, 0.5, P0, lams, 200, 0, ("bump", "dx"), wick=True)
    W, Z = smp[:, 0], smp[:, 1]
    m, se = wick_centering(W)
    assert np.all(np.abs(m) <= 3 * se)
    m, se = wick_centering(Z)
    assert np.all(np.abs(m - z_mean(B, 0.5, P0, lams, ("bump", "dx"))) <= 3 * se)


def test_z_pairs_at_point_matches_direct_pairing():
    B = TorusBasis(24)
    nz = sample(B, 9)
    direct = z_pair(nz, 0.5, P0, 0.5, "dx")
    grid = z_pairs_at_point(nz, 0.5, P0, [0.5], ("dx",))
    assert grid[0, 0] == pytest.approx(direct, abs=1e-6)


def test_variance_stabilizes_under_refinement():
    vals = []
    for K in (32, 64):
        B = TorusBasis(K)
        s = z_moment_samples(B, 0.5, P0, [0.5], 200, 0, ("bump",))
        vals.append(np.mean((s - z_mean(B, 0.5, P0, [0.5], ("bump",))) ** 2))
    assert abs(vals[1] - vals[0]) / vals[1] <= 0.2


def test_unrenormalized_mean_grows_with_log_K():
    means = []
    for K in (24, 48, 96):
        s = z_moment_samples(TorusBasis(K), 0.5, P0, [0.5], 200, 0, ("bump",), renormalize=False)
        means.append(s.mean())
    inc = np.diff(means)
    assert np.all(inc > 0)
    assert inc[1] / inc[0] == pytest.approx(1.0, abs=0.3)


def test_variance_study_report():
    B = TorusBasis(64)
    rep = z_variance_study(B, 0.5, P0, n_seeds=50, profiles=("bump",))
    assert np.isfinite(rep.slope) and rep.target == 0.0 and rep.mode == "lower"
    raw = z_variance_study(B, 0.5, P0, n_seeds=50, profiles=("bump",), centered=False)
    assert raw.label != rep.label


@pytest.mark.slow
def test_time_increment_examples():
    B = TorusBasis(96)
    assert time_increment_moment(B, 0.5, 0.5, P0, 0.125) == 0.0
    rep = time_increment_study(B, 0.5, P0, 0.125, [0.1, 0.05, 0.025], n_seeds=200, kappa=0.5, tol=0.1)
    assert rep.slope >= 0.4, rep.summary()
    smp = z_moment_samples(B, 0.5, P0, [0.125], 200, 0, ("bump",))
    k = excess_kurtosis(smp)
    assert np.all(np.isfinite(k)) and np.all(k > 0)
