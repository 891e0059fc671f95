import numpy as np
import pytest
from scipy.integrate import quad

from surfpam.errors import ScaleTooLarge, UnderResolved
from surfpam.geometry import Sphere, Torus
from surfpam.holder import (
    DEFAULT_LAMBDAS,
    MeshDistribution,
    TestProfile,
    chart_pair,
    exponent_report,
    fit_exponent,
    fit_slope,
    holder_pos_norm,
    resolved_scales,
    scaled_pair,
    schwartz_pair_bound_check,
    spectral_pair,
)
from surfpam.noise import NOISE_LAMBDAS, ensemble, sample
from surfpam.spectral import ModeField, SphereBasis, TorusBasis

T = Torus()
S = Sphere()


def one(z):
    return np.ones(z.shape[:-1])


def test_torus_constant_pairs_to_one():
    p = T.random_points(np.random.default_rng(0), 5)
    for lam in (0.5, 0.1, 0.01):
        np.testing.assert_allclose(scaled_pair(T, one, p, lam), 1.0, atol=1e-8)


def test_sphere_constant_pairing_matches_radial_integral():
    prof = TestProfile("bump")
    p = np.array([0.0, 0.0, 1.0])
    vals = []
    for lam in (0.5, 0.25, 0.05):
        ref = quad(lambda r: prof.radial(r) * np.sin(lam * r) / lam * 2 * np.pi, 0, 1, epsabs=1e-13)[0]
        got = scaled_pair(S, one, p, lam)
        assert got == pytest.approx(ref, abs=1e-8)
        vals.append(got)
    assert abs(vals[-1] - 1) < abs(vals[0] - 1) and abs(vals[-1] - 1) < 1e-3


def test_mode_pairing_bounded_and_mollifier_limit():
    basis = TorusBasis(4)
    p = T.random_points(np.random.default_rng(1), 4)
    for k in (1, 7, 30):
        f = lambda z, k=k: basis.evaluate(z)[..., k]
        sup = np.abs(basis.evaluate(T.mesh(64))[:, k]).max()
        for lam in (0.5, 0.1):
            assert np.all(np.abs(scaled_pair(T, f, p, lam)) <= sup + 1e-12)
        np.testing.assert_allclose(scaled_pair(T, f, p, 1e-3), f(p), atol=1e-4)


@pytest.mark.parametrize("basis", [TorusBasis(48), SphereBasis(48)], ids=["torus", "sphere"])
def test_quadrature_pairing_matches_mode_pairing(basis):
    c = np.random.default_rng(2).standard_normal(basis.n_modes)
    field = ModeField(basis, c)
    p = basis.surface.random_points(np.random.default_rng(3), 6)
    for lam in (0.5, 0.25):
        np.testing.assert_allclose(scaled_pair(basis.surface, field, p, lam), spectral_pair(basis, c, p, lam), atol=1e-6)


def test_nodal_distribution_pairing_consistent():
    basis = TorusBasis(24)
    c = np.random.default_rng(4).standard_normal(basis.n_modes)
    nodes, w = T.quadrature(512)
    nodal = MeshDistribution.from_nodal(T, nodes, w, basis.synth(c, nodes))
    modes = MeshDistribution.from_modes(basis, c)
    p = T.random_points(np.random.default_rng(5), 3)
    np.testing.assert_allclose(scaled_pair(T, nodal, p, 0.5), scaled_pair(T, modes, p, 0.5), atol=1e-6)


def test_locality():
    p = np.array([1.0, 1.0])
    lam = 0.3
    f = lambda z: np.cos(z[..., 0]) + z[..., 1]
    g = lambda z: f(z) + np.where(T.dist(p, z) > lam, 100.0, 0.0)
    assert scaled_pair(T, f, p, lam) == pytest.approx(scaled_pair(T, g, p, lam), abs=1e-12)


def test_scale_errors():
    basis = TorusBasis(8)
    field = ModeField(basis, np.ones(basis.n_modes))
    with pytest.raises(ScaleTooLarge):
        scaled_pair(T, one, np.zeros(2), 3.1)
    with pytest.raises(UnderResolved):
        scaled_pair(T, field, np.zeros(2), basis.resolution)


def test_fit_exponent_smooth_and_first_order_zero():
    f = lambda z: np.sin(z[..., 0]) + np.cos(2 * z[..., 1])
    pts = T.random_points(np.random.default_rng(6), 6)
    rep = fit_exponent(T, f, pts, DEFAULT_LAMBDAS, 0.0, 0.1)
    assert rep.passed, rep.summary()
    p0 = np.array([0.0, 0.3, np.sqrt(1 - 0.09)])
    omega = np.array([0.6, -0.8])
    lin = lambda z: S.log(p0, z, check=False) @ omega
    rep = fit_exponent(S, lin, p0, DEFAULT_LAMBDAS, 1.0, 0.1, profiles=("dx", "dy"))
    assert rep.passed, rep.summary()


def test_fit_exponent_white_noise():
    basis = TorusBasis(64)
    G = np.stack([nz.g for nz in ensemble(basis, 7, 100)], axis=-1)

    def field(z):
        return basis.evaluate(z) @ G

    field.resolution = basis.resolution
    pts = T.random_points(np.random.default_rng(7), 2)
    lams = resolved_scales(NOISE_LAMBDAS, basis.resolution)
    assert len(lams) >= 2
    rep = fit_exponent(T, field, pts, lams, -1.0, 0.2)
    assert rep.passed, rep.summary()


def test_chart_pair_agrees_on_exponents():
    f = lambda z: np.exp(z[..., 0]) + z[..., 2] ** 2
    p = S.random_points(np.random.default_rng(8), 3)
    lams = np.array(DEFAULT_LAMBDAS[:4])
    a = [np.abs(scaled_pair(S, f, p, l, TestProfile("dx"))).max() for l in lams]
    b = [np.abs(chart_pair(S, f, p, l, TestProfile("dx"))).max() for l in lams]
    assert abs(fit_slope(lams, a)[0] - fit_slope(lams, b)[0]) <= 0.1
    basis = SphereBasis(48)
    nz = sample(basis, 3)
    noise = ModeField(basis, nz.g)
    lams = resolved_scales(DEFAULT_LAMBDAS, basis.resolution)
    a = [np.abs(scaled_pair(S, noise, p, l)).max() for l in lams]
    b = [np.abs(chart_pair(S, noise, p, l)).max() for l in lams]
    assert abs(fit_slope(lams, a)[0] - fit_slope(lams, b)[0]) <= 0.1


def test_holder_pos_norm_examples():
    for n in (64, 128):
        pts = T.mesh(n)
        assert holder_pos_norm(T, pts, np.full(len(pts), -2.5), 0.5) == pytest.approx(2.5)
    vals = [holder_pos_norm(T, T.mesh(n), np.sin(T.mesh(n)[:, 0]), 0.5, chunk=256) for n in (64, 128)]
    assert vals[0] >= 1.0
    assert abs(vals[1] - vals[0]) / vals[1] <= 0.02
    with pytest.raises(ValueError):
        holder_pos_norm(T, T.mesh(8), np.zeros(64), 1.5)


def test_schwartz_pair_bound_check():
    basis = TorusBasis(64)
    noise = ModeField(basis, sample(basis, 11).g)
    assert schwartz_pair_bound_check(T, noise, np.zeros(2), 0.25, N=2, gamma=-1.0) is None
    out = schwartz_pair_bound_check(T, noise, T.random_points(np.random.default_rng(9), 4), 0.25, N=4, gamma=-1.0)
    assert out["passed"]


def test_exponent_report_modes():
    lams = np.array([0.5, 0.25, 0.125])
    rep = exponent_report("x", lams, 3 * lams**2, 2.0, 0.01)
    assert rep.passed and rep.slope == pytest.approx(2.0)
    assert not exponent_report("x", lams, 3 * lams**2, 2.5, 0.1).passed
    assert exponent_report("x", lams, 3 * lams**2, 1.0, 0.1, mode="lower").passed
    zero = exponent_report("x", lams, np.zeros(3), 1.0, 0.1, mode="lower")
    assert zero.slope == np.inf and zero.passed
    d = rep.to_dict()
    for key in ("scales", "magnitudes", "slope", "residual", "window", "target", "tolerance", "passed"):
        assert key in d
    np.testing.assert_allclose(resolved_scales([0.5, 0.1, 0.01], 0.02), [0.5, 0.1])
