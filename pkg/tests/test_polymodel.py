import numpy as np
import pytest

from surfpam.geometry import Sphere, Torus, sym_nabla
from surfpam.polymodel import (
    JetField,
    PolyJet,
    certify_model,
    flat_gamma,
    gamma_order1_closed,
    gamma_transport,
    jet_seminorm,
    lift_to_jets,
    pi_eval,
    taylor_approx,
    taylor_remainder_report,
)

T = Torus()
S = Sphere()


def _jet(base, comps):
    return PolyJet(np.asarray(base, dtype=float), [np.asarray(c, dtype=float) for c in comps])


def test_pi_eval_examples():
    p = np.array([0.0, 0.6, 0.8])
    z = S.exp(p, np.array([[0.1, 0.2], [-0.3, 0.05]]))
    np.testing.assert_allclose(pi_eval(S, _jet(p, [[1.0], [0, 0]]), z), 1.0, atol=1e-15)
    omega = _jet(p, [[0.0], [0.4, -1.1]])
    assert pi_eval(S, omega, p) == pytest.approx(0.0, abs=1e-15)
    x = np.array([1.0, 2.0])
    X2 = _jet(x, [[0.0], [0, 0], [1.0, 0, 0]])
    zt = x + np.array([[0.2, -0.1], [-0.3, 0.4]])
    np.testing.assert_allclose(pi_eval(T, X2, zt), 0.5 * (zt[:, 0] - x[0]) ** 2, atol=1e-14)


def test_gamma_identity_and_flat_binomial():
    q = np.array([0.5, 0.5])
    jet = _jet(q, [[0.3], [1.0, -2.0], [0.5, 0.1, 0.7]])
    same = gamma_transport(T, jet, q)
    for a, b in zip(same.comps, jet.comps):
        np.testing.assert_allclose(a, b, atol=1e-10)
    # X^2 (first coordinate, stored with the 1/2! normalization) re-expanded at p
    p = np.array([0.8, 0.3])
    jx = _jet(q, [[0.0], [0, 0], [1.0, 0, 0]])
    out = flat_gamma(T, jx, p)
    h = (p - q)[0]
    np.testing.assert_allclose(out.comps[0], [0.5 * h**2], atol=1e-14)
    np.testing.assert_allclose(out.comps[1], [h, 0.0], atol=1e-14)
    np.testing.assert_allclose(out.comps[2], [1.0, 0, 0], atol=1e-14)
    num = gamma_transport(T, jx, p)
    for a, b in zip(num.comps, out.comps):
        np.testing.assert_allclose(a, b, atol=1e-10)


def test_order_one_closed_form_and_two_point_agreement():
    rng = np.random.default_rng(0)
    q = S.random_points(rng, 1)[0]
    p = S.exp(q, np.array([0.2, -0.15]))
    jet = _jet(q, [[0.7], [0.3, -0.9]])
    num = gamma_transport(S, jet, p)
    closed = gamma_order1_closed(S, jet, p)
    for a, b in zip(num.comps, closed.comps):
        np.testing.assert_allclose(a, b, atol=1e-8)
    for z in (p, q):
        assert pi_eval(S, closed, z) == pytest.approx(pi_eval(S, jet, z), abs=1e-8)


def test_sphere_order_one_transport_error_slope():
    rng = np.random.default_rng(1)
    q = S.random_points(rng, 1)[0]
    jet = _jet(q, [[0.0], [1.0, 0.5]])
    p = S.exp(q, np.array([0.3, 0.1]))
    G = gamma_transport(S, jet, p)
    ds = np.array([0.2, 0.1, 0.05, 0.025])
    errs = []
    for d in ds:
        z = S.exp(p, d * np.array([[1.0, 0], [0, 1.0], [-0.6, 0.8]]))
        errs.append(np.abs(pi_eval(S, jet, z) - pi_eval(S, G, z)).max())
    slope = np.polyfit(np.log(ds), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.15)


def test_cocycle_exact_on_torus():
    r = np.array([1.0, 2.0])
    q = T.exp(r, np.array([0.4, -0.7]))
    p = T.exp(r, np.array([-0.5, 0.3]))
    jet = _jet(r, [[0.2], [1.0, -1.0], [0.3, 0.2, -0.4], [0.1, 0.0, 0.5, 0.2]])
    direct = flat_gamma(T, jet, p)
    composed = flat_gamma(T, flat_gamma(T, jet, q), p)
    for a, b in zip(direct.comps, composed.comps):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_jet_realization_recovers_components():
    p = np.array([0.0, 0.6, 0.8])
    comps = [[0.4], [1.0, -0.5], [0.3, 0.7, -0.2], [0.1, 0.4, -0.3, 0.6]]
    jet = _jet(p, comps)
    for ell in range(1, 4):
        got = sym_nabla(S, lambda z: pi_eval(S, jet, z, check=False), p, ell)
        np.testing.assert_allclose(got, comps[ell], atol=1e-6)


def test_taylor_examples():
    p0 = np.zeros(2)
    jet, tay = taylor_approx(T, lambda z: 0 * z[..., 0] + 2.0, p0, 3)
    np.testing.assert_allclose(tay(np.array([[0.1, 0.2]])), 2.0, atol=1e-10)
    jet, tay = taylor_approx(T, lambda z: np.sin(z[..., 0]), p0, 2)
    np.testing.assert_allclose(jet.comps[1], [1.0, 0.0], atol=1e-8)
    np.testing.assert_allclose(jet.comps[2], 0.0, atol=1e-8)
    z = np.array([[0.1, 0.3], [-0.2, 0.05]])
    np.testing.assert_allclose(tay(z), z[:, 0], atol=1e-8)
    north = np.array([0.0, 0.0, 1.0])
    rep = taylor_remainder_report(S, lambda z: z[..., 2], north, 2, tol=0.2)
    assert rep.slope == pytest.approx(4.0, abs=0.2)


def test_certify_model_examples():
    pts_t = T.random_points(np.random.default_rng(3), 3)
    rep = certify_model(T, 1, pts_t)
    assert all(r.slope == np.inf for r in rep.transport)
    pts = S.random_points(np.random.default_rng(4), 3)
    rep1 = certify_model(S, 1, pts)
    assert rep1.transport[0].slope >= 1.85
    rep2 = certify_model(S, 2, pts)
    assert rep2.transport[0].slope >= 2.8
    assert rep1.passed and rep2.passed
    d = rep2.to_dict()
    assert d["profile_family"] == ["bump", "dx", "dy"]


def test_lift_to_jets_examples():
    pts = T.mesh(16)
    const = lift_to_jets(T, lambda z: 0 * z[..., 0] + 1.5, pts, 1.5)
    np.testing.assert_allclose(const.jets.comps[0][:, 0], 1.5, atol=1e-12)
    np.testing.assert_allclose(const.jets.comps[1], 0.0, atol=1e-8)
    assert jet_seminorm(const)["seminorm"] == pytest.approx(0.0, abs=1e-8)
    sf = lift_to_jets(T, lambda z: np.sin(z[..., 0]), pts, 1.5)
    np.testing.assert_allclose(sf.jets.comps[1][:, 0], np.cos(pts[:, 0]), atol=1e-8)
    assert np.isfinite(jet_seminorm(sf)["seminorm"])


def test_sphere_lift_seminorm_stable_under_refinement():
    f = lambda z: np.exp(0.5 * z[..., 0]) + z[..., 1] * z[..., 2]
    vals = []
    for n in (512, 1024):
        field = lift_to_jets(S, f, S.mesh(n), 2.5, h=0.05)
        assert isinstance(field, JetField) and field.order == 2
        vals.append(jet_seminorm(field, radius=0.3)["seminorm"])
    assert abs(vals[1] - vals[0]) / vals[1] <= 0.05
