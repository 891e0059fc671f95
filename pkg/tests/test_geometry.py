import numpy as np
import pytest
from scipy.integrate import solve_ivp

from surfpam.errors import CutLocus
from surfpam.geometry import Sphere, Torus, make_surface, sym_full, sym_nabla, sym_norm, sym_pair, symmetrize

T = Torus()
S = Sphere()


def test_exp_identity_and_flat_translation():
    np.testing.assert_allclose(T.exp(np.zeros(2), np.zeros(2)), np.zeros(2), atol=1e-15)
    q = T.exp(np.zeros(2), np.array([0.3, -0.2832]))
    np.testing.assert_allclose(q, [0.3, 6.0], atol=1e-4)
    assert np.all((q >= 0) & (q < 2 * np.pi))


def test_sphere_exp_against_geodesic_ode():
    p = np.array([1.0, 0.0, 0.0])
    v_amb = np.array([0.0, np.pi / 2, 0.0])

    def rhs(_, y):
        x, u = y[:3], y[3:]
        return np.concatenate([u, -np.dot(u, u) * x])

    sol = solve_ivp(rhs, (0.0, 1.0), np.concatenate([p, v_amb]), rtol=1e-12, atol=1e-12)
    ode = sol.y[:3, -1]
    q = S.exp(p, S.from_ambient(p, v_amb))
    np.testing.assert_allclose(q, ode, atol=1e-8)
    np.testing.assert_allclose(q, [0.0, 1.0, 0.0], atol=1e-12)


def test_log_examples():
    np.testing.assert_allclose(T.log(np.zeros(2), np.zeros(2)), 0.0, atol=1e-15)
    np.testing.assert_allclose(T.log(np.zeros(2), np.array([0.3, 6.0])), [0.3, 6.0 - 2 * np.pi], atol=1e-12)
    p = np.array([0.0, 0.6, 0.8])
    np.testing.assert_allclose(S.log(p, p), 0.0, atol=1e-12)
    with pytest.raises(CutLocus):
        S.log(p, -p)


def test_distance_examples():
    assert T.dist(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == pytest.approx(0.0, abs=1e-15)
    assert S.dist(np.array([1.0, 0, 0]), np.array([0, 0, 1.0])) == pytest.approx(np.pi / 2, abs=1e-12)
    assert T.dist(np.zeros(2), np.array([np.pi, np.pi])) == pytest.approx(np.pi * np.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("surface", [T, S], ids=["torus", "sphere"])
def test_exp_log_inversion_and_gauss_lemma(surface):
    rng = np.random.default_rng(0)
    p = surface.random_points(rng, 200)
    r = rng.uniform(0.0, 0.49 * surface.delta, 200)
    th = rng.uniform(0, 2 * np.pi, 200)
    v = np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
    q = surface.exp(p, v)
    np.testing.assert_allclose(surface.log(p, q), v, atol=1e-9)
    np.testing.assert_allclose(surface.dist(p, q), r, atol=1e-9)


@pytest.mark.parametrize("surface", [T, S], ids=["torus", "sphere"])
def test_quadrature_volume_and_frames(surface):
    _, w = surface.quadrature()
    assert w.sum() == pytest.approx(surface.volume, abs=1e-10)
    p = surface.random_points(np.random.default_rng(1), 50)
    e1, e2 = surface.frame(p)
    np.testing.assert_allclose(np.sum(e1 * e2, -1), 0.0, atol=1e-12)
    np.testing.assert_allclose(np.sum(e1 * e1, -1), 1.0, atol=1e-12)
    if surface.kind == "sphere":
        np.testing.assert_allclose(np.sum(e1 * p, -1), 0.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(p, axis=-1), 1.0, atol=1e-12)


def test_parallel_transport():
    rng = np.random.default_rng(2)
    v = rng.standard_normal(2)
    p, q = T.random_points(rng, 2)
    np.testing.assert_allclose(T.parallel_transport(p, q, v), v, atol=1e-15)
    ps = S.random_points(rng, 1)[0]
    np.testing.assert_allclose(S.parallel_transport(ps, ps, v), v, atol=1e-12)
    qs = S.exp(ps, np.array([0.7, -0.4]))
    w = S.parallel_transport(ps, qs, v)
    assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(v), abs=1e-10)


def test_holonomy_of_octant_triangle():
    a, b, c = np.eye(3)
    v_amb = np.array([0.0, 0.0, 1.0])  # tangent at a
    v = S.from_ambient(a, v_amb)
    w = S.parallel_transport(c, a, S.parallel_transport(b, c, S.parallel_transport(a, b, v)))
    x, y = S.to_ambient(a, v), S.to_ambient(a, w)
    angle = np.arccos(np.clip(np.dot(x, y) / (np.linalg.norm(x) * np.linalg.norm(y)), -1, 1))
    assert angle == pytest.approx(np.pi / 2, abs=1e-8)


def test_sym_nabla_examples():
    np.testing.assert_allclose(sym_nabla(T, lambda z: 0 * z[..., 0] + 3.0, np.zeros(2), 1), 0.0, atol=1e-10)
    np.testing.assert_allclose(sym_nabla(T, lambda z: np.sin(z[..., 0]), np.zeros(2), 1), [1.0, 0.0], atol=1e-8)
    north = np.array([0.0, 0.0, 1.0])
    np.testing.assert_allclose(sym_nabla(S, lambda z: z[..., 2], north, 1), 0.0, atol=1e-8)


@pytest.mark.parametrize("surface", [T, S], ids=["torus", "sphere"])
@pytest.mark.parametrize("ell", [1, 2, 3])
def test_sym_nabla_reproduces_jets(surface, ell):
    rng = np.random.default_rng(ell)
    p = surface.random_points(rng, 1)[0]
    stored = symmetrize(rng.standard_normal((2,) * ell))
    fact = np.prod(np.arange(1, ell + 1))

    def phi(z):
        return sym_pair(stored, surface.log(p, z)) / fact

    for i in range(1, 4):
        got = sym_nabla(surface, phi, p, i)
        expect = stored if i == ell else np.zeros(i + 1)
        np.testing.assert_allclose(got, expect, atol=1e-6)


def test_symmetrize_roundtrip_and_norm():
    T3 = np.array([0.5, -1.0, 2.0, 0.25])
    full = sym_full(T3)
    np.testing.assert_allclose(symmetrize(full), T3, atol=1e-15)
    assert sym_norm(T3) == pytest.approx(np.linalg.norm(full), abs=1e-14)
    v = np.array([0.3, -0.7])
    assert sym_pair(T3, v) == pytest.approx(np.einsum("ijk,i,j,k", full, v, v, v), abs=1e-14)


def test_make_surface():
    assert make_surface("torus").kind == "torus"
    assert make_surface("sphere").kind == "sphere"
    with pytest.raises(ValueError):
        make_surface("cube")
