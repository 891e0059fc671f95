import numpy as np
import pytest
from scipy.integrate import quad

from surfpam.errors import ConfigError
from surfpam.noise import constant_noise, sample, zero_noise
from surfpam.solver import (
    K_op,
    SolverConfig,
    SolverSpace,
    constant_noise_solution,
    default_initial,
    direct_solve,
    exp_weights,
    exponent_chain,
    heat_integral_coeffs,
    lift_initial,
    picard_solve,
    reconstruct_K_quadrature,
    relative_l2,
    schauder_distribution_check,
    time_integral_helper,
)
from surfpam.spectral import TorusBasis, apply_Pt


@pytest.fixture(scope="module")
def space():
    return SolverSpace(SolverConfig(K=8, M=16))


def test_default_config_and_exponent_chain():
    cfg = SolverConfig()
    assert cfg.gamma0 == pytest.approx(0.4)
    assert cfg.gamma_in == pytest.approx(1.5 - 4.0 / 3.0)
    assert cfg.eps == pytest.approx((2 * -1.2 + 8 / 3 - cfg.gamma_in) / 4)
    rows = exponent_chain(cfg.alpha, cfg.gamma, cfg.gamma0, cfg.eps)
    assert all(r[4] for r in rows)
    assert not all(r[4] for r in exponent_chain(-1.2, 1.5, 0.4, 0.5))


@pytest.mark.parametrize(
    "kw",
    [{"alpha": -0.9}, {"alpha": -1.4}, {"gamma": 1.2}, {"gamma": 1.7}, {"T": 0.0}, {"M": 0}, {"surface": "cube"}, {"N": -1.0}, {"gamma0": 0.9}],
)
def test_config_validation_errors(kw):
    with pytest.raises(ConfigError):
        SolverConfig(**kw)


def test_time_integral_helper_examples():
    out = time_integral_helper(0.0, -1.5, 0.0, 0.3, 0.3)
    assert out["near"] == pytest.approx(0.3)
    near = time_integral_helper(-0.5, -1.5, 0.1, 0.01, 1.0)
    ref = quad(lambda u: u**-0.5, 0, 0.01)[0]
    assert near["near"] >= ref
    tail = quad(lambda u: u**-1.5, 0.01, 1.0)[0]
    assert near["far"] >= tail
    with pytest.raises(ConfigError):
        time_integral_helper(-1.2, -1.5, 0.0, 0.1, 1.0)
    with pytest.raises(ConfigError):
        time_integral_helper(-0.5, -0.5, 0.0, 0.1, 1.0)


def test_exp_weights_against_quadrature():
    for lam in (0.0, 1e-5, 2.0, 300.0):
        E, A0, A1 = exp_weights(np.array([lam]), 0.1)
        assert A0[0] == pytest.approx(quad(lambda u: np.exp(-lam * u), 0, 0.1)[0], rel=1e-10)
        assert A1[0] == pytest.approx(quad(lambda u: np.exp(-lam * u) * u / 0.1, 0, 0.1)[0], rel=1e-10)
        assert E[0] == pytest.approx(np.exp(-lam * 0.1))


def test_lift_initial_examples(space):
    u0 = np.zeros(space.basis.n_modes)
    u0[0] = 3.0 * np.sqrt(space.surface.volume)
    V = lift_initial(space, u0)
    np.testing.assert_allclose(V.values[..., 0], 3.0, atol=1e-12)
    np.testing.assert_allclose(V.values[..., 1:], 0.0, atol=1e-12)
    kv, kind = space.basis.wavevectors, space.basis.kind
    i = np.flatnonzero((kv[:, 0] == 1) & (kv[:, 1] == 0) & (kind == 2))[0]
    u0 = np.zeros(space.basis.n_modes)
    u0[i] = np.pi * np.sqrt(2.0)  # sin(x1)
    V = lift_initial(space, u0)
    x = space.points[:, 0]
    for j, t in enumerate(space.times):
        np.testing.assert_allclose(V.values[j, :, 0], np.exp(-t) * np.sin(x), atol=1e-12)
        np.testing.assert_allclose(V.values[j, :, 2], np.exp(-t) * np.cos(x), atol=1e-12)
        np.testing.assert_allclose(V.values[j, :, 3], 0.0, atol=1e-12)
    assert np.isfinite(space.norm(lift_initial(space), space.config.gamma, 1.0))


def test_default_initial_is_the_documented_function(space):
    x = space.points
    expect = 1.0 + 0.5 * np.cos(x[:, 0]) + 0.3 * np.sin(x[:, 1])
    np.testing.assert_allclose(space.grid.synth(default_initial(space.basis)), expect, atol=1e-12)


def test_K_op_zero_and_slots(space):
    zero = space.modelled("V", np.zeros((len(space.times), space.grid.size, 4)))
    assert np.all(K_op(space, zero).values == 0)
    vals = np.zeros_like(zero.values)
    vals[..., 0] = 1.0
    f = space.modelled("V", vals)
    h, H = K_op(space, f, return_coeffs=True)
    np.testing.assert_array_equal(h.values[..., 1], f.values[..., 0])
    with pytest.raises(ValueError):
        K_op(space, lift_initial(space))


def test_K_op_unit_xi_against_mode_closed_form(space):
    # R_s f(s) = xi - 0 for f = Xi, so h_1(t) = K_t xi exactly, mode by mode
    vals = np.zeros((len(space.times), space.grid.size, 4))
    vals[..., 0] = 1.0
    h = K_op(space, space.modelled("V", vals))
    np.testing.assert_allclose(h.values[..., 0], space.kxi, atol=1e-8)
    np.testing.assert_allclose(h.values[..., 2:4], 0.0, atol=1e-8)


def test_R_K_identity_against_quadrature(space):
    vals = np.zeros((len(space.times), space.grid.size, 4))
    vals[..., 0] = space.grid.synth(default_initial(space.basis))[None, :]
    vals[..., 1] = 0.5
    f = space.modelled("V", vals)
    h = K_op(space, f)
    Rc = space.reconstruct_V(f)
    base = space.grid.analyze(vals[0, :, 0] * space.xi)
    const = space.grid.analyze(np.full(space.grid.size, 0.5))

    def Rf(s):
        return base - space.noise.counterterm(s) * const if space.config.renormalize else base

    np.testing.assert_allclose(Rc[3], Rf(space.times[3]), atol=1e-12)
    T = space.times[-1]
    ref = reconstruct_K_quadrature(space, Rf, T)
    # the integrator is exact for piecewise-linear data; the counterterm is not linear in s
    assert np.abs(h.values[-1, :, 0] - ref).max() <= 1e-4 * np.abs(ref).max()


def test_heat_integral_of_constant_source():
    sp = SolverSpace(SolverConfig(K=4, M=8, T=0.2))
    r = np.zeros((9, sp.basis.n_modes))
    r[:, 0] = 1.0
    H = heat_integral_coeffs(sp, r)
    np.testing.assert_allclose(H[:, 0], sp.times, atol=1e-14)


def test_picard_zero_noise_is_heat_flow():
    cfg = SolverConfig(K=8, M=16)
    res = picard_solve(cfg, noise=zero_noise(TorusBasis(8)))
    sp = res.space
    heat = np.stack([sp.grid.synth(apply_Pt(sp.basis, default_initial(sp.basis), t)) for t in sp.times])
    np.testing.assert_allclose(res.U, heat, atol=1e-8)


def test_constant_noise_closed_form():
    cfg = SolverConfig(K=8, M=32)
    nz = constant_noise(TorusBasis(8), 1.5)
    res = picard_solve(cfg, noise=nz)
    ref = constant_noise_solution(res.space, 1.5)
    assert np.abs(res.U - ref).max() <= 1e-6
    d = direct_solve(cfg, noise=nz)
    assert np.abs(d.U - ref).max() <= 1e-6


def test_direct_zero_noise_and_step_halving():
    cfg = SolverConfig(K=8, M=8)
    d = direct_solve(cfg, noise=zero_noise(TorusBasis(8)))
    sp = d.space
    heat = sp.grid.synth(apply_Pt(sp.basis, default_initial(sp.basis), cfg.T))
    np.testing.assert_allclose(d.U[-1], heat, atol=1e-12)
    nz = sample(TorusBasis(8), 0)
    cfg = SolverConfig(K=8, T=0.05)
    sols = [direct_solve(cfg, noise=nz, steps=m).U[-1] for m in (8, 16, 32, 256)]
    e = [np.abs(s - sols[-1]).max() for s in sols[:3]]
    assert e[0] / e[1] == pytest.approx(4.0, abs=0.6)
    assert e[1] / e[2] == pytest.approx(4.0, abs=0.6)


def test_picard_contracts_and_agrees_with_direct():
    cfg = SolverConfig(K=8, T=0.05, M=64, seed=0)
    res = picard_solve(cfg)
    assert res.converged and res.iterations <= 8
    assert res.factor < 0.5
    d = direct_solve(cfg, space=res.space)
    assert relative_l2(res.space, res.U[-1], d.U[-1]) <= 1e-2


def test_schauder_distribution_check_examples():
    nz = sample(TorusBasis(32), 0)
    p = np.array([[1.0, 2.0]])
    assert nz.S(0.5, p[0], p[0]) == 0.0
    rep = schauder_distribution_check(nz, p, [0.8, 0.4, 0.2], 0.5)
    assert rep.slope >= 0.65, rep.summary()
