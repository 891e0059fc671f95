"""Truncated white noise, Wick products and the renormalized family ``Z^t_p``.

White noise truncated to the retained eigenmodes is ``xi = sum_k g_k e_k``
with i.i.d. standard normal ``g_k``.  With ``K_t = int_0^t P_s ds`` the
renormalized distribution

    Z^t_p = int_0^t (xi <> P_s xi - P_s xi(p) xi) ds
          = xi * (K_t xi - K_t xi(p)) - c_t,

where ``c_t = sum_k I_k(t) e_k^2`` and ``I_k(t) = (1 - exp(-lambda_k t)) /
lambda_k``.  All pairings below are evaluated through this closed form;
time quadrature is used only by the oracle :func:`z_pair_time_quadrature`.
"""
from __future__ import annotations


import numpy as np

from .errors import UnderResolved
from .holder import (
    DEFAULT_LAMBDAS,
    RESOLVED_SPACINGS,
    TestProfile,
    _freq_grid,
    _torus_multiplier,
    exponent_report,
    scaled_pair,
    torus_moment_field,
    torus_pair_field,
    torus_spectrum,
)
from .spectral import EigenBasis, K_t_mode_integrals, TorusBasis

NOISE_LAMBDAS = (0.5,) + tuple(DEFAULT_LAMBDAS)


class NoiseRealization:
    """One sample of truncated white noise together with its derived fields.

    Parameters
    ----------
    basis : EigenBasis
    g : ndarray, shape (n_modes,)
        Mode coefficients ``<xi, e_k>``.
    seed : int or tuple, optional
        Seed the coefficients were drawn from (``None`` for deterministic noise).
    active : ndarray of bool, optional
        Modes carrying noise.  The Wick counterterm sums over these modes
        only; by default all retained modes are active.
    """

    def __init__(self, basis: EigenBasis, g, seed=None, active=None):
        self.basis = basis
        self.surface = basis.surface
        self.g = np.asarray(g, dtype=float)
        if self.g.shape != (basis.n_modes,):
            raise ValueError("coefficient vector must have one entry per mode")
        self.seed = seed
        self.active = np.ones(basis.n_modes, dtype=bool) if active is None else np.asarray(active, dtype=bool)
        self._grid_cache = {}

    @property
    def K(self):
        return self.basis.band

    @property
    def resolution(self):
        return self.basis.resolution

    # -- mode coefficients ----------------------------------------------------
    def Kxi_coeffs(self, t):
        """Mode coefficients of ``K_t xi``."""
        return K_t_mode_integrals(self.basis, t) * self.g

    def counterterm(self, t):
        """Spatially constant Wick counterterm ``c_t`` (sum over active modes)."""
        I = K_t_mode_integrals(self.basis, t)
        return float(np.sum(I[self.active]) / self.surface.volume)

    def wick_diagonal(self, s):
        """``q_s = sum_k exp(-lambda_k s) e_k^2`` over active modes (constant)."""
        lam = self.basis.eigenvalues[self.active]
        return float(np.sum(np.exp(-lam * s)) / self.surface.volume)

    # -- nodal evaluations ------------------------------------------------------
    def xi(self, points):
        return self.basis.synth(self.g, points)

    def Kxi(self, t, points):
        return self.basis.synth(self.Kxi_coeffs(t), points)

    def Psxi(self, s, points):
        return self.basis.synth(np.exp(-self.basis.eigenvalues * s) * self.g, points)

    def S(self, t, p, q):
        """``S^t(p <- q) = K_t xi(p) - K_t xi(q)``."""
        return self.Kxi(t, p) - self.Kxi(t, q)

    def z_sampler(self, t, p, renormalize=True):
        """Sampler of ``Z^t_p`` for use with :func:`~surfpam.holder.scaled_pair`.

        ``p`` may be a batch ``(P, amb)``; the returned object is then
        ``batched`` and evaluates the field belonging to the chunk's points.
        """
        return _ZSampler(self, t, p, renormalize)

    def grid(self, n=None):
        """Cached :class:`TorusNoiseGrid` (torus only)."""
        key = n
        if key not in self._grid_cache:
            self._grid_cache[key] = TorusNoiseGrid(self, n)
        return self._grid_cache[key]


class _ZSampler:
    batched = True

    def __init__(self, noise, t, p, renormalize):
        self.noise = noise
        self.t = t
        self.p = np.atleast_2d(np.asarray(p, dtype=float))
        self.kp = noise.Kxi(t, self.p)
        self.c = noise.counterterm(t) if renormalize else 0.0
        self.resolution = noise.resolution
        self._coeffs = noise.Kxi_coeffs(t)

    def __call__(self, z, sl=slice(None)):
        B = self.noise.basis
        vals = B.synth(np.stack([self.noise.g, self._coeffs], axis=-1), z)
        kp = self.kp[sl].reshape(self.kp[sl].shape + (1,) * (z.ndim - 2))
        return vals[..., 0] * (vals[..., 1] - kp) - self.c


def sample(basis: EigenBasis, seed) -> NoiseRealization:
    """Draw truncated white noise; coefficients are nested across truncations.

    ``seed`` may be an integer or a tuple ``(base, index)`` as used by
    :func:`ensemble`.
    """
    g = np.random.default_rng(seed).standard_normal(basis.n_modes)
    return NoiseRealization(basis, g, seed=seed)


def ensemble(basis: EigenBasis, base_seed, n):
    """Generator of ``n`` independent realizations with seeds ``(base_seed, i)``."""
    for i in range(n):
        yield sample(basis, (int(base_seed), i))


def zero_noise(basis: EigenBasis) -> NoiseRealization:
    """``xi = 0`` with no active modes (so the counterterm vanishes too)."""
    return NoiseRealization(basis, np.zeros(basis.n_modes), active=np.zeros(basis.n_modes, dtype=bool))


def constant_noise(basis: EigenBasis, value) -> NoiseRealization:
    """Noise carried by the constant mode only, with nodal value ``value``."""
    g = np.zeros(basis.n_modes)
    g[0] = value * np.sqrt(basis.surface.volume)
    active = np.zeros(basis.n_modes, dtype=bool)
    active[0] = True
    return NoiseRealization(basis, g, active=active)


# ----------------------------------------------------------------------------
# exact quadrature for products of band-limited fields
# ----------------------------------------------------------------------------
def product_grid(basis: EigenBasis, factors=3):
    """Nodes and weights integrating products of ``factors`` retained modes exactly."""
    S = basis.surface
    if S.kind == "torus":
        return S.quadrature(factors * basis.band + 2)
    n_lat = (factors * basis.band) // 2 + 1
    return S.quadrature(n_lat, factors * basis.band + 2)


def z_pair(noise: NoiseRealization, t, p, lam=None, profile=None, mode=None, renormalize=True):
    """``<Z^t_p, phi>`` for a scaled test function or an eigenmode.

    Parameters
    ----------
    noise : NoiseRealization
    t : float
    p : ndarray, shape (amb,) or (P, amb)
    lam : float, optional
        Scale of the test function ``phi^lam_p`` (quadrature pairing).
    profile : TestProfile or str, optional
    mode : int, optional
        If given, pair with ``e_mode`` instead (exact product quadrature).
    renormalize : bool
        Subtract the Wick counterterm (default).

    Raises
    ------
    ScaleTooLarge, UnderResolved
    """
    if t == 0:
        p = np.asarray(p, dtype=float)
        return np.zeros(p.shape[:-1])
    if mode is not None:
        B = noise.basis
        nodes, w = product_grid(B)
        E = B.evaluate(nodes)
        xi = E @ noise.g
        kx = E @ noise.Kxi_coeffs(t)
        c = noise.counterterm(t) if renormalize else 0.0
        prod = np.sum(w * xi * kx * E[:, mode])
        one = np.sum(w * E[:, mode])
        return prod - noise.Kxi(t, p) * noise.g[mode] - c * one
    profile = TestProfile(profile) if isinstance(profile, str) else (profile or TestProfile("bump"))
    return scaled_pair(noise.surface, noise.z_sampler(t, p, renormalize), p, lam, profile)


def z_pair_time_quadrature(noise: NoiseRealization, t, p, mode, n_levels=40, n_gl=12):
    """Oracle: ``<Z^t_p, e_k>`` from ``int_0^t (xi P_s xi - P_s xi(p) xi - q_s) ds``.

    The time integral is split into dyadic intervals accumulating at ``s = 0``
    with Gauss-Legendre nodes on each.
    """
    B = noise.basis
    nodes, w = product_grid(B)
    E = B.evaluate(nodes)
    ek = E[:, mode]
    xi = E @ noise.g
    xw = w * xi * ek
    one = np.sum(w * ek)
    edges = t * 2.0 ** -np.arange(n_levels + 1)[::-1]
    edges = np.concatenate([[0.0], edges])
    x, gw = np.polynomial.legendre.leggauss(n_gl)
    total = 0.0
    ep = B.evaluate(np.asarray(p, dtype=float))
    for a, b in zip(edges[:-1], edges[1:]):
        s = 0.5 * (b - a) * x + 0.5 * (a + b)
        for si, wi in zip(s, gw):
            ps = np.exp(-B.eigenvalues * si) * noise.g
            val = np.sum(xw * (E @ ps)) - (ep @ ps) * noise.g[mode] - noise.wick_diagonal(si) * one
            total += 0.5 * (b - a) * wi * val
    return total


def wick_product_nodal(noise: NoiseRealization, s, points):
    """Nodal values of ``xi <> P_s xi = xi P_s xi - q_s``."""
    return noise.xi(points) * noise.Psxi(s, points) - noise.wick_diagonal(s)


# ----------------------------------------------------------------------------
# torus fast path: pairing fields on a uniform grid through FFT multipliers
# ----------------------------------------------------------------------------
def default_grid_size(K):
    """Smallest multiple of 64 exceeding ``4K``, so products of two fields are alias free."""
    return int(64 * np.ceil((4 * K + 1) / 64))


class TorusNoiseGrid:
    """Exact pairing fields of the noise-derived distributions on a torus grid.

    Every field involved is a trigonometric polynomial of degree at most
    ``2K < n/2``, so the Fourier-multiplier pairings are exact.  Fields are
    returned on the full ``n x n`` grid (``x1`` slow); :meth:`on_mesh`
    restricts them to the standard ``m x m`` mesh.
    """

    def __init__(self, noise: NoiseRealization, n=None):
        if not isinstance(noise.basis, TorusBasis):
            raise TypeError("the grid fast path exists on the torus only")
        self.noise = noise
        self.n = default_grid_size(noise.K) if n is None else int(n)
        if self.n <= 4 * noise.K:
            raise ValueError("grid too coarse for alias-free products")
        self.xi = noise.basis.grid_synth(noise.g, self.n)
        self._xi_spec = torus_spectrum(self.xi, self.n)
        self._t_cache = {}

    @property
    def resolution(self):
        return self.noise.resolution

    def _t_fields(self, t):
        if t not in self._t_cache:
            kx = self.noise.basis.grid_synth(self.noise.Kxi_coeffs(t), self.n)
            c = self.noise.counterterm(t)
            self._t_cache[t] = {
                "Kxi": kx,
                "c": c,
                "Kxi_spec": torus_spectrum(kx, self.n),
                "prod_spec": torus_spectrum(self.xi * kx - c, self.n),
            }
        return self._t_cache[t]

    def Kxi(self, t):
        return self._t_fields(t)["Kxi"]

    def pair_xi(self, lam, kind="bump"):
        return torus_pair_field(None, self.n, lam, kind, spectrum=self._xi_spec)

    def pair_Z(self, t, lam, kind="bump"):
        """``p -> <Z^t_p, phi^lam_p>`` on the grid."""
        f = self._t_fields(t)
        prod = torus_pair_field(None, self.n, lam, kind, spectrum=f["prod_spec"])
        return prod - f["Kxi"] * self.pair_xi(lam, kind)

    def pair_omega_xi(self, lam, kind="bump"):
        """``p -> lam * int y psi(y) xi(p + lam y) dy`` (two components)."""
        return lam * torus_moment_field(None, self.n, lam, kind, spectrum=self._xi_spec)

    def pair_IXi(self, t, lam, kind="bump"):
        """``p -> <K_t xi - K_t xi(p), phi^lam_p>``."""
        f = self._t_fields(t)
        mass = _torus_multiplier(self.n, float(lam), kind, False)[0, 0].real
        return torus_pair_field(None, self.n, lam, kind, spectrum=f["Kxi_spec"]) - mass * f["Kxi"]

    def mesh_index(self, m=64):
        """Grid indices of the ``m x m`` mesh points (requires ``m | n``)."""
        if self.n % m:
            raise ValueError("mesh size must divide the grid size")
        s = self.n // m
        i = np.arange(0, self.n, s)
        return (i[:, None] * self.n + i[None, :]).ravel()

    def on_mesh(self, field, m=64):
        return field[self.mesh_index(m)]


def _torus_point_phases(n, p):
    k = _freq_grid(n)
    return np.exp(1j * (k @ np.asarray(p, dtype=float)))


def torus_pair_at(spectrum, n, lam, kind, phases):
    """Pairing ``<T, phi^lam_p>`` at one point from the grid spectrum of ``T``."""
    mult = _torus_multiplier(n, float(lam), kind, False)
    return float(np.sum(spectrum * mult * phases).real) / (n * n)


# ----------------------------------------------------------------------------
# Monte-Carlo studies
# ----------------------------------------------------------------------------
def _check_window(basis, lams, spacings=RESOLVED_SPACINGS):
    lams = np.asarray(lams, dtype=float)
    bad = lams[lams < spacings * basis.resolution]
    if bad.size:
        raise UnderResolved(f"scales {bad.tolist()} below {spacings:g} resolution lengths ({basis.resolution:.4g})")
    return lams


def resolved_noise_lambdas(basis, lams=NOISE_LAMBDAS):
    """The part of the scale grid that is resolved at the truncation of ``basis``."""
    lams = np.asarray(lams, dtype=float)
    return lams[lams >= RESOLVED_SPACINGS * basis.resolution]


def z_pairs_at_point(noise: NoiseRealization, t, p, lams, profiles=("bump",), renormalize=True, s=None, wick=False):
    """``<Z^t_p, phi^lam_p>`` (or the increment ``Z^t_p - Z^s_p``) for all scales and profiles.

    Returns an array of shape ``(len(lams), len(profiles))``.  On the torus
    the pairing is exact through the grid spectrum; elsewhere it uses
    quadrature.  With ``wick=True`` (torus only) the pairings of the Wick
    part ``xi K_t xi - c_t`` are stacked in front, giving shape
    ``(2, len(lams), len(profiles))``.
    """
    p = np.asarray(p, dtype=float)
    out = np.zeros((len(lams), len(profiles)))
    wout = np.zeros_like(out)
    if wick and not isinstance(noise.basis, TorusBasis):
        raise ValueError("the Wick part is only split off on the torus")
    if t == 0 or (s is not None and s == t):
        return np.stack([wout, out]) if wick else out
    c_fac = 1.0 if renormalize else 0.0
    if isinstance(noise.basis, TorusBasis):
        n = 2 * noise.K + 2 * noise.K + 2
        B = noise.basis
        xi = B.grid_synth(noise.g, n)
        kc = noise.Kxi_coeffs(t) - (noise.Kxi_coeffs(s) if s is not None else 0.0)
        kx = B.grid_synth(kc, n)
        c = c_fac * (noise.counterterm(t) - (noise.counterterm(s) if s is not None else 0.0))
        kp = float(B.synth(kc, p))
        sp_prod = torus_spectrum(xi * kx - c, n)
        sp_xi = torus_spectrum(xi, n)
        ph = _torus_point_phases(n, p)
        for i, lam in enumerate(lams):
            for j, kind in enumerate(profiles):
                wout[i, j] = torus_pair_at(sp_prod, n, lam, kind, ph)
                out[i, j] = wout[i, j] - kp * torus_pair_at(sp_xi, n, lam, kind, ph)
        return np.stack([wout, out]) if wick else out
    for i, lam in enumerate(lams):
        for j, kind in enumerate(profiles):
            v = z_pair(noise, t, p, lam, kind, renormalize=renormalize)
            if s is not None:
                v = v - z_pair(noise, s, p, lam, kind, renormalize=renormalize)
            out[i, j] = v
    return out


def z_moment_samples(basis: EigenBasis, t, p, lams, n_seeds, base_seed=0, profiles=("bump",), renormalize=True, s=None, wick=False):
    """Raw pairing samples of shape ``(n_seeds, len(lams), len(profiles))`` (``(n_seeds, 2, ...)`` with ``wick``)."""
    return np.stack([z_pairs_at_point(nz, t, p, lams, profiles, renormalize, s, wick) for nz in ensemble(basis, base_seed, n_seeds)])


def z_variance_study(basis: EigenBasis, t, p, lams=None, n_seeds=200, base_seed=0, profiles=("bump",), tol=0.3, samples=None, centered=True):
    """Exponent of ``E <:Z^t_p:, phi^lam_p>^2`` in ``lam`` (lower bound, target 0).

    ``:Z: = Z - E Z`` subtracts the exact mean from :func:`z_mean`; with
    ``centered=False`` the raw second moment is fitted instead.  ``samples``
    are raw pairings as returned by :func:`z_moment_samples`.

    Raises
    ------
    UnderResolved
        If a requested scale is below three resolution lengths.
    """
    lams = resolved_noise_lambdas(basis) if lams is None else _check_window(basis, lams)
    if samples is None:
        samples = z_moment_samples(basis, t, p, lams, n_seeds, base_seed, profiles)
    if centered:
        samples = samples - z_mean(basis, t, p, lams, profiles)[None]
    second = np.mean(samples**2, axis=0).max(axis=1)
    label = "E<:Z:,phi>^2" if centered else "E<Z,phi>^2"
    return exponent_report(label, lams, second, 0.0, tol, mode="lower", notes=f"t={t}, seeds={samples.shape[0]}, profiles={list(profiles)}, K={basis.band}")


def wick_centering(samples):
    """Mean and standard error of pairing samples along the seed axis."""
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    return mean, se


def excess_kurtosis(samples):
    x = np.asarray(samples, dtype=float)
    x = x - x.mean(axis=0)
    return np.mean(x**4, axis=0) / np.mean(x**2, axis=0) ** 2 - 3.0


def time_increment_moment(basis: EigenBasis, s, t, p, lam, n_seeds=200, base_seed=0, profile="bump"):
    """Monte-Carlo estimate of ``E <Z^t_p - Z^s_p, phi^lam_p>^2``."""
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    _check_window(basis, [lam])
    if s == t:
        return 0.0
    smp = z_moment_samples(basis, t, p, [lam], n_seeds, base_seed, (profile,), s=s)
    return float(np.mean(smp**2))


def time_increment_study(basis: EigenBasis, t, p, lam, gaps, n_seeds=200, base_seed=0, kappa=0.5, tol=0.1, profile="bump"):
    """Exponent of ``E <Z^t - Z^{t-h}, phi^lam>^2`` in the gap ``h`` (lower bound ``kappa``)."""
    gaps = np.asarray(gaps, dtype=float)
    mom = [time_increment_moment(basis, t - h, t, p, lam, n_seeds, base_seed, profile) for h in gaps]
    return exponent_report("E<Z^t-Z^s,phi>^2", gaps, mom, kappa, tol, mode="lower", notes=f"t={t}, lam={lam}, seeds={n_seeds}")


def variance_formula_modesum(basis: EigenBasis, s, phi_coeffs_sq):
    """Closed mode sum of ``Var <xi, phi P_s xi>`` for a test function given on modes.

    ``phi_coeffs_sq`` is the matrix ``M_{jk} = <phi e_j, e_k>``; the variance
    of the quadratic form ``sum_jk g_j g_k M_jk exp(-lambda_k s)`` is
    ``sum_jk (A_jk^2 + A_jk A_kj)`` with ``A_jk = M_jk exp(-lambda_k s)``.
    """
    A = phi_coeffs_sq * np.exp(-basis.eigenvalues * s)[None, :]
    return float(np.sum(A * A) + np.sum(A * A.T))


def z_mean(basis: EigenBasis, t, p, lams, profiles=("bump",), active=None):
    """Exact ``E <Z^t_p, phi^lam_p> = -<k_t(., p), phi^lam_p>``.

    The Wick product is centered but the subtracted term ``xi K_t xi(p)`` is
    not, so ``Z`` has this (logarithmically divergent) mean.  Returns an
    array of shape ``(len(lams), len(profiles))``.
    """
    p = np.asarray(p, dtype=float)
    I = K_t_mode_integrals(basis, t)
    if active is not None:
        I = np.where(active, I, 0.0)
    coeffs = I * basis.evaluate(p)
    out = np.zeros((len(lams), len(profiles)))
    if isinstance(basis, TorusBasis):
        n = 2 * basis.band + 2
        spec = torus_spectrum(basis.grid_synth(coeffs, n), n)
        ph = _torus_point_phases(n, p)
        for i, lam in enumerate(lams):
            for j, kind in enumerate(profiles):
                out[i, j] = -torus_pair_at(spec, n, lam, kind, ph)
        return out
    from .spectral import ModeField

    field = ModeField(basis, coeffs)
    for i, lam in enumerate(lams):
        for j, kind in enumerate(profiles):
            out[i, j] = -scaled_pair(basis.surface, field, p, lam, TestProfile(kind))
    return out
