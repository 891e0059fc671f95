"""Laplace-Beltrami eigenbases, heat kernels and the derived time integrals.

Eigenfunctions are real and L^2-normalized.  Modes are ordered so that a
truncation at a smaller band is a prefix of a larger one: torus modes by the
shell ``max(|k1|, |k2|)``, sphere modes by degree ``l``.  With this ordering a
noise sample drawn from a fixed seed is nested across truncations.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import j0

from .errors import TruncationWarning
from .geometry import Sphere, Surface, Torus

RESOLVED_LAMBDA_T = 5.0


class EigenBasis:
    """Truncated orthonormal eigenbasis of the Laplace-Beltrami operator.

    Attributes
    ----------
    surface : Surface
    band : int
        Truncation parameter (``K`` on the torus, ``L`` on the sphere).
    eigenvalues : ndarray, shape (n_modes,)
        Nonnegative eigenvalues of ``-Delta`` in mode order.
    """

    surface: Surface
    band: int
    eigenvalues: np.ndarray

    @property
    def n_modes(self):
        return len(self.eigenvalues)

    @property
    def lambda_cut(self):
        """Smallest eigenvalue excluded by the truncation."""
        raise NotImplementedError

    @property
    def t_min(self):
        """Smallest time at which the truncated heat kernel is trusted."""
        return RESOLVED_LAMBDA_T / self.lambda_cut

    @property
    def resolution(self):
        """Shortest resolved length scale, ``pi / band``."""
        return np.pi / self.band

    def evaluate(self, points):
        raise NotImplementedError

    def synth(self, coeffs, points, chunk=4096):
        """Evaluate ``sum_k coeffs[k] e_k`` at ``points``.

        ``coeffs`` may carry trailing axes (several fields at once).
        """
        points = np.asarray(points, dtype=float)
        coeffs = np.asarray(coeffs, dtype=float)
        lead = points.shape[:-1]
        flat = points.reshape(-1, points.shape[-1])
        out = np.empty((flat.shape[0],) + coeffs.shape[1:])
        n = coeffs.shape[0]
        for s in range(0, flat.shape[0], chunk):
            out[s : s + chunk] = np.tensordot(self.evaluate(flat[s : s + chunk])[:, :n], coeffs, axes=(1, 0))
        return out.reshape(lead + coeffs.shape[1:])

    def kernel_sum(self, weights, p, q):
        """``sum_k weights[k] e_k(p) e_k(q)`` for weights constant on eigenspaces."""
        raise NotImplementedError

    def mode_table(self):
        """Rows ``(index, eigenvalue)`` for CSV export."""
        return np.column_stack([np.arange(self.n_modes), self.eigenvalues])


class TorusBasis(EigenBasis):
    """Real trigonometric modes ``|k|_inf <= K`` on the flat torus."""

    def __init__(self, K: int):
        self.surface = Torus()
        self.band = int(K)
        ks = [(0, 0)]
        kind = [0]
        for s in range(1, self.band + 1):
            shell = []
            for k1 in range(-s, s + 1):
                for k2 in range(0, s + 1):
                    if max(abs(k1), k2) != s:
                        continue
                    if k2 == 0 and k1 <= 0:
                        continue
                    shell.append((k1 * k1 + k2 * k2, k1, k2))
            shell.sort()
            for _, k1, k2 in shell:
                ks.extend([(k1, k2), (k1, k2)])
                kind.extend([1, 2])
        self.wavevectors = np.array(ks, dtype=float)
        self.kind = np.array(kind)
        self.eigenvalues = np.sum(self.wavevectors**2, axis=1)
        self._cos = self.kind == 1

    @property
    def lambda_cut(self):
        return float((self.band + 1) ** 2)

    def evaluate(self, points):
        points = np.asarray(points, dtype=float)
        phase = points @ self.wavevectors.T
        c = 1.0 / (np.pi * np.sqrt(2.0))
        out = np.where(self.kind == 1, c * np.cos(phase), c * np.sin(phase))
        out[..., 0] = 1.0 / (2.0 * np.pi)
        return out

    def kernel_sum(self, weights, p, q):
        weights = np.asarray(weights, dtype=float)
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        kv = self.wavevectors[self._cos]
        wv = weights[self._cos]
        shape = d.shape[:-1]
        flat = d.reshape(-1, 2)
        out = np.empty(flat.shape[0])
        for s in range(0, flat.shape[0], 2048):
            out[s : s + 2048] = np.cos(flat[s : s + 2048] @ kv.T) @ wv
        return (out / (2.0 * np.pi**2) + weights[0] / (4.0 * np.pi**2)).reshape(shape)

    # -- uniform-grid transforms ----------------------------------------------
    def _index_maps(self, n):
        k1 = self.wavevectors[:, 0].astype(int) % n
        k2 = self.wavevectors[:, 1].astype(int) % n
        return k1, k2

    def _complex_spectrum(self, c, n):
        """Place real mode coefficients ``c`` (n_modes, m) on an FFT grid."""
        nm = c.shape[0]
        if nm % 2 == 0:
            c = np.concatenate([c, np.zeros((1, c.shape[1]))], axis=0)
        npair = (c.shape[0] - 1) // 2
        kv = self.wavevectors[1 : 1 + 2 * npair : 2].astype(int)
        amp = 0.5 / (np.pi * np.sqrt(2.0))
        # cos(k.x) = (e^{ikx} + e^{-ikx}) / 2 ; sin(k.x) = (e^{ikx} - e^{-ikx}) / (2i)
        ck = amp * (c[1::2][:npair] - 1j * c[2::2][:npair])
        spec = np.zeros((n, n, c.shape[1]), dtype=complex)
        spec[0, 0] = c[0] / (2.0 * np.pi)
        spec[kv[:, 0] % n, kv[:, 1] % n] = ck
        spec[(-kv[:, 0]) % n, (-kv[:, 1]) % n] = np.conj(ck)
        return spec

    def synth(self, coeffs, points, chunk=4096):
        """Evaluate ``sum_k coeffs[k] e_k`` at ``points``.

        Separable form: the complex spectrum is contracted with ``e^{i k_1 x_1}``
        by a matrix product and then with ``e^{i k_2 x_2}`` row by row, which
        costs ``O(P K^2)`` multiply-adds but runs through BLAS.
        """
        points = np.asarray(points, dtype=float)
        coeffs = np.asarray(coeffs, dtype=float)
        lead = points.shape[:-1]
        extra = coeffs.shape[1:]
        n = 2 * self.band + 1
        spec = np.fft.fftshift(self._complex_spectrum(coeffs.reshape(len(coeffs), -1), n), axes=(0, 1))
        k = np.arange(-self.band, self.band + 1)
        flat = points.reshape(-1, 2)
        m = spec.shape[-1]
        out = np.empty((flat.shape[0], m))
        for s in range(0, flat.shape[0], chunk):
            x = flat[s : s + chunk]
            e1 = np.exp(1j * x[:, :1] * k[None, :])
            e2 = np.exp(1j * x[:, 1:] * k[None, :])
            for j in range(m):
                out[s : s + chunk, j] = np.einsum("pb,pb->p", e1 @ spec[:, :, j], e2).real
        return out.reshape(lead + extra)

    def grid_synth(self, coeffs, n):
        """Values on the uniform ``n x n`` grid (row-major, ``x1`` slow), via FFT."""
        if n < 2 * self.band + 1:
            raise ValueError("grid too coarse for the band")
        coeffs = np.asarray(coeffs, dtype=float)
        extra = coeffs.shape[1:]
        spec = self._complex_spectrum(coeffs.reshape(len(coeffs), -1), n)
        vals = np.fft.ifft2(spec, axes=(0, 1)).real * (n * n)
        return vals.reshape((n * n,) + extra)

    def grid_analyze(self, values, n, n_modes=None):
        """L^2 projection of grid values onto the modes (exact for band < n - K)."""
        values = np.asarray(values, dtype=float)
        extra = values.shape[1:]
        v = values.reshape(n, n, -1)
        spec = np.fft.fft2(v, axes=(0, 1)) * (TWO_PI_SQ / (n * n))
        nm = self.n_modes if n_modes is None else n_modes
        k1, k2 = self._index_maps(n)
        k1, k2 = k1[:nm], k2[:nm]
        kind = self.kind[:nm]
        amp = 1.0 / (np.pi * np.sqrt(2.0))
        # integral of v * e^{-ik.x} is spec[k]
        S = spec[k1, k2]
        out = np.where((kind == 1)[:, None], amp * S.real, -amp * S.imag)
        out[0] = S[0].real / (2.0 * np.pi)
        return out.reshape((nm,) + extra)


TWO_PI_SQ = 4.0 * np.pi**2


class SphereBasis(EigenBasis):
    """Real spherical harmonics of degree ``l <= L``, ordered by ``(l, m)``."""

    def __init__(self, L: int):
        self.surface = Sphere()
        self.band = int(L)
        l = np.concatenate([np.full(2 * k + 1, k) for k in range(self.band + 1)])
        m = np.concatenate([np.arange(-k, k + 1) for k in range(self.band + 1)])
        self.degree = l
        self.order = m
        self.eigenvalues = (l * (l + 1)).astype(float)

    @property
    def lambda_cut(self):
        return float((self.band + 1) * (self.band + 2))

    @staticmethod
    def index(l, m):
        return l * l + l + m

    def evaluate(self, points, L=None):
        points = np.asarray(points, dtype=float)
        L = self.band if L is None else L
        x, y, z = points[..., 0], points[..., 1], points[..., 2]
        st = np.hypot(x, y)
        phi = np.arctan2(y, x)
        out = np.empty(points.shape[:-1] + ((L + 1) ** 2,))
        qmm = np.full(points.shape[:-1], np.sqrt(1.0 / (4.0 * np.pi)))
        r2 = np.sqrt(2.0)
        for m in range(L + 1):
            if m > 0:
                qmm = qmm * np.sqrt((2 * m + 1) / (2.0 * m)) * st
                cm = r2 * np.cos(m * phi)
                sm = r2 * np.sin(m * phi)

            def store(l, Q):
                if m == 0:
                    out[..., self.index(l, 0)] = Q
                else:
                    out[..., self.index(l, m)] = Q * cm
                    out[..., self.index(l, -m)] = Q * sm

            store(m, qmm)
            if m == L:
                break
            q_prev = qmm
            q_cur = np.sqrt(2 * m + 3.0) * z * qmm
            store(m + 1, q_cur)
            for l in range(m + 2, L + 1):
                a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                q_prev, q_cur = q_cur, a * (z * q_cur - b * q_prev)
                store(l, q_cur)
        return out

    def kernel_sum(self, weights, p, q):
        weights = np.asarray(weights, dtype=float)
        x = np.clip(np.sum(np.asarray(p, dtype=float) * np.asarray(q, dtype=float), axis=-1), -1.0, 1.0)
        wl = weights[[self.index(l, 0) for l in range(self.band + 1)]]
        return legendre_series(wl * (2 * np.arange(self.band + 1) + 1) / (4.0 * np.pi), x)


def legendre_series(c, x):
    """``sum_l c[l] P_l(x)`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    acc = c[0] * p_prev
    if len(c) == 1:
        return acc
    p_cur = x.copy()
    acc = acc + c[1] * p_cur
    for l in range(1, len(c) - 1):
        p_prev, p_cur = p_cur, ((2 * l + 1) * x * p_cur - l * p_prev) / (l + 1)
        acc = acc + c[l + 1] * p_cur
    return acc


def legendre_table(lmax, x):
    """Array ``P_l(x)`` for ``l = 0..lmax`` stacked on the last axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (lmax + 1,))
    out[..., 0] = 1.0
    if lmax >= 1:
        out[..., 1] = x
    for l in range(1, lmax):
        out[..., l + 1] = ((2 * l + 1) * x * out[..., l] - l * out[..., l - 1]) / (l + 1)
    return out


def make_basis(kind, band):
    """Torus basis with ``|k|_inf <= band`` or sphere basis with ``l <= band``."""
    if kind == "torus":
        return TorusBasis(band)
    if kind == "sphere":
        return SphereBasis(band)
    raise ValueError(f"unknown surface kind {kind!r}")


class ModeField:
    """A smooth field given by mode coefficients; callable on points."""

    def __init__(self, basis: EigenBasis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __call__(self, points):
        return self.basis.synth(self.coeffs, points)

    @property
    def resolution(self):
        return self.basis.resolution


# ----------------------------------------------------------------------------
# time integrals of the semigroup
# ----------------------------------------------------------------------------
def apply_Pt(basis_or_eigs, coeffs, t):
    """Apply the heat semigroup ``P_t`` to mode coefficients."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    lam = _eigs(basis_or_eigs)
    coeffs = np.asarray(coeffs, dtype=float)
    f = np.exp(-lam[: coeffs.shape[0]] * t)
    return coeffs * f.reshape(f.shape + (1,) * (coeffs.ndim - 1))


def _eigs(basis_or_eigs):
    return basis_or_eigs.eigenvalues if isinstance(basis_or_eigs, EigenBasis) else np.asarray(basis_or_eigs, dtype=float)


def K_t_mode_integrals(basis_or_eigs, t):
    """``I_k(t) = int_0^t exp(-lambda_k s) ds``, i.e. the spectrum of ``K_t``."""
    lam = _eigs(basis_or_eigs)
    t = float(t)
    pos = lam > 0
    out = np.full(lam.shape, t)
    out[pos] = -np.expm1(-lam[pos] * t) / lam[pos]
    return out


def K_t_time_integral(basis_or_eigs, t):
    """``int_0^t I_k(s) ds``, used for the integrated counterterm."""
    lam = _eigs(basis_or_eigs)
    t = float(t)
    pos = lam > 0
    out = np.full(lam.shape, 0.5 * t * t)
    lp = lam[pos]
    out[pos] = (t + np.expm1(-lp * t) / lp) / lp
    return out


def k2t_mode_weights(basis_or_eigs, t):
    """``J_k = int_0^{2t} s exp(-lambda_k s) ds`` computed without cancellation."""
    lam = _eigs(basis_or_eigs)
    x = 2.0 * lam * t
    small = x < 1e-2
    xs = np.where(small, 1.0, x)
    big = (-np.expm1(-xs) - xs * np.exp(-xs)) / xs**2
    ser = 0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0 + x**4 / 144.0
    g = np.where(small, ser, big)
    return (2.0 * t) ** 2 * g


def k2t_increment(basis: EigenBasis, t, p, q):
    """``k2(q,q) + k2(p,p) - 2 k2(q,p)`` for ``k2 = int_0^{2t} s q_s ds`` at truncation."""
    J = k2t_mode_weights(basis, t)
    return basis.kernel_sum(J, p, p) + basis.kernel_sum(J, q, q) - 2.0 * basis.kernel_sum(J, p, q)


def k2t_increment_modesum(basis: EigenBasis, t, p, q):
    """Direct mode-sum version of :func:`k2t_increment` (oracle)."""
    J = k2t_mode_weights(basis, t)
    d = basis.evaluate(p) - basis.evaluate(q)
    return np.sum(J * d**2, axis=-1)


def counterterm(basis: EigenBasis, t, points=None, n_modes=None):
    """``c_t(z) = sum_k I_k(t) e_k(z)^2`` (spatially constant on both surfaces)."""
    I = K_t_mode_integrals(basis, t)
    if n_modes is not None:
        I = I[:n_modes]
    if points is None:
        return float(np.sum(I) / basis.surface.volume)
    E = basis.evaluate(points)[..., : len(I)]
    return np.sum(I * E**2, axis=-1)


# ----------------------------------------------------------------------------
# heat kernels
# ----------------------------------------------------------------------------
def heat_kernel(basis: EigenBasis, t, p, q, warn=True):
    """Truncated spectral heat kernel ``sum_k exp(-lambda_k t) e_k(p) e_k(q)``.

    A :class:`TruncationWarning` is emitted when ``lambda_cut * t < 5``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if warn and basis.lambda_cut * t < RESOLVED_LAMBDA_T:
        warnings.warn(f"t={t:.3g} below resolved window t_min={basis.t_min:.3g}", TruncationWarning, stacklevel=2)
    return basis.kernel_sum(np.exp(-basis.eigenvalues * t), p, q)


def _smooth_step(s):
    s = np.clip(s, 0.0, 1.0)
    g = lambda x: np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    a = g(s)
    b = g(1.0 - s)
    return a / (a + b)


def cutoff(d, delta):
    """Smooth cutoff equal to 1 for ``d <= delta/8`` and 0 for ``d >= delta/4``."""
    return 1.0 - _smooth_step((np.asarray(d, dtype=float) - delta / 8.0) / (delta / 8.0))


class HeatKernelAsym:
    """Parabolic expansion ``t^{-1} exp(-d^2/4t) sum_{i<=N} t^i Phi_i``.

    On the torus ``Phi_0 = 1/(4 pi)`` and higher coefficients vanish (other
    lattice images are left in the remainder).  On the sphere
    ``Phi_0 = (4 pi)^{-1} (theta/sin theta)^{1/2}`` and ``Phi_1, Phi_2`` are
    radial cubic splines fitted by least squares against a high-degree
    Legendre heat-kernel sum.  All coefficients carry a smooth cutoff
    supported in ``d < delta/4``.
    """

    calib_degree = 200
    max_order = 2

    def __init__(self, surface: Surface, N: int = 1):
        if N < 0 or N > self.max_order:
            raise ValueError(f"order N must lie in 0..{self.max_order}")
        self.surface = surface
        self.N = int(N)
        self.radius = surface.delta / 4.0
        self._splines = self._calibrate() if surface.kind == "sphere" and N >= 1 else []

    def _calibrate(self):
        thetas = np.linspace(0.0, self.radius, 41)
        lmax = self.calib_degree
        l = np.arange(lmax + 1)
        rows = []
        for th in thetas:
            t_lo = max(0.002, th**2 / 48.0)
            ts = np.geomspace(t_lo, t_lo + 0.12, 40)
            P = legendre_table(lmax, np.cos(th))
            pt = np.array([np.sum((2 * l + 1) / (4.0 * np.pi) * np.exp(-l * (l + 1) * t) * P) for t in ts])
            y = ts * np.exp(th**2 / (4.0 * ts)) * pt
            r = (y - self.phi0(th)) / ts
            coef = np.polynomial.polynomial.polyfit(ts, r, 3)
            rows.append(coef[:2])
        rows = np.array(rows)
        return [CubicSpline(thetas, rows[:, i]) for i in range(self.max_order)]

    @staticmethod
    def phi0_sphere(theta):
        theta = np.asarray(theta, dtype=float)
        return np.sqrt(np.sinc(theta / np.pi) ** -1) / (4.0 * np.pi)

    def phi0(self, d):
        if self.surface.kind == "sphere":
            return self.phi0_sphere(d)
        return np.full(np.shape(d), 1.0 / (4.0 * np.pi))

    def coefficient(self, i, d):
        """``Phi_i`` at geodesic distance ``d``, including the cutoff."""
        d = np.asarray(d, dtype=float)
        chi = cutoff(d, self.surface.delta)
        if i == 0:
            return chi * self.phi0(np.minimum(d, self.radius))
        if self.surface.kind == "torus":
            return np.zeros_like(d)
        return chi * self._splines[i - 1](np.minimum(d, self.radius))

    def __call__(self, t, p, q):
        d = self.surface.dist(p, q)
        total = sum(t**i * self.coefficient(i, d) for i in range(self.N + 1))
        return np.where(d < self.radius, np.exp(-(d**2) / (4.0 * t)) * total / t, 0.0)


def heat_kernel_asym(surface, N, t, p, q):
    """Convenience wrapper around :class:`HeatKernelAsym`."""
    return HeatKernelAsym(surface, N)(t, p, q)


# ----------------------------------------------------------------------------
# exact pairings with radial profiles
# ----------------------------------------------------------------------------
_GL_R = np.polynomial.legendre.leggauss(256)


def radial_multiplier(basis: EigenBasis, radial, lam):
    """Per-mode factors ``m_k`` with ``<e_k, phi^lam_p> = m_k e_k(p)``.

    ``radial`` is the radial profile on ``[0, 1]``.  The torus uses the
    Hankel transform ``2 pi int phi(r) J0(lam |k| r) r dr``; the sphere uses
    the Funk-Hecke coefficient ``2 pi int phi(rho) P_l(cos(lam rho)) sin(lam rho)/lam drho``.
    """
    x, w = _GL_R
    rho = 0.5 * (x + 1.0)
    w = 0.5 * w
    prof = radial(rho)
    if isinstance(basis, TorusBasis):
        kn = np.sqrt(basis.eigenvalues)
        return 2.0 * np.pi * (j0(lam * kn[:, None] * rho[None, :]) @ (w * prof * rho))
    P = legendre_table(basis.band, np.cos(lam * rho))
    cl = 2.0 * np.pi * ((w * prof * np.sin(lam * rho) / lam) @ P)
    return cl[basis.degree]
