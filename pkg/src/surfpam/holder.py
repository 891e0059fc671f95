"""Scaled test functions, pairings and scaling-exponent estimators.

A distribution ``T`` is probed through ``<T, phi^lam_p>`` where
``phi^lam_p(z) = lam^{-2} phi(lam^{-1} log_p z)`` is a scaled test function in
exponential coordinates.  Bounds of the form ``|<T, phi^lam_p>| <= C lam^gamma``
are checked by fitting ``log2 |pairing|`` against ``log2 lam``.

Two pairing routes exist.  :func:`scaled_pair` integrates over the geodesic
ball with a polar Gauss-Legendre rule and works for any callable field.
:func:`torus_pair_field` uses exact Fourier multipliers on a uniform torus
grid and returns the pairing at every grid point at once.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import exp1, j0, j1

from .errors import ScaleTooLarge, UnderResolved
from .geometry import CUT_MARGIN, Surface

BUMP_MASS = np.pi * (np.exp(-1.0) - exp1(1.0))
BUMP_C = 1.0 / BUMP_MASS
DEFAULT_LAMBDAS = tuple(2.0 ** -j for j in range(2, 8))
RESOLVED_SPACINGS = 3.0


# ----------------------------------------------------------------------------
# profiles
# ----------------------------------------------------------------------------
def _bump_radial(r):
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    s = np.where(inside, 1.0 - r**2, 1.0)
    return np.where(inside, BUMP_C * np.exp(-1.0 / s), 0.0)


class TestProfile:
    """Test function on R^2 used at unit scale.

    Parameters
    ----------
    kind : {"bump", "dx", "dy", "gauss"}
        ``bump`` is the normalized radial bump ``c exp(-1/(1-|x|^2))``;
        ``dx``/``dy`` are its partial derivatives; ``gauss`` is the
        normalized Gaussian ``exp(-|x|^2)/pi`` (not compactly supported).
    """

    __test__ = False  # keep pytest from collecting this class

    def __init__(self, kind="bump"):
        if kind not in ("bump", "dx", "dy", "gauss"):
            raise ValueError(f"unknown profile {kind!r}")
        self.kind = kind
        self.support = 6.0 if kind == "gauss" else 1.0
        self.radial_kind = kind in ("bump", "gauss")

    def radial(self, r):
        if self.kind == "bump":
            return _bump_radial(r)
        if self.kind == "gauss":
            return np.exp(-np.asarray(r, dtype=float) ** 2) / np.pi
        raise ValueError("profile is not radial")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y**2, axis=-1)
        if self.kind == "gauss":
            return np.exp(-r2) / np.pi
        base = _bump_radial(np.sqrt(r2))
        if self.kind == "bump":
            return base
        i = 0 if self.kind == "dx" else 1
        s = np.where(r2 < 1.0, 1.0 - r2, 1.0)
        return base * (-2.0 * y[..., i] / s**2)

    @property
    def cr_norms(self):
        """``(sup|phi|, sup|D phi|, sup|D^2 phi|)`` on a fine grid."""
        return _cr_norms(self.kind)

    def schwartz_constant(self, N, r=2):
        """``sup_x (1 + |x|^N) max_{|k|<=r} |D^k phi(x)|``, estimated on a grid."""
        return _schwartz_constant(self.kind, N, r)

    def fourier(self, omega):
        """``Phi(w) = int exp(i w.y) phi(y) dy`` for frequency vectors ``omega``."""
        omega = np.asarray(omega, dtype=float)
        rho = np.sqrt(np.sum(omega**2, axis=-1))
        base = _radial_hankel(rho, "bump" if self.kind in ("dx", "dy") else self.kind)
        if self.radial_kind:
            return base.astype(complex)
        i = 0 if self.kind == "dx" else 1
        return -1j * omega[..., i] * base

    def moment_fourier(self, omega):
        """Fourier transform of ``y -> y phi(y)`` (two components) for radial profiles."""
        omega = np.asarray(omega, dtype=float)
        rho = np.sqrt(np.sum(omega**2, axis=-1))
        d = _radial_hankel_derivative(rho, self.kind)
        safe = np.where(rho > 0, rho, 1.0)
        unit = np.where(rho[..., None] > 0, omega / safe[..., None], 0.0)
        return -1j * unit * d[..., None]

    def __repr__(self):
        return f"TestProfile({self.kind!r})"


@lru_cache(maxsize=None)
def _cr_norms(kind):
    prof = TestProfile(kind)
    x = np.linspace(-prof.support, prof.support, 801)
    X, Y = np.meshgrid(x, x, indexing="ij")
    F = prof(np.stack([X, Y], axis=-1))
    h = x[1] - x[0]
    gx, gy = np.gradient(F, h)
    gxx, gxy = np.gradient(gx, h)
    _, gyy = np.gradient(gy, h)
    return (float(np.abs(F).max()), float(np.hypot(gx, gy).max()), float(np.sqrt(gxx**2 + 2 * gxy**2 + gyy**2).max()))


@lru_cache(maxsize=None)
def _schwartz_constant(kind, N, r):
    prof = TestProfile(kind)
    x = np.linspace(-prof.support, prof.support, 801)
    X, Y = np.meshgrid(x, x, indexing="ij")
    F = prof(np.stack([X, Y], axis=-1))
    h = x[1] - x[0]
    ders = [np.abs(F)]
    gx, gy = np.gradient(F, h)
    ders.append(np.hypot(gx, gy))
    if r >= 2:
        gxx, gxy = np.gradient(gx, h)
        _, gyy = np.gradient(gy, h)
        ders.append(np.sqrt(gxx**2 + 2 * gxy**2 + gyy**2))
    w = 1.0 + np.hypot(X, Y) ** N
    return float(max((w * d).max() for d in ders[: r + 1]))


_GL = np.polynomial.legendre.leggauss(256)


def _radial_hankel(rho, kind):
    x, w = _GL
    R = 6.0 if kind == "gauss" else 1.0
    r = 0.5 * R * (x + 1.0)
    w = 0.5 * R * w
    prof = TestProfile(kind).radial(r)
    rho = np.asarray(rho, dtype=float)
    flat = rho.reshape(-1)
    out = np.empty(flat.shape)
    for s in range(0, flat.size, 8192):
        out[s : s + 8192] = 2.0 * np.pi * (j0(flat[s : s + 8192, None] * r[None, :]) @ (w * prof * r))
    return out.reshape(rho.shape)


def _radial_hankel_derivative(rho, kind):
    x, w = _GL
    R = 6.0 if kind == "gauss" else 1.0
    r = 0.5 * R * (x + 1.0)
    w = 0.5 * R * w
    prof = TestProfile(kind).radial(r)
    rho = np.asarray(rho, dtype=float)
    flat = rho.reshape(-1)
    out = np.empty(flat.shape)
    for s in range(0, flat.size, 8192):
        out[s : s + 8192] = -2.0 * np.pi * (j1(flat[s : s + 8192, None] * r[None, :]) @ (w * prof * r**2))
    return out.reshape(rho.shape)


PROFILE_FAMILY = ("bump", "dx", "dy")


# ----------------------------------------------------------------------------
# ball quadrature and pairings
# ----------------------------------------------------------------------------
class BallQuadrature:
    """Polar rule on the disk of radius ``R``: Gauss-Legendre in r, uniform in angle."""

    def __init__(self, n_r=32, n_theta=64, radius=1.0):
        x, w = np.polynomial.legendre.leggauss(n_r)
        r = 0.5 * radius * (x + 1.0)
        wr = 0.5 * radius * w * r
        th = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
        self.nodes = (r[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=-1)[None, :, :]).reshape(-1, 2)
        self.weights = np.repeat(wr, n_theta) * (2.0 * np.pi / n_theta)
        self.radii = np.repeat(r, n_theta)
        self.radius = radius


@lru_cache(maxsize=None)
def ball_quadrature(n_r=32, n_theta=64, radius=1.0):
    return BallQuadrature(n_r, n_theta, radius)


def chart_jacobian(surface: Surface, r):
    """Volume density of the exponential chart at radius ``r``."""
    if surface.kind == "sphere":
        return np.sinc(np.asarray(r, dtype=float) / np.pi)
    return np.ones_like(np.asarray(r, dtype=float))


def _resolution_of(T):
    return getattr(T, "resolution", None)


def check_scale(surface: Surface, lam, profile: TestProfile, T=None, check_resolution=True):
    """Raise if the scaled support leaves the injectivity ball or is under-resolved."""
    if lam <= 0 or lam * profile.support >= CUT_MARGIN * surface.delta:
        raise ScaleTooLarge(f"lambda={lam:.4g} does not fit inside the injectivity ball")
    res = _resolution_of(T) if T is not None else None
    if check_resolution and res is not None and lam < RESOLVED_SPACINGS * res:
        raise UnderResolved(f"lambda={lam:.4g} is below {RESOLVED_SPACINGS:g} resolution lengths ({res:.4g})")


def scaled_pair(surface: Surface, T, p, lam, profile=None, quad=None, frame_rotation=None, check_resolution=True):
    """``<T, phi^lam_p>`` by quadrature over the geodesic ball.

    Parameters
    ----------
    surface : Surface
    T : callable or MeshDistribution
        Field sampler mapping points ``(..., amb)`` to values ``(...)`` or
        ``(..., m)``; a nodal :class:`MeshDistribution` is paired through the
        global quadrature grid instead.  Samplers with a true ``batched``
        attribute are called as ``T(z, sl)`` where ``sl`` selects the base
        points of the current chunk, so the field may depend on ``p``.
    p : ndarray, shape (amb,) or (P, amb)
    lam : float
    profile : TestProfile, optional
        Defaults to the radial bump.
    quad : BallQuadrature, optional

    Returns
    -------
    ndarray
        Shape ``()`` / ``(m,)`` for a single point, ``(P,)`` / ``(P, m)`` for a batch.

    Raises
    ------
    ScaleTooLarge, UnderResolved
    """
    profile = profile or TestProfile("bump")
    check_scale(surface, lam, profile, T, check_resolution)
    if isinstance(T, MeshDistribution) and T.kind == "nodal":
        return T.nodal_pair(p, lam, profile)
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    P = p[None] if single else p
    if quad is None:
        quad = ball_quadrature(radius=profile.support) if profile.support != 1.0 else ball_quadrature()
    y = quad.nodes
    wts = quad.weights * profile(y) * chart_jacobian(surface, lam * quad.radii)
    keep = wts != 0.0
    y, wts = y[keep], wts[keep]
    out = []
    for s in range(0, P.shape[0], 16):
        base = P[s : s + 16, None, :]
        z = surface.exp(base, np.broadcast_to(lam * y, (base.shape[0],) + y.shape))
        vals = np.asarray(T(z, slice(s, s + 16)) if getattr(T, "batched", False) else T(z), dtype=float)
        out.append(np.tensordot(vals, wts, axes=([1], [0])) if vals.ndim == 2 else np.einsum("pn...,n->p...", vals, wts))
    res = np.concatenate(out, axis=0)
    return res[0] if single else res


def chart_pair(surface: Surface, T, p, lam, profile=None, quad=None):
    """Pairing through an alternative chart (gnomonic on the sphere, identity on the torus).

    The test function is ``lam^{-2} phi(x(z)/lam)`` with ``x`` the chart
    coordinates centred at ``p``; the push-forward changes the volume density
    to ``(1 + |x|^2)^{-3/2}`` on the sphere.
    """
    profile = profile or TestProfile("bump")
    check_scale(surface, lam, profile, T)
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    P = p[None] if single else p
    quad = quad or ball_quadrature()
    y = quad.nodes
    x = lam * y
    if surface.kind == "sphere":
        rx = np.linalg.norm(x, axis=-1)
        # gnomonic chart: geodesic radius atan(|x|) in the direction of x
        scale = np.where(rx > 0, np.arctan(rx) / np.where(rx > 0, rx, 1.0), 1.0)
        v = x * scale[:, None]
        dens = (1.0 + rx**2) ** -1.5
    else:
        v = x
        dens = np.ones(len(x))
    wts = quad.weights * profile(y) * dens
    z = surface.exp(P[:, None, :], np.broadcast_to(v, (P.shape[0],) + v.shape))
    vals = np.asarray(T(z), dtype=float)
    res = np.einsum("pn...,n->p...", vals, wts)
    return res[0] if single else res


class MeshDistribution:
    """A distribution represented by mode coefficients, nodal values or a sampler.

    Use the constructors :meth:`from_modes`, :meth:`from_nodal` and
    :meth:`from_function`.
    """

    def __init__(self, surface, kind, basis=None, coeffs=None, nodes=None, weights=None, values=None, func=None):
        self.surface = surface
        self.kind = kind
        self.basis = basis
        self.coeffs = None if coeffs is None else np.asarray(coeffs, dtype=float)
        self.nodes = nodes
        self.weights = weights
        self.values = None if values is None else np.asarray(values, dtype=float)
        self.func = func

    @classmethod
    def from_modes(cls, basis, coeffs):
        return cls(basis.surface, "modes", basis=basis, coeffs=coeffs)

    @classmethod
    def from_nodal(cls, surface, nodes, weights, values):
        return cls(surface, "nodal", nodes=np.asarray(nodes, dtype=float), weights=np.asarray(weights, dtype=float), values=values)

    @classmethod
    def from_function(cls, surface, func):
        return cls(surface, "function", func=func)

    @property
    def resolution(self):
        if self.kind == "modes":
            return self.basis.resolution
        return None

    def __call__(self, points):
        if self.kind == "modes":
            return self.basis.synth(self.coeffs, points)
        if self.kind == "function":
            return self.func(points)
        raise TypeError("nodal distributions cannot be sampled at arbitrary points")

    def pair_mode(self, k):
        """``<T, e_k>``."""
        if self.kind == "modes":
            return self.coeffs[k]
        raise TypeError("mode pairing needs a basis; use nodal_pair_basis")

    def nodal_pair_basis(self, basis, k):
        """``<T, e_k>`` by the global quadrature rule of a nodal representation."""
        e = basis.evaluate(self.nodes)[:, k]
        return np.sum(self.weights * self.values * e)

    def nodal_pair(self, p, lam, profile):
        """Pairing of a nodal field with ``phi^lam_p`` by the global quadrature rule."""
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        P = p[None] if single else p
        out = np.empty(P.shape[0])
        S = self.surface
        for i, pi in enumerate(P):
            d = S.dist(pi[None, :], self.nodes)
            m = d < lam * profile.support
            v = S.log(pi[None, :], self.nodes[m]) / lam
            out[i] = np.sum(self.weights[m] * self.values[m] * profile(v)) / lam**2
        return out[0] if single else out


def spectral_pair(basis, coeffs, p, lam, profile=None):
    """Exact pairing of a mode expansion with a radial profile via per-mode multipliers."""
    from .spectral import radial_multiplier

    profile = profile or TestProfile("bump")
    m = radial_multiplier(basis, profile.radial, lam)
    coeffs = np.asarray(coeffs, dtype=float)
    n = coeffs.shape[0]
    c = coeffs * m[:n].reshape((n,) + (1,) * (coeffs.ndim - 1))
    return np.tensordot(basis.evaluate(p)[..., :n], c, axes=(-1, 0))


# ----------------------------------------------------------------------------
# uniform torus grid: exact pairing fields through Fourier multipliers
# ----------------------------------------------------------------------------
@lru_cache(maxsize=32)
def _freq_grid(n):
    k = np.fft.fftfreq(n, d=1.0 / n)
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    return np.stack([K1, K2], axis=-1)


@lru_cache(maxsize=None)
def _hankel_table(kind, derivative, rho_max):
    """Cubic spline of the radial transform (or its derivative) on ``[0, rho_max]``."""
    from scipy.interpolate import CubicSpline

    rho = np.linspace(0.0, rho_max, int(rho_max / 0.01) + 2)
    vals = _radial_hankel_derivative(rho, kind) if derivative else _radial_hankel(rho, kind)
    return CubicSpline(rho, vals)


def _hankel(rho, kind, derivative=False):
    rho = np.asarray(rho, dtype=float)
    rmax = float(2.0 ** np.ceil(np.log2(max(rho.max(), 1.0) + 1.0)))
    return _hankel_table(kind, derivative, rmax)(rho)


@lru_cache(maxsize=64)
def _torus_multiplier(n, lam, kind, moment):
    omega = lam * _freq_grid(n)
    rho = np.sqrt(np.sum(omega**2, axis=-1))
    base_kind = "bump" if kind in ("dx", "dy") else kind
    F = _hankel(rho, base_kind)
    safe = np.where(rho > 0, rho, 1.0)
    if not moment:
        if kind in ("bump", "gauss"):
            return F.astype(complex)
        i = 0 if kind == "dx" else 1
        return -1j * omega[..., i] * F
    dF = _hankel(rho, base_kind, derivative=True)
    unit = omega / safe[..., None]
    if kind in ("bump", "gauss"):
        # FT of y_i phi(y) is -i d/dw_i Phi(w)
        return -1j * unit * dF[..., None]
    j = 0 if kind == "dx" else 1
    # FT of y_i d_j phi(y) is -(delta_ij Phi + w_i w_j Phi'(|w|) / |w|)
    delta = np.zeros(2)
    delta[j] = 1.0
    return -(delta * F[..., None] + unit * omega[..., j : j + 1] * dF[..., None])


def torus_pair_field(values, n, lam, profile="bump", spectrum=None):
    """Pairing field ``p -> <T, phi^lam_p>`` on a uniform ``n x n`` torus grid.

    ``values`` are grid values of a trigonometric polynomial whose frequencies
    satisfy ``|k|_inf < n/2``; then the result is exact.  Trailing axes of
    ``values`` (e.g. seeds) are carried along.
    """
    kind = profile.kind if isinstance(profile, TestProfile) else profile
    if spectrum is None:
        spectrum = torus_spectrum(values, n)
    mult = _torus_multiplier(n, float(lam), kind, False)
    mult = mult.reshape(mult.shape + (1,) * (spectrum.ndim - 2))
    out = np.fft.ifft2(spectrum * mult, axes=(0, 1)).real
    return out.reshape((n * n,) + spectrum.shape[2:])


def torus_moment_field(values, n, lam, profile="bump", spectrum=None):
    """Fields ``p -> int y_i psi(y) T(p + lam y) dy`` for ``i = 1, 2`` (last axis).

    ``psi`` is the chosen profile; for ``dx``/``dy`` it is the derivative of
    the bump.
    """
    kind = profile.kind if isinstance(profile, TestProfile) else profile
    if spectrum is None:
        spectrum = torus_spectrum(values, n)
    mult = _torus_multiplier(n, float(lam), kind, True)
    outs = []
    for i in range(2):
        m = mult[..., i].reshape(mult.shape[:2] + (1,) * (spectrum.ndim - 2))
        outs.append(np.fft.ifft2(spectrum * m, axes=(0, 1)).real.reshape((n * n,) + spectrum.shape[2:]))
    return np.stack(outs, axis=-1)


def torus_spectrum(values, n):
    values = np.asarray(values, dtype=float)
    return np.fft.fft2(values.reshape((n, n) + values.shape[1:]), axes=(0, 1))


# ----------------------------------------------------------------------------
# exponent reports
# ----------------------------------------------------------------------------
ZERO_FLOOR = 1e-14


@dataclass
class ExponentReport:
    """Least-squares log-log slope with pass/fail against a target.

    ``mode="two_sided"`` passes when ``|slope - target| <= tolerance``;
    ``mode="lower"`` passes when ``slope >= target - tolerance``.  In both
    cases the RMS fit residual (in log2 units) must not exceed
    ``residual_max``.  Magnitudes below ``1e-14`` are treated as exact zeros;
    an all-zero series has slope ``+inf``.
    """

    label: str
    scales: list
    magnitudes: list
    target: float
    tolerance: float
    mode: str = "two_sided"
    slope: float = float("nan")
    intercept: float = float("nan")
    residual: float = float("nan")
    residual_max: float = 0.5
    window: tuple = (float("nan"), float("nan"))
    passed: bool = False
    per_point_slopes: dict = field(default_factory=dict)
    notes: str = ""

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not np.isfinite(v):
                d[k] = str(v)
        d["window"] = list(self.window)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def summary(self):
        verdict = "PASS" if self.passed else "FAIL"
        rel = ">=" if self.mode == "lower" else "~"
        return f"{verdict} {self.label}: slope={self.slope:.3f} ({rel} {self.target:.3f} tol {self.tolerance:.2f}, resid {self.residual:.3f})"


def fit_slope(x, y):
    """Slope, intercept and RMS residual of a least-squares fit of ``log2 y`` on ``log2 x``."""
    lx = np.log2(np.asarray(x, dtype=float))
    ly = np.log2(np.asarray(y, dtype=float))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2)))


def exponent_report(label, scales, magnitudes, target, tolerance, mode="two_sided", residual_max=0.5, per_point=None, notes=""):
    """Build an :class:`ExponentReport` from aggregated magnitudes per scale.

    ``per_point`` optionally holds a ``(n_points, n_scales)`` magnitude array
    whose per-point slopes are summarized in the report.
    """
    scales = np.asarray(scales, dtype=float)
    mags = np.abs(np.asarray(magnitudes, dtype=float))
    rep = ExponentReport(label=label, scales=scales.tolist(), magnitudes=mags.tolist(), target=float(target), tolerance=float(tolerance), mode=mode, residual_max=residual_max, notes=notes)
    rep.window = (float(scales.min()), float(scales.max()))
    nz = mags > ZERO_FLOOR
    if not nz.any():
        rep.slope, rep.residual = float("inf"), 0.0
    elif nz.sum() < 2:
        rep.notes = (notes + "; fewer than two nonzero magnitudes").strip("; ")
    else:
        rep.slope, rep.intercept, rep.residual = fit_slope(scales[nz], mags[nz])
    if per_point is not None:
        pp = np.abs(np.asarray(per_point, dtype=float))
        slopes = []
        for row in pp:
            ok = row > ZERO_FLOOR
            slopes.append(fit_slope(scales[ok], row[ok])[0] if ok.sum() >= 2 else float("inf"))
        slopes = np.array(slopes)
        fin = slopes[np.isfinite(slopes)]
        rep.per_point_slopes = {"n_points": int(len(slopes)), "min": float(fin.min()) if fin.size else float("inf"), "median": float(np.median(fin)) if fin.size else float("inf"), "max": float(fin.max()) if fin.size else float("inf")}
    if mode == "lower":
        ok = rep.slope >= target - tolerance
    else:
        ok = abs(rep.slope - target) <= tolerance
    rep.passed = bool(ok and (rep.residual <= residual_max))
    return rep


def resolved_scales(lams, resolution):
    """Scales at least three resolution lengths wide (all of them if ``resolution`` is None)."""
    lams = np.asarray(lams, dtype=float)
    if resolution is None:
        return lams
    return lams[lams >= RESOLVED_SPACINGS * resolution]


def fit_exponent(surface, T, points, lams, target, tol, profiles=PROFILE_FAMILY, mode="two_sided", label="exponent", residual_max=0.5, seed_reduce="rms"):
    """Fit the scaling exponent of ``sup_p sup_phi |<T, phi^lam_p>|``.

    The supremum runs over the sample ``points`` and the profile family.  If
    ``T`` returns a trailing sample axis (Monte-Carlo seeds) the magnitudes
    are reduced over it by root mean square before taking the supremum.

    Raises
    ------
    UnderResolved
        If a scale is below the resolution of ``T``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mags = np.zeros((points.shape[0], len(lams)))
    for j, lam in enumerate(lams):
        for kind in profiles:
            val = np.abs(scaled_pair(surface, T, points, lam, TestProfile(kind)))
            if val.ndim == 2:
                val = np.sqrt(np.mean(val**2, axis=1)) if seed_reduce == "rms" else val.max(axis=1)
            mags[:, j] = np.maximum(mags[:, j], val)
    return exponent_report(label, lams, mags.max(axis=0), target, tol, mode=mode, residual_max=residual_max, per_point=mags, notes=f"profiles={list(profiles)}")


# ----------------------------------------------------------------------------
# positive Hoelder norms and the Schwartz-class check
# ----------------------------------------------------------------------------
def holder_pos_norm(surface: Surface, points, values, gamma, radius=None, chunk=512):
    """``sup|f| + sup_{d(p,q) < radius} |f(p) - f(q)| / d(p,q)^gamma`` over mesh pairs.

    ``radius`` defaults to ``delta / 2``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    radius = surface.delta / 2.0 if radius is None else radius
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    best = 0.0
    for s in range(0, len(points), chunk):
        d = surface.dist(points[s : s + chunk, None, :], points[None, :, :])
        diff = np.abs(values[s : s + chunk, None] - values[None, :])
        m = (d > 0) & (d < radius)
        if m.any():
            best = max(best, float(np.max(diff[m] / d[m] ** gamma)))
    return float(np.abs(values).max()) + best


def schwartz_pair_bound_check(surface, T, p, lam, N, gamma, C=None, margin=10.0, calib_lams=None):
    """Check ``|<T, g^lam_p>| <= margin * C * C_g * lam^gamma`` for the Gaussian profile ``g``.

    ``C`` is the pairing constant of ``T`` calibrated on the compact bump:
    ``C = max_lam |<T, phi^lam_p>| / lam^gamma`` over ``calib_lams``.  The
    check is skipped (returns ``None``) when ``N <= 2``, the dimension.

    Returns
    -------
    dict or None
        ``{"lhs", "rhs", "C", "C_phi", "passed"}``.
    """
    if N <= 2:
        return None
    if C is None:
        calib_lams = calib_lams or [lam, 2 * lam]
        C = max(float(np.max(np.abs(scaled_pair(surface, T, p, l)))) / l**gamma for l in calib_lams)
    g = TestProfile("gauss")
    quad = ball_quadrature(48, 96, g.support)
    lhs = float(np.max(np.abs(scaled_pair(surface, T, p, lam, g, quad=quad, check_resolution=False))))
    C_phi = g.schwartz_constant(N, 2) / TestProfile("bump").schwartz_constant(N, 2)
    rhs = margin * C * C_phi * lam**gamma
    return {"lhs": lhs, "rhs": rhs, "C": C, "C_phi": C_phi, "passed": bool(lhs <= rhs)}
