"""The PAM regularity structures V and W, their models, norms and reconstruction.

Fiber elements are stored as arrays with trailing axis of length 4:

* V: ``[a, b, c1, c2]`` for ``Xi a + I[Xi]Xi b + (c . X) Xi``, homogeneities
  ``alpha``, ``2 alpha + 2`` and ``alpha + 1``;
* W: ``[d, e, f1, f2]`` for ``1 d + I[Xi] e + f . X``, homogeneities ``0``,
  ``alpha + 2`` and ``1``.

Cotangent slots hold coefficients in the orthonormal frame of the base
point.  Both structures re-expand with the same rule: the scalar slot picks
up ``S^t(p <- q) * (second slot) + (cotangent)(log_q p)``, the second slot
is unchanged and the cotangent is pulled back through ``d_p log_q``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CUT_MARGIN, Surface, sym_nabla
from .holder import (
    PROFILE_FAMILY,
    TestProfile,
    ball_quadrature,
    chart_jacobian,
    check_scale,
    exponent_report,
    resolved_scales,
)
from .noise import NOISE_LAMBDAS, NoiseRealization, TorusNoiseGrid
from .polymodel import ModelNormReport
from .spectral import TorusBasis

STRUCTURES = ("V", "W")
SLOT_NAMES = {"V": ("Xi", "I[Xi]Xi", "XXi"), "W": ("1", "I[Xi]", "X")}


def homogeneities(structure, alpha):
    """Homogeneities of the three slots, in slot order."""
    if structure == "V":
        return (alpha, 2.0 * alpha + 2.0, alpha + 1.0)
    if structure == "W":
        return (0.0, alpha + 2.0, 1.0)
    raise ValueError(f"unknown structure {structure!r}")


def exceptional_level(structure, alpha):
    """Level ``mu`` carrying the scaling parameter (``alpha`` for V, ``0`` for W)."""
    return alpha if structure == "V" else 0.0


def level_norms(tau):
    """``(|slot0|, |slot1|, |cotangent|)`` stacked on the last axis."""
    tau = np.asarray(tau, dtype=float)
    return np.stack([np.abs(tau[..., 0]), np.abs(tau[..., 1]), np.linalg.norm(tau[..., 2:4], axis=-1)], axis=-1)


def VFiber(a=0.0, b=0.0, c=(0.0, 0.0)):
    """Fiber element of V as an array ``[a, b, c1, c2]``."""
    c = np.asarray(c, dtype=float)
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    shape = np.broadcast_shapes(a.shape, c.shape[:-1])
    return np.concatenate([np.broadcast_to(a, shape)[..., None], np.broadcast_to(b, shape)[..., None], np.broadcast_to(c, shape + (2,))], axis=-1)


WFiber = VFiber


def mult_xi(f):
    """Multiplication by Xi, ``W -> V``: a slot-wise relabeling ``1 -> Xi, I[Xi] -> I[Xi]Xi, X -> XXi``.

    Accepts a fiber array or a :class:`ModelledDistribution`.
    """
    if isinstance(f, ModelledDistribution):
        if f.structure != "W":
            raise ValueError("multiplication by Xi maps W-valued distributions")
        return ModelledDistribution("V", f.points, f.times, f.values.copy(), f.alpha)
    return np.array(f, dtype=float, copy=True)


# ----------------------------------------------------------------------------
# the model
# ----------------------------------------------------------------------------
class PAMModel:
    """Models ``(Pi^{t,V}, Gamma^{t,V})`` and ``(Pi^{t,W}, Gamma^{t,W})`` built from one noise sample.

    Parameters
    ----------
    noise : NoiseRealization
    t : float
        Time parameter of the model.
    alpha : float
        Nominal noise regularity used for gradings and targets.
    """

    def __init__(self, noise: NoiseRealization, t, alpha=-1.2):
        self.noise = noise
        self.surface: Surface = noise.surface
        self.t = float(t)
        self.alpha = float(alpha)
        self.c_t = noise.counterterm(t)
        self._kc = noise.Kxi_coeffs(t)

    @property
    def resolution(self):
        return self.noise.resolution

    def Kxi(self, points):
        return self.noise.basis.synth(self._kc, points)

    def S(self, p, q):
        """``S^t(p <- q) = K_t xi(p) - K_t xi(q)``."""
        return self.Kxi(p) - self.Kxi(q)

    def fields(self, z):
        """``(xi, K_t xi)`` at ``z`` stacked on the last axis."""
        return self.noise.basis.synth(np.stack([self.noise.g, self._kc], axis=-1), z)

    # -- realizations ---------------------------------------------------------
    def pi(self, structure, p, tau):
        """Sampler of ``Pi_p tau``; batched when ``p`` is a batch of points."""
        return _ModelSampler(self, structure, p, tau)

    def pi_V(self, p, tau):
        return self.pi("V", p, tau)

    def pi_W(self, p, tau):
        return self.pi("W", p, tau)

    # -- transport ---------------------------------------------------------------
    def gamma(self, structure, p, q, tau, S=None):
        """Re-expand ``tau`` (based at ``q``) around ``p``.

        Raises
        ------
        CutLocus
            If ``d(p, q)`` reaches the cut-locus margin.
        """
        if structure not in STRUCTURES:
            raise ValueError(f"unknown structure {structure!r}")
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        tau = np.asarray(tau, dtype=float)
        if S is None:
            S = self.S(p, q)
        return transport(self.surface, p, q, tau, S)

    def gamma_V(self, p, q, tau):
        return self.gamma("V", p, q, tau)

    def gamma_W(self, p, q, tau):
        return self.gamma("W", p, q, tau)


def transport(surface: Surface, p, q, tau, S):
    """Shared re-expansion rule of V and W given the scalar ``S^t(p <- q)``."""
    v = surface.log(q, p)
    J = surface.dlog(q, p)
    out = np.empty(np.broadcast_shapes(tau.shape, v.shape[:-1] + (4,)))
    out[..., 0] = tau[..., 0] + tau[..., 1] * S + np.sum(tau[..., 2:4] * v, axis=-1)
    out[..., 1] = tau[..., 1]
    out[..., 2:4] = np.einsum("...i,...ij->...j", tau[..., 2:4], J)
    same = np.all(p == q, axis=-1)
    if np.any(same):
        out = np.where(same[..., None], tau, out)
    return out


class _ModelSampler:
    """``z -> (Pi_p tau)(z)`` (minus ``Pi_p' tau'`` when a second pair is given)."""

    batched = True

    def __init__(self, model: PAMModel, structure, p, tau, minus=None):
        self.model = model
        self.structure = structure
        self.p = np.atleast_2d(np.asarray(p, dtype=float))
        self.tau = np.broadcast_to(np.asarray(tau, dtype=float), self.p.shape[:-1] + (4,))
        self.kp = model.Kxi(self.p)
        self.minus = minus
        self.resolution = model.resolution

    def values(self, z, sl, fields):
        S = self.model.surface
        P = self.p[sl]
        tau = self.tau[sl]
        extra = z.ndim - 2
        shp = (P.shape[0],) + (1,) * extra
        v = S.log(P.reshape(shp + P.shape[-1:]), z)
        xi, kx = fields[..., 0], fields[..., 1]
        cot = np.sum(tau[:, 2:4].reshape(shp + (2,)) * v, axis=-1)
        a = tau[:, 0].reshape(shp)
        b = tau[:, 1].reshape(shp)
        kp = self.kp[sl].reshape(shp)
        if self.structure == "V":
            return a * xi + b * (xi * (kx - kp) - self.model.c_t) + cot * xi
        return a + b * (kx - kp) + cot

    def __call__(self, z, sl=slice(None)):
        fields = self.model.fields(z)
        out = self.values(z, sl, fields)
        if self.minus is not None:
            out = out - self.minus.values(z, sl, fields)
        return out


def unit_elements():
    """Unit elements of the three levels: scalar slots and the two frame covectors."""
    return {0: [VFiber(1.0, 0.0)], 1: [VFiber(0.0, 1.0)], 2: [VFiber(0.0, 0.0, (1.0, 0.0)), VFiber(0.0, 0.0, (0.0, 1.0))]}


# ----------------------------------------------------------------------------
# model certification
# ----------------------------------------------------------------------------
class BallNodes:
    """Ball-quadrature nodes around a batch of points with weights for several profiles.

    Evaluating a sampler once on :attr:`z` and contracting with
    :attr:`weights` gives the pairings with every profile at once, which is
    what makes the quadrature route affordable when the field evaluation is
    the expensive part.
    """

    def __init__(self, surface: Surface, points, lam, profiles=PROFILE_FAMILY, resolution=None):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        profs = [TestProfile(k) for k in profiles]
        for pr in profs:
            check_scale(surface, lam, pr, _Res(resolution))
        quad = ball_quadrature()
        y = quad.nodes
        jac = chart_jacobian(surface, lam * quad.radii)
        self.weights = np.stack([quad.weights * pr(y) * jac for pr in profs])
        self.points = points
        self.z = surface.exp(points[:, None, :], np.broadcast_to(lam * y, (len(points),) + y.shape))

    def pair(self, values):
        """``values`` of shape ``(P, n_nodes)`` -> pairings ``(P, n_profiles)``."""
        return values @ self.weights.T


class _Res:
    def __init__(self, resolution):
        self.resolution = resolution


def _pair_profiles(surface, T, points, lam, profiles):
    nodes = BallNodes(surface, points, lam, profiles, getattr(T, "resolution", None))
    vals = T(nodes.z, slice(None)) if getattr(T, "batched", False) else T(nodes.z)
    return np.abs(nodes.pair(vals))


def homogeneity_torus(model: PAMModel, structure, lams, mesh=64, profiles=PROFILE_FAMILY, tol=0.2):
    """Homogeneity reports of all three levels on the torus, exact through FFT multipliers.

    The supremum runs over the ``mesh x mesh`` grid and the profile family.
    """
    grid: TorusNoiseGrid = model.noise.grid()
    idx = grid.mesh_index(mesh)
    hom = homogeneities(structure, model.alpha)
    mags = np.zeros((3, len(idx), len(lams)))
    t = model.t
    for j, lam in enumerate(lams):
        for kind in profiles:
            if structure == "V":
                l0 = np.abs(grid.pair_xi(lam, kind)[idx])
                l1 = np.abs(grid.pair_Z(t, lam, kind)[idx])
                l2 = np.linalg.norm(grid.pair_omega_xi(lam, kind)[idx], axis=-1)
            else:
                mass = 1.0 if kind in ("bump", "gauss") else 0.0
                mom = _unit_moment(kind)
                l0 = np.full(len(idx), mass)
                l1 = np.abs(grid.pair_IXi(t, lam, kind)[idx])
                l2 = np.full(len(idx), lam * mom)
            for lvl, val in enumerate((l0, l1, l2)):
                mags[lvl, :, j] = np.maximum(mags[lvl, :, j], val)
    reps = []
    for lvl in range(3):
        reps.append(exponent_report(f"{structure} hom {SLOT_NAMES[structure][lvl]}", lams, mags[lvl].max(axis=0), hom[lvl], tol, per_point=mags[lvl], notes=f"t={t}, K={model.noise.K}, mesh={mesh}^2, profiles={list(profiles)}, route=fft"))
    return reps


def _unit_moment(kind):
    """``sup_|omega|=1 |int (omega . y) psi(y) dy|`` for a profile ``psi``."""
    if kind in ("dx", "dy"):
        return 1.0
    return 0.0


def homogeneity_quadrature(model: PAMModel, structure, points, lams, profiles=PROFILE_FAMILY, tol=0.2):
    """Homogeneity reports by ball quadrature (any surface)."""
    S = model.surface
    hom = homogeneities(structure, model.alpha)
    units = unit_elements()
    points = np.atleast_2d(points)
    mags = np.zeros((3, len(points), len(lams)))
    for j, lam in enumerate(lams):
        nodes = BallNodes(S, points, lam, profiles, model.resolution)
        fields = model.fields(nodes.z)
        for lvl in range(3):
            for tau in units[lvl]:
                vals = model.pi(structure, points, tau).values(nodes.z, slice(None), fields)
                mags[lvl, :, j] = np.maximum(mags[lvl, :, j], np.abs(nodes.pair(vals)).max(axis=-1))
    return [exponent_report(f"{structure} hom {SLOT_NAMES[structure][l]}", lams, mags[l].max(axis=0), hom[l], tol, per_point=mags[l], notes=f"t={model.t}, route=quadrature, profiles={list(profiles)}") for l in range(3)]


def _offset_points(surface, points, d, n_dir=3):
    """Points at distance ``d`` from each base point in ``n_dir`` frame directions."""
    ang = np.pi * np.arange(n_dir) / n_dir + 0.3
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    base = np.repeat(points, n_dir, axis=0)
    v = np.tile(dirs, (len(points), 1)) * d
    return base, surface.exp(base, v)


def transport_reports(model: PAMModel, structure, points, lams, profiles=PROFILE_FAMILY, n_dir=2, tol=0.2):
    """Transport-error reports: ``|<Pi_q tau - Pi_p Gamma_{p<-q} tau, phi^lam_p>|`` with ``d(p, q) = lam``.

    ``beta = 2 + alpha`` for V and ``2`` for W; the fit is a lower bound.
    """
    S = model.surface
    beta = 2.0 + model.alpha if structure == "V" else 2.0
    units = unit_elements()
    per_level = np.zeros((3, len(lams)))
    for j, lam in enumerate(lams):
        p, q = _offset_points(S, np.atleast_2d(points), lam, n_dir)
        Sq = model.S(p, q)
        nodes = BallNodes(S, p, lam, profiles, model.resolution)
        fields = model.fields(nodes.z)
        for lvl in range(3):
            for tau in units[lvl]:
                tq = np.broadcast_to(tau, q.shape[:-1] + (4,))
                tp = transport(S, p, q, tq, Sq)
                vals = _ModelSampler(model, structure, q, tq).values(nodes.z, slice(None), fields)
                vals = vals - _ModelSampler(model, structure, p, tp).values(nodes.z, slice(None), fields)
                per_level[lvl, j] = max(per_level[lvl, j], float(np.abs(nodes.pair(vals)).max()))
    return [exponent_report(f"{structure} transport {SLOT_NAMES[structure][l]}", lams, per_level[l], beta, tol, mode="lower", notes=f"t={model.t}, K={model.noise.K}, d(p,q)=lambda") for l in range(3)]


def growth_reports(model: PAMModel, structure, points, dists, n_dir=3, tol=0.2):
    """Growth of ``|Gamma_{p<-q} tau|_m / d^{(l-m) v 0}`` as fitted exponents.

    The nonconstant entries are ``S^t(p <- q)`` (exponent ``alpha + 2``) and
    ``omega(log_q p)`` (exponent ``1``), each landing in the lowest level.
    """
    S = model.surface
    mS = np.zeros(len(dists))
    mw = np.zeros(len(dists))
    for j, d in enumerate(dists):
        p, q = _offset_points(S, np.atleast_2d(points), d, n_dir)
        mS[j] = np.max(np.abs(model.S(p, q)))
        mw[j] = np.max(np.linalg.norm(S.log(q, p), axis=-1))
    hom = homogeneities(structure, model.alpha)
    return [
        exponent_report(f"{structure} growth S", dists, mS, hom[1] - hom[0], tol, mode="lower", notes=f"t={model.t}"),
        exponent_report(f"{structure} growth omega", dists, mw, hom[2] - hom[0], tol, mode="lower"),
    ]


def certify_pam_model(model: PAMModel, structure, points=None, lams=None, transport_points=None, transport_lams=None, tol=0.2, mesh=64):
    """Full certification of one of the two models.

    Homogeneity uses the FFT route on the torus and quadrature elsewhere.
    """
    S = model.surface
    if lams is None:
        lams = resolved_scales(NOISE_LAMBDAS, model.resolution)
    if isinstance(model.noise.basis, TorusBasis):
        hom = homogeneity_torus(model, structure, lams, mesh=mesh, tol=tol)
    else:
        pts = S.mesh(256) if points is None else points
        hom = homogeneity_quadrature(model, structure, pts, lams, tol=tol)
    tp = S.mesh(64)[::512] if transport_points is None else transport_points
    tl = lams if transport_lams is None else transport_lams
    tr = transport_reports(model, structure, tp, tl, tol=tol)
    gr = growth_reports(model, structure, tp, tl, tol=tol)
    beta = 2.0 + model.alpha if structure == "V" else 2.0
    return ModelNormReport(structure=structure, beta=beta, homogeneity=hom, transport=tr, growth=gr, notes=f"t={model.t}, K={model.noise.K}")


# ----------------------------------------------------------------------------
# modelled distributions and their norms
# ----------------------------------------------------------------------------
@dataclass
class ModelledDistribution:
    """A time-indexed section ``p -> fiber`` sampled on a fixed point set.

    Attributes
    ----------
    structure : {"V", "W"}
    points : ndarray, shape (P, amb)
    times : ndarray, shape (M,)
    values : ndarray, shape (M, P, 4)
    alpha : float
    """

    structure: str
    points: np.ndarray
    times: np.ndarray
    values: np.ndarray
    alpha: float = -1.2

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times), len(self.points), 4):
            raise ValueError("values must have shape (n_times, n_points, 4)")

    def __sub__(self, other):
        return ModelledDistribution(self.structure, self.points, self.times, self.values - other.values, self.alpha)

    @classmethod
    def zeros_like(cls, other):
        return cls(other.structure, other.points, other.times, np.zeros_like(other.values), other.alpha)


@dataclass
class PairSet:
    """Mesh pairs ``(p_i, q_j)`` within a radius with the geometry needed for transport."""

    i: np.ndarray
    j: np.ndarray
    d: np.ndarray
    v: np.ndarray
    J: np.ndarray

    @classmethod
    def build(cls, surface: Surface, points, radius=None, chunk=512):
        radius = surface.delta / 2.0 if radius is None else radius
        radius = min(radius, CUT_MARGIN * surface.delta * 0.999)
        I, Jx = [], []
        for s in range(0, len(points), chunk):
            d = surface.dist(points[s : s + chunk, None, :], points[None, :, :])
            a, b = np.nonzero((d > 0) & (d < radius))
            I.append(a + s)
            Jx.append(b)
        i = np.concatenate(I)
        j = np.concatenate(Jx)
        p, q = points[i], points[j]
        return cls(i=i, j=j, d=surface.dist(p, q), v=surface.log(q, p), J=surface.dlog(q, p))


def defect_levels(pairs: PairSet, tau_p, tau_q, S):
    """``|g(p) - Gamma_{p<-q} g(q)|`` per level for all pairs; shape ``(n_pairs, 3)``."""
    g = np.empty_like(tau_q)
    g[..., 0] = tau_q[..., 0] + tau_q[..., 1] * S + np.sum(tau_q[..., 2:4] * pairs.v, axis=-1)
    g[..., 1] = tau_q[..., 1]
    g[..., 2:4] = np.einsum("...i,...ij->...j", tau_q[..., 2:4], pairs.J)
    return level_norms(tau_p - g)


def norm_D(f: ModelledDistribution, k, gamma, N, pairs: PairSet, kxi_values, components=False):
    """``||f(t_k)||_{D^{t,gamma,N}}`` over the mesh pairs.

    Parameters
    ----------
    f : ModelledDistribution
    k : int
        Time index.
    gamma : float
    N : float
        Scaling parameter multiplying the exceptional level.
    pairs : PairSet
    kxi_values : ndarray, shape (P,)
        ``K_t xi`` at the points for the time of index ``k`` (enters ``S``).
    components : bool
        Return a dict of the separate suprema instead of the total.
    """
    hom = np.array(homogeneities(f.structure, f.alpha))
    mu = exceptional_level(f.structure, f.alpha)
    active = hom < gamma
    vals = f.values[k]
    pw = level_norms(vals)[:, active].max() if active.any() else 0.0
    S = kxi_values[pairs.i] - kxi_values[pairs.j]
    defs = defect_levels(pairs, vals[pairs.i], vals[pairs.j], S)
    quot = defs / pairs.d[:, None] ** (gamma - hom[None, :])
    regular = 0.0
    special = 0.0
    for lvl in range(3):
        if not active[lvl]:
            continue
        m = float(quot[:, lvl].max()) if len(quot) else 0.0
        if np.isclose(hom[lvl], mu):
            special = max(special, m)
        else:
            regular = max(regular, m)
    total = pw + regular + N * special
    if components:
        return {"pointwise": pw, "regular": regular, "exceptional": special, "total": total}
    return total


def time_seminorm(f: ModelledDistribution, gamma0):
    """``sup_p sup_{s != t} |f(t,p) - f(s,p)|_upsilon / |t - s|^gamma0`` (scalar slot 0)."""
    v = f.values[..., 0]
    t = f.times
    best = 0.0
    for a in range(len(t)):
        dt = np.abs(t[a + 1 :] - t[a])
        if dt.size == 0:
            continue
        diff = np.abs(v[a + 1 :] - v[a][None, :])
        best = max(best, float((diff / dt[:, None] ** gamma0).max()))
    return best


def norm_DT(f: ModelledDistribution, gamma, gamma0, N, pairs: PairSet, kxi_table, components=False):
    """``||f||_{D^{gamma,gamma0,N}_T}``: sup over times of :func:`norm_D` plus the time seminorm.

    ``kxi_table`` has shape ``(n_times, P)`` with ``K_t xi`` at every time node.
    """
    space = max(norm_D(f, k, gamma, N, pairs, kxi_table[k]) for k in range(len(f.times)))
    tm = time_seminorm(f, gamma0)
    if components:
        return {"space": space, "time": tm, "total": space + tm}
    return space + tm


# ----------------------------------------------------------------------------
# reconstruction
# ----------------------------------------------------------------------------
class SlotField:
    """A fiber-valued field given by a callable ``z -> (..., 4)``."""

    def __init__(self, structure, func):
        self.structure = structure
        self.func = func

    def __call__(self, z):
        return self.func(z)


def lift_function(surface: Surface, w, structure="W", h=None):
    """Lift a smooth function to ``1 w + X dw`` (or ``Xi w + XXi dw`` for V)."""

    def func(z):
        z = np.asarray(z, dtype=float)
        grad = sym_nabla(surface, w, z, 1, h=h)
        out = np.zeros(z.shape[:-1] + (4,))
        out[..., 0] = w(z)
        out[..., 2:4] = grad
        return out

    return SlotField(structure, func)


def solution_like_field(model: PAMModel, w, structure="W", h=None):
    """The element ``1 w K_t xi + I[Xi] w + X (K_t xi) dw`` (germ of a solution)."""
    S = model.surface

    def func(z):
        z = np.asarray(z, dtype=float)
        wz = w(z)
        kz = model.Kxi(z)
        out = np.zeros(z.shape[:-1] + (4,))
        out[..., 0] = wz * kz
        out[..., 1] = wz
        out[..., 2:4] = kz[..., None] * sym_nabla(S, w, z, 1, h=h)
        return out

    return SlotField(structure, func)


def reconstruct_sampler(model: PAMModel, f: SlotField):
    """Sampler of ``R f``: ``W``: slot 0; ``V``: ``a xi - b c_t`` (pointwise evaluation)."""

    def R(z):
        vals = f(z)
        if f.structure == "W":
            return vals[..., 0]
        xi = model.noise.xi(z)
        return vals[..., 0] * xi - vals[..., 1] * model.c_t

    R.resolution = model.resolution
    return R


def reconstruct(f: ModelledDistribution, k, model: PAMModel):
    """Nodal reconstruction of a sampled modelled distribution at time index ``k``."""
    vals = f.values[k]
    if f.structure == "W":
        return vals[:, 0].copy()
    return vals[:, 0] * model.noise.xi(f.points) - vals[:, 1] * model.c_t


class _ReconstructionDefect:
    batched = True

    def __init__(self, model, f, p, candidate=None):
        self.R = candidate or reconstruct_sampler(model, f)
        self.model = model
        self.p = np.atleast_2d(p)
        self.fp = f(self.p)
        self.local = _ModelSampler(model, f.structure, self.p, self.fp)
        self.resolution = model.resolution

    def __call__(self, z, sl=slice(None)):
        return self.R(z) - self.local(z, sl)


def reconstruction_bound_check(model: PAMModel, f: SlotField, points, lams, gamma, tol=0.2, profiles=PROFILE_FAMILY, candidate=None, label=None):
    """Fit ``sup_p |<R f - Pi_p f(p), phi^lam_p>|`` against ``lam^gamma`` (lower bound).

    ``candidate`` replaces the reconstruction by another sampler; a wrong
    candidate should fail the bound (perturbation rejection).
    """
    S = model.surface
    points = np.atleast_2d(points)
    T = _ReconstructionDefect(model, f, points, candidate)
    mags = np.zeros((len(points), len(lams)))
    for j, lam in enumerate(lams):
        mags[:, j] = _pair_profiles(S, T, points, lam, profiles).max(axis=-1)
    label = label or f"reconstruction {f.structure}"
    return exponent_report(label, lams, mags.max(axis=0), gamma, tol, mode="lower", per_point=mags, notes=f"t={model.t}, K={model.noise.K}")
