"""Intrinsic polynomial regularity structure: jets, realization, re-expansion.

A jet of order ``n`` at a base point ``q`` is a tuple ``(a_0, ..., a_n)`` with
``a_l`` a symmetric ``l``-tensor in the frame at ``q``.  Its realization is the
function ``Pi_q a (z) = sum_l a_l(log_q z, ..., log_q z) / l!``.  The
re-expansion ``Gamma_{p<-q}`` sends a jet at ``q`` to the jet at ``p`` whose
level ``l`` component is ``Sym nabla^l`` of ``Pi_q a`` at ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .geometry import Surface, sym_contract, sym_nabla, sym_norm, sym_pair
from .holder import PROFILE_FAMILY, ExponentReport, TestProfile, exponent_report, scaled_pair

# Step for derivatives of polynomial jets: these vary on unit scale, so a
# wide 9-point stencil keeps roundoff well below the 1e-10 level at order 3.
JET_STEP = 0.1


class PolyJet:
    """Batched polynomial jet.

    Parameters
    ----------
    base : ndarray, shape (..., amb)
    comps : list of ndarray
        ``comps[l]`` has shape ``(..., l + 1)`` (compressed symmetric storage).
    """

    def __init__(self, base, comps):
        self.base = np.asarray(base, dtype=float)
        batch = self.base.shape[:-1]
        self.comps = [np.broadcast_to(np.asarray(c, dtype=float), batch + (l + 1,)).copy() for l, c in enumerate(comps)]

    @property
    def order(self):
        return len(self.comps) - 1

    @property
    def batch_shape(self):
        return self.base.shape[:-1]

    def level_norms(self):
        """Frame norms ``|a_l|`` per level, stacked on the last axis."""
        return np.stack([sym_norm(c) for c in self.comps], axis=-1)

    def __sub__(self, other):
        n = max(self.order, other.order)
        comps = [(self.comps[l] if l <= self.order else 0.0) - (other.comps[l] if l <= other.order else 0.0) for l in range(n + 1)]
        return PolyJet(self.base, comps)

    def __getitem__(self, idx):
        return PolyJet(self.base[idx], [c[idx] for c in self.comps])

    @classmethod
    def zeros(cls, base, n):
        base = np.asarray(base, dtype=float)
        return cls(base, [np.zeros(base.shape[:-1] + (l + 1,)) for l in range(n + 1)])

    @classmethod
    def unit(cls, base, n, ell, k):
        """Jet with a single entry ``k`` at level ``ell``, scaled to unit frame norm."""
        from math import comb

        jet = cls.zeros(base, n)
        jet.comps[ell][..., k] = 1.0 / np.sqrt(comb(ell, k))
        return jet

    def __repr__(self):
        return f"PolyJet(order={self.order}, batch={self.batch_shape})"


def _unit_jet(base, n, ell, k):
    return PolyJet.unit(base, n, ell, k)


def _expand(arr, batch_ndim, extra_ndim):
    """Insert ``extra_ndim`` axes after the batch axes of ``arr``."""
    shape = arr.shape[:batch_ndim] + (1,) * extra_ndim + arr.shape[batch_ndim:]
    return arr.reshape(shape)


def pi_eval(surface: Surface, jet: PolyJet, z, check=True):
    """Realize a jet: ``sum_l a_l(log_q z^l) / l!``.

    ``z`` has shape ``batch + extra + (amb,)`` where ``batch`` is the jet's
    batch shape; the result has shape ``batch + extra``.

    Raises
    ------
    CutLocus
        If some ``z`` is too far from the base point.
    """
    z = np.asarray(z, dtype=float)
    nb = len(jet.batch_shape)
    extra = z.ndim - 1 - nb
    if extra < 0:
        raise ValueError("evaluation points must carry the jet batch shape")
    base = _expand(jet.base, nb, extra)
    v = surface.log(base, z, check=check)
    out = _expand(jet.comps[0][..., 0], nb, extra) * np.ones(v.shape[:-1])
    for l in range(1, jet.order + 1):
        out = out + sym_pair(_expand(jet.comps[l], nb, extra), v) / factorial(l)
    return out


def gamma_transport(surface: Surface, jet: PolyJet, p, h=JET_STEP, half_width=4):
    """Re-expand a jet based at ``q`` around ``p``: level ``l`` is ``Sym nabla^l|_p (Pi_q jet)``.

    ``p`` must share the jet's batch shape.  Pairs with ``p == q`` return the
    jet unchanged.
    """
    p = np.asarray(p, dtype=float)
    p = np.broadcast_to(p, jet.batch_shape + p.shape[-1:])
    f = lambda z: pi_eval(surface, jet, z)
    comps = [pi_eval(surface, jet, p[..., None, :])[..., 0][..., None]]
    for l in range(1, jet.order + 1):
        comps.append(sym_nabla(surface, f, p, l, h=h, half_width=half_width))
    same = np.all(p == jet.base, axis=-1)
    if np.any(same):
        comps = [np.where(same[..., None], c0, c) for c0, c in zip(jet.comps, comps)]
    return PolyJet(p, comps)


def gamma_order1_closed(surface: Surface, jet: PolyJet, p):
    """Order-1 re-expansion ``omega(log_q p) 1 + d_p[omega o log_q]`` (oracle form)."""
    p = np.broadcast_to(np.asarray(p, dtype=float), jet.base.shape)
    omega = jet.comps[1]
    v = surface.log(jet.base, p)
    J = surface.dlog(jet.base, p)
    a0 = jet.comps[0][..., 0] + np.sum(omega * v, axis=-1)
    a1 = np.einsum("...i,...ij->...j", omega, J)
    return PolyJet(p, [a0[..., None], a1] + [np.zeros(jet.batch_shape + (l + 1,)) for l in range(2, jet.order + 1)])


def flat_gamma(surface: Surface, jet: PolyJet, p):
    """Binomial re-expansion of flat polynomials: level ``i`` is ``sum_l a_l((p-q)^{l-i}, .)/(l-i)!``."""
    p = np.broadcast_to(np.asarray(p, dtype=float), jet.base.shape)
    v = surface.log(jet.base, p)
    n = jet.order
    comps = []
    for i in range(n + 1):
        acc = np.zeros(jet.batch_shape + (i + 1,))
        for l in range(i, n + 1):
            acc = acc + sym_contract(jet.comps[l], v, l - i) / factorial(l - i)
        comps.append(acc)
    return PolyJet(p, comps)


def taylor_jet(surface: Surface, f, p, n, h=JET_STEP, half_width=4):
    """Jet ``(Sym nabla^l f|_p)_{l <= n}`` of a field sampler ``f``."""
    p = np.asarray(p, dtype=float)
    comps = [sym_nabla(surface, f, p, l, h=h, half_width=half_width) for l in range(n + 1)]
    return PolyJet(p, comps)


def taylor_approx(surface: Surface, f, p, n, h=JET_STEP):
    """Taylor approximation of order ``n`` at ``p``.

    Returns
    -------
    jet : PolyJet
    tay : callable
        ``z -> sum_k <Sym nabla^k f|_p, log_p(z)^k> / k!``.
    """
    jet = taylor_jet(surface, f, p, n, h=h)
    return jet, (lambda z: pi_eval(surface, jet, z))


def _directions(n_dir):
    ang = 2.0 * np.pi * (np.arange(n_dir) + 0.25) / n_dir
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def taylor_remainder_report(surface: Surface, f, points, n, dists=None, n_dir=8, tol=0.1, h=JET_STEP, label=None):
    """Exponent of ``max |f(q) - Tay_p^n f(q)|`` over ``d(p, q) = d`` (lower bound ``n + 1 - tol``)."""
    dists = np.asarray(dists if dists is not None else [2.0 ** -j for j in range(2, 7)], dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    jet = taylor_jet(surface, f, points, n, h=h)
    dirs = _directions(n_dir)
    mags = np.zeros((len(points), len(dists)))
    for j, d in enumerate(dists):
        z = surface.exp(points[:, None, :], np.broadcast_to(d * dirs, (len(points),) + dirs.shape))
        rem = f(z) - pi_eval(surface, jet, z)
        mags[:, j] = np.abs(rem).max(axis=1)
    return exponent_report(label or f"taylor n={n}", dists, mags.max(axis=0), n + 1, tol, mode="lower", per_point=mags)


# ----------------------------------------------------------------------------
# model certification
# ----------------------------------------------------------------------------
@dataclass
class ModelNormReport:
    """Exponent reports for the three suprema of a model norm."""

    structure: str
    beta: float
    homogeneity: list = field(default_factory=list)
    transport: list = field(default_factory=list)
    growth: list = field(default_factory=list)
    upward_levels: list = field(default_factory=list)
    profile_family: tuple = PROFILE_FAMILY
    notes: str = ""

    @property
    def passed(self):
        return all(r.passed for r in self.homogeneity + self.transport + self.growth)

    def to_dict(self):
        return {
            "structure": self.structure,
            "beta": self.beta,
            "passed": self.passed,
            "profile_family": list(self.profile_family),
            "upward_levels": self.upward_levels,
            "notes": self.notes,
            "homogeneity": [r.to_dict() for r in self.homogeneity],
            "transport": [r.to_dict() for r in self.transport],
            "growth": [r.to_dict() for r in self.growth],
        }

    def reports(self):
        return self.homogeneity + self.transport + self.growth


def _sample_second_points(surface, points, d, dirs):
    P = len(points)
    return surface.exp(points[:, None, :], np.broadcast_to(d * dirs, (P,) + dirs.shape)).reshape(-1, points.shape[-1])


def certify_model(surface: Surface, n, points, lams=None, n_dir=3, tol_hom=0.15, tol_transport=None, tol_growth=0.2, h=JET_STEP, profiles=PROFILE_FAMILY):
    """Numerically certify the polynomial model of order ``n``.

    (i) ``sup |<Pi_p tau, phi^lam_p>| / |tau|`` per level ``l`` must scale
    like ``lam^l``; (ii) the transport error
    ``<Pi_q tau - Pi_p Gamma_{p<-q} tau, phi^lam_p>`` with ``d(p, q) = lam``
    must scale at least like ``lam^(n+1)``; (iii) ``|Gamma_{p<-q} tau|_m`` must
    scale at least like ``d^(l-m)`` for ``m < l`` and stay bounded otherwise.
    """
    lams = np.asarray(lams if lams is not None else [2.0 ** -j for j in range(2, 8)], dtype=float)
    tol_transport = 0.15 if (tol_transport is None and n == 1) else (0.2 if tol_transport is None else tol_transport)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    P = len(points)
    dirs = _directions(n_dir)
    beta = n + 1
    rep = ModelNormReport(structure=f"poly(n={n}, {surface.kind})", beta=beta, profile_family=tuple(profiles))
    prof_objs = [TestProfile(k) for k in profiles]

    # (i) homogeneity
    for l in range(n + 1):
        mags = np.zeros((P, len(lams)))
        for k in range(l + 1):
            jet = _unit_jet(points, n, l, k)
            for j, lam in enumerate(lams):
                for prof in prof_objs:
                    val = scaled_pair(surface, _BatchedRealization(surface, jet), points, lam, prof)
                    mags[:, j] = np.maximum(mags[:, j], np.abs(val))
        rep.homogeneity.append(exponent_report(f"homogeneity level {l}", lams, mags.max(axis=0), l, tol_hom, per_point=mags))

    # (ii) transport error at d(p, q) = lam
    mags = np.zeros((P * n_dir, len(lams)))
    pts_rep = np.repeat(points, n_dir, axis=0)
    for j, lam in enumerate(lams):
        qs = _sample_second_points(surface, points, lam, dirs)
        for l in range(n + 1):
            for k in range(l + 1):
                jet_q = _unit_jet(qs, n, l, k)
                jet_p = gamma_transport(surface, jet_q, pts_rep, h=h)
                diff = _TransportDefect(surface, jet_q, jet_p)
                for prof in prof_objs:
                    val = scaled_pair(surface, diff, pts_rep, lam, prof)
                    mags[:, j] = np.maximum(mags[:, j], np.abs(val))
    rep.transport.append(exponent_report(f"transport error (beta={beta})", lams, mags.max(axis=0), beta, tol_transport, mode="lower", per_point=mags))

    # (iii) growth of Gamma
    for l in range(n + 1):
        growth = np.zeros((n + 1, len(lams)))
        for j, d in enumerate(lams):
            qs = _sample_second_points(surface, points, d, dirs)
            for k in range(l + 1):
                jet_p = gamma_transport(surface, _unit_jet(qs, n, l, k), pts_rep, h=h)
                growth[:, j] = np.maximum(growth[:, j], jet_p.level_norms().max(axis=0))
        for m in range(n + 1):
            target = max(l - m, 0)
            r = exponent_report(f"growth level {l}->{m}", lams, growth[m], target, tol_growth, mode="lower")
            r.notes = f"max ratio |Gamma tau|_m / d^{target} = {np.max(growth[m] / lams**target):.4g}"
            rep.growth.append(r)
            if m > l and np.max(growth[m]) > 1e-9:
                rep.upward_levels.append([l, m])
    return rep


class _BatchedRealization:
    """Field ``z -> Pi_p jet (z)`` whose batch axis follows the pairing points."""

    batched = True

    def __init__(self, surface, jet):
        self.surface = surface
        self.jet = jet

    def __call__(self, z, sl):
        return pi_eval(self.surface, self.jet[sl], z)


class _TransportDefect:
    """Field ``z -> (Pi_q tau - Pi_p Gamma_{p<-q} tau)(z)`` for batched pairs."""

    batched = True

    def __init__(self, surface, jet_q, jet_p):
        self.surface = surface
        self.jet_q = jet_q
        self.jet_p = jet_p

    def __call__(self, z, sl):
        return pi_eval(self.surface, self.jet_q[sl], z) - pi_eval(self.surface, self.jet_p[sl], z)


# ----------------------------------------------------------------------------
# modelled distributions of jets
# ----------------------------------------------------------------------------
@dataclass
class JetField:
    """Jets of a field on a set of mesh points (a polynomial modelled distribution)."""

    surface: Surface
    points: np.ndarray
    jets: PolyJet
    gamma: float

    @property
    def order(self):
        return self.jets.order


def lift_to_jets(surface: Surface, f, points, gamma, h=None):
    """Lift a smooth field to its jets of order ``n = ceil(gamma) - 1``.

    ``h`` defaults to the generic :func:`sym_nabla` step, suitable for
    band-limited fields.
    """
    n = int(np.ceil(gamma)) - 1
    points = np.asarray(points, dtype=float)
    comps = [sym_nabla(surface, f, points, l, h=h) for l in range(n + 1)]
    return JetField(surface, points, PolyJet(points, comps), float(gamma))


def mesh_pairs(surface: Surface, points, radius, chunk=1024):
    """Index pairs ``(i, j)``, ``i != j``, of mesh points with ``d < radius``."""
    I, J = [], []
    for s in range(0, len(points), chunk):
        d = surface.dist(points[s : s + chunk, None, :], points[None, :, :])
        ii, jj = np.nonzero((d < radius) & (d > 0))
        I.append(ii + s)
        J.append(jj)
    return np.concatenate(I), np.concatenate(J)


def jet_seminorm(field: JetField, radius=0.3, h=JET_STEP, pairs=None):
    """``sup_l sup_{pairs} |f(p) - Gamma_{p<-q} f(q)|_l / d^(gamma - l)``.

    Returns
    -------
    dict
        ``{"per_level": [...], "seminorm": float, "n_pairs": int}``.
    """
    S = field.surface
    I, J = pairs if pairs is not None else mesh_pairs(S, field.points, radius)
    d = S.dist(field.points[I], field.points[J])
    jet_q = field.jets[J]
    transported = gamma_transport(S, jet_q, field.points[I], h=h)
    diff = field.jets[I] - transported
    norms = diff.level_norms()
    per_level = []
    for l in range(field.order + 1):
        per_level.append(float(np.max(norms[:, l] / d ** (field.gamma - l))) if len(d) else 0.0)
    return {"per_level": per_level, "seminorm": max(per_level) if per_level else 0.0, "n_pairs": int(len(d))}
