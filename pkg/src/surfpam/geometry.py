"""Surface backends and numerical symmetric covariant derivatives.

Two closed surfaces are provided: the flat torus ``[0, 2*pi)^2`` and the unit
sphere embedded in R^3.  Points are stored as arrays whose last axis holds the
coordinates (two angles on the torus, a unit 3-vector on the sphere).  Tangent
vectors and covectors are stored as two coefficients in a deterministic
orthonormal frame at the base point, so that a cotangent vector ``w`` acts on a
tangent vector ``v`` through ``w @ v``.

Symmetric tensors of order ``l`` on a 2-D space are stored compressed as the
``l + 1`` numbers ``T_k = T(e1, ..., e1, e2, ..., e2)`` with ``k`` copies of
``e2``.  The helpers :func:`sym_pair`, :func:`sym_contract` and
:func:`sym_norm` act on this storage.
"""
from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb

import numpy as np

from .errors import CutLocus, StepTooLarge

TWO_PI = 2.0 * np.pi
CUT_MARGIN = 0.95


# ----------------------------------------------------------------------------
# symmetric tensors in two dimensions
# ----------------------------------------------------------------------------
@lru_cache(maxsize=None)
def _binomials(ell):
    return np.array([comb(ell, k) for k in range(ell + 1)], dtype=float)


def sym_pair(T, v):
    """Evaluate a compressed symmetric tensor on ``v`` repeated ``l`` times.

    Parameters
    ----------
    T : ndarray, shape (..., l+1)
    v : ndarray, shape (..., 2)

    Returns
    -------
    ndarray, shape (...)
    """
    T = np.asarray(T, dtype=float)
    v = np.asarray(v, dtype=float)
    ell = T.shape[-1] - 1
    if ell == 0:
        return np.broadcast_to(T[..., 0], np.broadcast_shapes(T.shape[:-1], v.shape[:-1])).copy()
    k = np.arange(ell + 1)
    v1 = v[..., 0:1]
    v2 = v[..., 1:2]
    mono = v1 ** (ell - k) * v2**k
    return np.sum(_binomials(ell) * mono * T, axis=-1)


def sym_contract(T, v, j):
    """Contract a compressed tensor of order ``l`` with ``v`` repeated ``j`` times.

    Returns the compressed tensor of order ``l - j``.
    """
    T = np.asarray(T, dtype=float)
    ell = T.shape[-1] - 1
    if j > ell:
        raise ValueError("cannot contract more slots than the tensor order")
    v = np.asarray(v, dtype=float)
    out = []
    for i in range(ell - j + 1):
        acc = 0.0
        for a in range(j + 1):
            acc = acc + comb(j, a) * v[..., 0] ** (j - a) * v[..., 1] ** a * T[..., i + a]
        out.append(acc)
    return np.stack(np.broadcast_arrays(*out), axis=-1)


def sym_norm(T):
    """Frobenius norm of the full tensor represented by compressed ``T``."""
    T = np.asarray(T, dtype=float)
    ell = T.shape[-1] - 1
    return np.sqrt(np.sum(_binomials(ell) * T**2, axis=-1))


def sym_full(T):
    """Expand a compressed tensor to the full array of shape ``(2,)*l``."""
    T = np.asarray(T, dtype=float)
    ell = T.shape[-1] - 1
    full = np.zeros((2,) * ell)
    for idx in itertools.product((0, 1), repeat=ell):
        full[idx] = T[sum(idx)]
    return full


def symmetrize(full):
    """Symmetrization projection of a raw order-``l`` tensor, returned compressed."""
    full = np.asarray(full, dtype=float)
    ell = full.ndim
    sums = np.zeros(ell + 1)
    counts = np.zeros(ell + 1)
    for idx in itertools.product((0, 1), repeat=ell):
        sums[sum(idx)] += full[idx]
        counts[sum(idx)] += 1
    return sums / counts


# ----------------------------------------------------------------------------
# finite-difference weights
# ----------------------------------------------------------------------------
@lru_cache(maxsize=None)
def stencil_weights(order, half_width):
    """Central finite-difference weights on the integer nodes ``-m..m``.

    Uses Fornberg's recursion, which is numerically stable for the small
    stencils used here.  The returned weights approximate the ``order``-th
    derivative at 0 for unit spacing, with accuracy ``O(h^(2m + 1 - order))``
    rounded up to the next even power by symmetry.
    """
    nodes = np.arange(-half_width, half_width + 1, dtype=float)
    n = len(nodes)
    if order >= n:
        raise ValueError("stencil too small for the requested derivative order")
    c = np.zeros((n, order + 1))
    c1 = 1.0
    c4 = nodes[0]
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i]
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order].copy()


@lru_cache(maxsize=None)
def _polarization(ell):
    phis = np.pi * np.arange(ell + 1) / (ell + 1)
    k = np.arange(ell + 1)
    A = _binomials(ell) * np.cos(phis)[:, None] ** (ell - k) * np.sin(phis)[:, None] ** k
    return np.cos(phis), np.sin(phis), np.linalg.inv(A)


# ----------------------------------------------------------------------------
# surfaces
# ----------------------------------------------------------------------------
class Surface:
    """Common interface of the surface backends.

    Attributes
    ----------
    kind : str
        ``"torus"`` or ``"sphere"``.
    ambient_dim : int
        Length of the coordinate axis of a point.
    delta : float
        Injectivity radius.
    volume : float
        Total Riemannian volume.
    curvature : float
        Constant Gauss curvature.
    """

    kind = ""
    ambient_dim = 0
    delta = np.pi
    volume = 0.0
    curvature = 0.0

    # subclasses implement: normalize, frame, exp, _log_unchecked, dist,
    # parallel_transport, dlog, quadrature, mesh, random_points

    def log(self, p, q, check=True):
        """Inverse of the exponential map, in frame coordinates at ``p``.

        Raises
        ------
        CutLocus
            If ``dist(p, q) >= 0.95 * delta`` and ``check`` is true.
        """
        v = self._log_unchecked(p, q)
        if check:
            r = self.dist(p, q)
            if np.any(r >= CUT_MARGIN * self.delta):
                raise CutLocus(f"dist(p, q) = {np.max(r):.6g} reaches the cut-locus margin {CUT_MARGIN * self.delta:.6g}")
        return v

    def in_range(self, p, q):
        """Boolean mask of pairs that may be passed to :meth:`log`."""
        return self.dist(p, q) < CUT_MARGIN * self.delta

    def mesh_export(self, n=None):
        """Mesh points and equal or quadrature weights as a 2-D array for CSV export."""
        pts = self.mesh(n) if n else self.mesh()
        w = np.full(len(pts), self.volume / len(pts))
        return np.column_stack([pts, w])

    def __repr__(self):
        return f"{type(self).__name__}()"


class Torus(Surface):
    """Flat torus with both side lengths ``2*pi``."""

    kind = "torus"
    ambient_dim = 2
    delta = np.pi
    volume = TWO_PI**2
    curvature = 0.0

    def normalize(self, p):
        return np.mod(np.asarray(p, dtype=float), TWO_PI)

    def frame(self, p):
        p = np.asarray(p, dtype=float)
        e1 = np.zeros_like(p)
        e2 = np.zeros_like(p)
        e1[..., 0] = 1.0
        e2[..., 1] = 1.0
        return e1, e2

    def exp(self, p, v):
        return np.mod(np.asarray(p, dtype=float) + np.asarray(v, dtype=float), TWO_PI)

    def _log_unchecked(self, p, q):
        d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
        return np.mod(d + np.pi, TWO_PI) - np.pi

    def dist(self, p, q):
        return np.linalg.norm(self._log_unchecked(p, q), axis=-1)

    def parallel_transport(self, p, q, v):
        self.log(p, q)
        return np.array(v, dtype=float, copy=True) * np.ones(np.broadcast_shapes(np.shape(p), np.shape(q)))

    def dlog(self, q, p):
        """Jacobian of ``z -> log(q, z)`` at ``z = p`` in the frames at ``p`` and ``q``."""
        self.log(q, p)
        shape = np.broadcast_shapes(np.shape(p), np.shape(q))[:-1]
        return np.broadcast_to(np.eye(2), shape + (2, 2)).copy()

    def quadrature(self, n=64):
        """Uniform ``n x n`` grid; exact for trigonometric polynomials of degree < n."""
        x = TWO_PI * np.arange(n) / n
        X, Y = np.meshgrid(x, x, indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        weights = np.full(n * n, (TWO_PI / n) ** 2)
        return nodes, weights

    def mesh(self, n=64):
        return self.quadrature(n)[0]

    def random_points(self, rng, size):
        return rng.uniform(0.0, TWO_PI, size=(size, 2))


class Sphere(Surface):
    """Unit sphere in R^3 with the round metric."""

    kind = "sphere"
    ambient_dim = 3
    delta = np.pi
    volume = 4.0 * np.pi
    curvature = 1.0
    reference_axis = np.array([0.0, 0.0, 1.0])
    fallback_axis = np.array([1.0, 0.0, 0.0])
    fallback_threshold = 1e-4

    def normalize(self, p):
        p = np.asarray(p, dtype=float)
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    def frame(self, p):
        """Orthonormal frame ``(e1, e2)`` at ``p`` as ambient vectors.

        ``e1`` is the normalized tangential projection of the z-axis; within
        ``1e-4`` of the poles the x-axis is used instead.  ``e2 = e1 x p``.
        """
        p = np.asarray(p, dtype=float)
        a = np.broadcast_to(self.reference_axis, p.shape)
        w = a - np.sum(a * p, axis=-1, keepdims=True) * p
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        b = np.broadcast_to(self.fallback_axis, p.shape)
        wb = b - np.sum(b * p, axis=-1, keepdims=True) * p
        use_b = nw < self.fallback_threshold
        w = np.where(use_b, wb, w)
        e1 = w / np.linalg.norm(w, axis=-1, keepdims=True)
        e2 = np.cross(e1, p)
        return e1, e2

    def to_ambient(self, p, v):
        e1, e2 = self.frame(p)
        v = np.asarray(v, dtype=float)
        return v[..., 0:1] * e1 + v[..., 1:2] * e2

    def from_ambient(self, p, V):
        e1, e2 = self.frame(p)
        return np.stack([np.sum(V * e1, axis=-1), np.sum(V * e2, axis=-1)], axis=-1)

    def exp(self, p, v):
        p = np.asarray(p, dtype=float)
        V = self.to_ambient(p, v)
        th = np.linalg.norm(V, axis=-1, keepdims=True)
        q = np.cos(th) * p + np.sinc(th / np.pi) * V
        q = q / np.linalg.norm(q, axis=-1, keepdims=True)
        return np.where(th == 0, p, q)

    def _log_ambient(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        c = np.sum(p * q, axis=-1, keepdims=True)
        w = q - c * p
        s = np.linalg.norm(w, axis=-1, keepdims=True)
        th = np.arctan2(s, c)
        ratio = np.where(s > 0, th / np.where(s > 0, s, 1.0), 1.0)
        return ratio * w

    def _log_unchecked(self, p, q):
        return self.from_ambient(p, self._log_ambient(p, q))

    def dist(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        return np.arctan2(np.linalg.norm(np.cross(p, q), axis=-1), np.sum(p * q, axis=-1))

    def parallel_transport(self, p, q, v):
        """Transport ``v`` (frame coordinates at ``p``) along the geodesic to ``q``."""
        self.log(p, q)
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        V = self.to_ambient(p, v)
        L = self._log_ambient(p, q)
        th = np.linalg.norm(L, axis=-1, keepdims=True)
        safe = th > 0
        u = np.where(safe, L / np.where(safe, th, 1.0), 0.0)
        a = np.sum(V * u, axis=-1, keepdims=True)
        W = V - a * u + a * (np.cos(th) * u - np.sin(th) * p)
        return self.from_ambient(q, W)

    def dlog(self, q, p):
        """Jacobian of ``z -> log(q, z)`` at ``z = p`` in the frames at ``p`` and ``q``.

        Radial directions map isometrically (Gauss lemma) and the direction
        normal to the connecting great circle is stretched by ``theta/sin(theta)``.
        """
        self.log(q, p)
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        shape = np.broadcast_shapes(p.shape, q.shape)
        p = np.broadcast_to(p, shape)
        q = np.broadcast_to(q, shape)
        Lq = self._log_ambient(q, p)
        Lp = self._log_ambient(p, q)
        th = np.linalg.norm(Lq, axis=-1, keepdims=True)
        small = th < 1e-7
        ths = np.where(small, 1.0, th)
        uq = Lq / ths
        tp = -Lp / ths
        n = np.cross(q, p)
        n = n / np.where(small, 1.0, np.linalg.norm(n, axis=-1, keepdims=True))
        rho = th / np.where(small, 1.0, np.sin(ths))
        ep = self.frame(p)
        eq = self.frame(q)
        J = np.empty(shape[:-1] + (2, 2))
        for j in range(2):
            w = ep[j]
            img = np.sum(w * tp, axis=-1, keepdims=True) * uq + rho * np.sum(w * n, axis=-1, keepdims=True) * n
            img = np.where(small, w, img)
            for i in range(2):
                J[..., i, j] = np.sum(eq[i] * img, axis=-1)
        return J

    def quadrature(self, n_lat=64, n_lon=None):
        """Gauss-Legendre in ``cos(theta)`` times uniform longitude.

        Exact for spherical polynomials of degree ``<= min(2*n_lat - 1, n_lon - 1)``.
        """
        n_lon = 2 * n_lat if n_lon is None else n_lon
        x, w = np.polynomial.legendre.leggauss(n_lat)
        phi = TWO_PI * (np.arange(n_lon) + 0.5) / n_lon
        st = np.sqrt(1.0 - x**2)
        X = st[:, None] * np.cos(phi)[None, :]
        Y = st[:, None] * np.sin(phi)[None, :]
        Z = np.broadcast_to(x[:, None], X.shape)
        nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
        weights = np.repeat(w, n_lon) * (TWO_PI / n_lon)
        return nodes, weights

    def mesh(self, n=4096):
        """Fibonacci lattice with ``n`` nearly uniform points."""
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        phi = np.pi * (1.0 + np.sqrt(5.0)) * i
        r = np.sqrt(1.0 - z**2)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])

    def random_points(self, rng, size):
        return self.normalize(rng.standard_normal((size, 3)))


def make_surface(kind):
    """Return a surface backend by name."""
    if kind == "torus":
        return Torus()
    if kind == "sphere":
        return Sphere()
    raise ValueError(f"unknown surface kind {kind!r}")


# ----------------------------------------------------------------------------
# symmetric covariant derivatives
# ----------------------------------------------------------------------------
DEFAULT_STEP_FRACTION = 1e-3


def sym_nabla(surface, f, p, ell, h=None, half_width=4):
    """Symmetrized covariant derivative ``Sym nabla^l f`` at ``p``.

    The ``l``-th derivative of ``t -> f(exp_p(t v))`` at ``t = 0`` equals the
    symmetric tensor evaluated on ``v`` repeated ``l`` times.  It is taken by a
    central ``(2*half_width + 1)``-point stencil along ``l + 1`` frame
    directions and the tensor is recovered from these directional values by
    solving the polarization system.

    Parameters
    ----------
    surface : Surface
    f : callable
        Maps an array of points ``(..., amb)`` to values ``(...)`` or
        ``(..., m)``.  The leading axes of the input are those of ``p``
        followed by two stencil axes, so batched integrands that depend on the
        base point can broadcast against them.
    p : ndarray, shape (..., amb)
    ell : int
    h : float, optional
        Step length; defaults to ``1e-3 * delta``.
    half_width : int

    Returns
    -------
    ndarray, shape (..., l+1) or (..., m, l+1)

    Raises
    ------
    StepTooLarge
        If the stencil reaches the cut-locus margin.
    """
    p = np.asarray(p, dtype=float)
    if ell == 0:
        val = np.asarray(f(p), dtype=float)
        return val[..., None]
    if h is None:
        h = DEFAULT_STEP_FRACTION * surface.delta
    if h <= 0 or half_width * h >= CUT_MARGIN * surface.delta:
        raise StepTooLarge(f"stencil radius {half_width * h:.4g} leaves the injectivity ball")
    cos_phi, sin_phi, Ainv = _polarization(ell)
    w = stencil_weights(ell, half_width)
    steps = h * np.arange(-half_width, half_width + 1)
    dirs = np.stack([cos_phi, sin_phi], axis=-1)  # (ndir, 2)
    v = dirs[:, None, :] * steps[None, :, None]  # (ndir, nst, 2)
    base = p[..., None, None, :]
    pts = surface.exp(base, np.broadcast_to(v, p.shape[:-1] + v.shape))
    vals = np.asarray(f(pts), dtype=float)
    lead = p.ndim - 1
    extra = vals.ndim - lead - 2
    # move stencil axes last: (..., extra, ndir, nst)
    vals = np.moveaxis(vals, (lead, lead + 1), (-2, -1)) if extra else vals
    D = np.tensordot(vals, w, axes=([-1], [0])) / h**ell  # (..., extra, ndir)
    return np.einsum("kj,...j->...k", Ainv, D)
