"""Schauder operator, Picard fixpoint and a direct spectral benchmark for PAM.

Both solvers work on one truncation: fields are expanded in the retained
eigenmodes of the basis and products are formed on a collocation grid that
integrates them exactly (a uniform FFT grid on the torus, a Gauss-Legendre
product grid on the sphere).

The fixpoint iterates ``f -> K[m^Xi f] + V`` in the W-valued modelled
distributions.  Reconstructing the fixpoint gives ``U = f_1`` and, since
``K`` integrates ``R_s(m^Xi f(s)) = f_1(s) xi - f_{I[Xi]}(s) c_s`` against
the heat semigroup and the ``I[Xi]`` slot of the fixpoint equals ``U``, the
reconstructed field solves the mild equation

    U(t) = P_t u0 + int_0^t P_{t-s}[U(s) (xi - c_s)] ds,

which is what :func:`direct_solve` integrates with a second-order
exponential Runge-Kutta scheme.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, NonContraction
from .geometry import Surface, sym_nabla
from .holder import exponent_report
from .noise import NoiseRealization, constant_noise, sample, zero_noise
from .pamstruct import ModelledDistribution, PairSet, mult_xi, norm_DT
from .spectral import EigenBasis, TorusBasis, apply_Pt, make_basis

N_GRID = (1.0, 2.0, 4.0, 8.0, 16.0)
SCHAUDER_GAIN = 4.0 / 3.0


# ----------------------------------------------------------------------------
# configuration and the exponent chain
# ----------------------------------------------------------------------------
def exponent_chain(alpha, gamma, gamma0, eps):
    """Inequalities the Schauder estimate needs, as ``(name, value, relation, bound, ok)`` rows.

    ``gamma`` is the exponent of the W-valued output; the V-valued input
    lives in ``D^{gamma - 4/3}``.  The near-diagonal time exponents must
    exceed ``-1 + eps``, the far-field ones must stay below it, and the
    resulting powers of ``d(p,q)`` must dominate ``gamma`` and ``gamma - 1``.
    """
    lo = -1.0 + eps
    g_in = gamma - SCHAUDER_GAIN
    rows = [
        ("input gamma positive", g_in, ">", 0.0),
        ("input gamma below 2 alpha + 8/3", g_in, "<", 2.0 * alpha + 8.0 / 3.0),
        ("eps nonnegative", eps, ">=", 0.0),
    ]
    for name, v in [("alpha+1", alpha + 1.0), ("alpha/2+gamma0", alpha / 2 + gamma0), ("alpha/2", alpha / 2), ("(alpha+1)/2", (alpha + 1.0) / 2), ("alpha/2-1/2+gamma0", alpha / 2 - 0.5 + gamma0), ("alpha+1/2", alpha + 0.5)]:
        rows.append((f"near exponent {name}", v, ">", lo))
    for name, v in [("alpha", alpha), ("alpha/2-1+gamma0", alpha / 2 - 1.0 + gamma0), ("alpha/2-1/2", alpha / 2 - 0.5)]:
        rows.append((f"far exponent {name}", v, "<", lo))
    rows += [
        ("gamma <= 2 alpha + 4 - 2 eps", gamma, "<=", 2.0 * alpha + 4.0 - 2.0 * eps),
        ("gamma <= alpha + 2 gamma0 + 2 - 2 eps", gamma, "<=", alpha + 2.0 * gamma0 + 2.0 - 2.0 * eps),
        ("gamma - 1 <= 2 alpha + 3 - 2 eps", gamma - 1.0, "<=", 2.0 * alpha + 3.0 - 2.0 * eps),
        ("gamma - 1 <= alpha + 1 + 2 gamma0 - 2 eps", gamma - 1.0, "<=", alpha + 1.0 + 2.0 * gamma0 - 2.0 * eps),
        ("time exponent alpha/2 - eps", alpha / 2 - eps, ">", -1.0),
        ("gamma0 <= alpha/2 + 1", gamma0, "<=", alpha / 2 + 1.0),
    ]
    out = []
    tiny = 1e-12
    for name, v, rel, b in rows:
        ok = {">": v > b, "<": v < b, ">=": v >= b - tiny, "<=": v <= b + tiny}[rel]
        out.append((name, float(v), rel, float(b), bool(ok)))
    return out


@dataclass
class SolverConfig:
    """Parameters of a PAM run.

    Attributes
    ----------
    alpha : float
        Noise regularity, in ``(-4/3, -1)``.
    gamma : float
        Exponent of the W-valued solution, in ``(4/3, 2 alpha + 4)``.
    gamma0 : float, optional
        Time exponent; defaults to ``alpha/2 + 1``.
    eps : float, optional
        Defaults to ``(2 alpha + 8/3 - (gamma - 4/3)) / 4``.
    N : float, optional
        Norm scaling; ``None`` selects it from :data:`N_GRID`.
    T : float
        Horizon.
    M : int
        Number of uniform time steps on ``[0, T]``.
    K : int
        Truncation band (``|k|_inf <= K`` on the torus, degree ``<= K`` on the sphere).
    surface : {"torus", "sphere"}
    seed : int
    tol : float
        Picard tolerance on the sup-norm of successive iterates.
    max_iter : int
    u0 : ndarray, optional
        Mode coefficients of the initial datum; defaults to :func:`default_initial`.
    renormalize : bool
        Subtract the counterterm ``c_t``.
    """

    alpha: float = -1.2
    gamma: float = 1.5
    gamma0: float | None = None
    eps: float | None = None
    N: float | None = None
    T: float = 0.05
    M: int = 64
    K: int = 8
    surface: str = "torus"
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 30
    u0: np.ndarray | None = None
    renormalize: bool = True
    N_grid: tuple = field(default=N_GRID)

    def __post_init__(self):
        if self.gamma0 is None:
            self.gamma0 = self.alpha / 2.0 + 1.0
        if self.eps is None:
            self.eps = (2.0 * self.alpha + 8.0 / 3.0 - (self.gamma - SCHAUDER_GAIN)) / 4.0
        self.validate()

    def validate(self):
        """Raise :class:`ConfigError` unless every constraint holds."""
        if not -4.0 / 3.0 < self.alpha < -1.0:
            raise ConfigError(f"alpha={self.alpha} must lie in (-4/3, -1)")
        if not SCHAUDER_GAIN < self.gamma < 2.0 * self.alpha + 4.0:
            raise ConfigError(f"gamma={self.gamma} must lie in (4/3, 2 alpha + 4) = (4/3, {2 * self.alpha + 4:.4g})")
        if self.T <= 0 or self.M < 1 or self.K < 1:
            raise ConfigError("T, M and K must be positive")
        if self.surface not in ("torus", "sphere"):
            raise ConfigError(f"unknown surface {self.surface!r}")
        if self.N is not None and self.N <= 0:
            raise ConfigError("N must be positive")
        bad = [r for r in exponent_chain(self.alpha, self.gamma, self.gamma0, self.eps) if not r[4]]
        if bad:
            raise ConfigError("exponent constraint violated: " + "; ".join(f"{n}: {v:.4g} {rel} {b:.4g}" for n, v, rel, b, _ in bad))

    @property
    def gamma_in(self):
        """Exponent of the V-valued input of the Schauder operator."""
        return self.gamma - SCHAUDER_GAIN

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.M + 1)

    def to_dict(self):
        d = asdict(self)
        d["u0"] = None if self.u0 is None else np.asarray(self.u0).tolist()
        d["N_grid"] = list(self.N_grid)
        return d


def default_initial(basis: EigenBasis):
    """Mode coefficients of a smooth positive datum built from the lowest modes."""
    c = np.zeros(basis.n_modes)
    vol = basis.surface.volume
    c[0] = np.sqrt(vol)  # the constant function 1
    if isinstance(basis, TorusBasis):
        # 0.5 cos(x1) + 0.3 sin(x2)
        amp = np.pi * np.sqrt(2.0)
        kv, kind = basis.wavevectors, basis.kind
        i1 = np.flatnonzero((kv[:, 0] == 1) & (kv[:, 1] == 0) & (kind == 1))[0]
        i2 = np.flatnonzero((kv[:, 0] == 0) & (kv[:, 1] == 1) & (kind == 2))[0]
        c[i1] = 0.5 * amp
        c[i2] = 0.3 * amp
    else:
        # 0.5 z + 0.3 x y
        c[basis.index(1, 0)] = 0.5 * np.sqrt(4.0 * np.pi / 3.0)
        if basis.band >= 2:
            c[basis.index(2, -2)] = 0.3 * np.sqrt(4.0 * np.pi / 15.0)
    return c


# ----------------------------------------------------------------------------
# collocation grids
# ----------------------------------------------------------------------------
class SolverGrid:
    """Collocation grid with exact analysis of products of two band-limited fields.

    Attributes
    ----------
    nodes : ndarray, shape (P, amb)
    weights : ndarray, shape (P,)
    """

    def __init__(self, basis: EigenBasis):
        self.basis = basis
        self.surface: Surface = basis.surface
        K = basis.band
        if isinstance(basis, TorusBasis):
            self.n = 3 * K + 1
            self.nodes, self.weights = self.surface.quadrature(self.n)
            self._Y = None
        else:
            self.n = (3 * K + 2) // 2 + 1
            self.nodes, self.weights = self.surface.quadrature(self.n, 3 * K + 2)
            self._Y = basis.evaluate(self.nodes)

    @property
    def size(self):
        return len(self.nodes)

    def synth(self, coeffs):
        """Mode coefficients ``(n_modes, ...)`` -> nodal values ``(P, ...)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        if self._Y is None:
            return self.basis.grid_synth(coeffs, self.n)
        return np.tensordot(self._Y, coeffs, axes=(1, 0))

    def analyze(self, values):
        """Nodal values ``(P, ...)`` -> coefficients of the L^2 projection."""
        values = np.asarray(values, dtype=float)
        if self._Y is None:
            return self.basis.grid_analyze(values, self.n)
        w = self.weights.reshape((-1,) + (1,) * (values.ndim - 1))
        return np.tensordot(self._Y, w * values, axes=(0, 0))

    def gradient(self, coeffs):
        """Frame components of the gradient at the nodes, shape ``(P, ..., 2)``."""
        coeffs = np.asarray(coeffs, dtype=float)
        if self._Y is None:
            return self.synth(torus_gradient_coeffs(self.basis, coeffs))
        extra = coeffs.shape[1:]
        flat = coeffs.reshape(coeffs.shape[0], -1)
        g = sym_nabla(self.surface, lambda z: self.basis.synth(flat, z), self.nodes, 1)
        return g.reshape((self.size,) + extra + (2,))


def torus_gradient_coeffs(basis: TorusBasis, coeffs):
    """Mode coefficients of ``(d/dx1, d/dx2)`` of a trigonometric field, shape ``(n_modes, ..., 2)``."""
    coeffs = np.asarray(coeffs, dtype=float)
    nm = coeffs.shape[0]
    kv = basis.wavevectors[:nm]
    kind = basis.kind[:nm]
    out = np.zeros(coeffs.shape + (2,))
    cos_i = np.flatnonzero(kind == 1)
    sin_i = cos_i + 1
    sin_i = sin_i[sin_i < nm]
    cos_i = cos_i[: len(sin_i)]
    for j in range(2):
        k = kv[cos_i, j].reshape((-1,) + (1,) * (coeffs.ndim - 1))
        # d/dx cos(k.x) = -k sin(k.x);  d/dx sin(k.x) = k cos(k.x)
        out[sin_i, ..., j] = -k * coeffs[cos_i]
        out[cos_i, ..., j] = k * coeffs[sin_i]
    return out


# ----------------------------------------------------------------------------
# exponential integrator weights
# ----------------------------------------------------------------------------
def exp_weights(lam, dt):
    """Weights of the exact integral of ``e^{-lam (dt - s)}`` against linear interpolation.

    Returns ``(E, A0, A1)`` with ``E = e^{-lam dt}``, ``A0 = int_0^dt e^{-lam u} du``
    and ``A1 = int_0^dt e^{-lam u} (u/dt) du``, so that
    ``int_0^dt e^{-lam (dt - s)} r(s) ds = A1 r(0) + (A0 - A1) r(dt)`` for linear ``r``.
    """
    lam = np.asarray(lam, dtype=float)
    z = lam * dt
    small = z < 1e-3
    zs = np.where(small, 1.0, z)
    phi1 = np.where(small, 1.0 - z / 2.0 + z**2 / 6.0 - z**3 / 24.0, -np.expm1(-zs) / zs)
    g = np.where(small, 0.5 - z / 3.0 + z**2 / 8.0 - z**3 / 30.0, (-np.expm1(-zs) - zs * np.exp(-zs)) / zs**2)
    return np.exp(-z), dt * phi1, dt * g


def time_integral_helper(rho1, rho2, eps, A, T):
    """Explicit constants for the near- and far-field time integrals.

    For ``|g(t, s)| <= |t - s|^rho1`` on ``[t - A, t]`` and ``<= |t - s|^rho2``
    on ``[0, t - A]`` with ``A <= t <= T``:

    * ``near = T^eps A^(rho1 + 1 - eps) / (rho1 + 1 - eps)`` bounds the first integral;
    * ``far = T^eps A^(rho2 + 1 - eps) / |rho2 + 1 - eps|`` bounds the second.

    Raises
    ------
    ConfigError
        Unless ``rho1 - eps > -1``, ``rho2 - eps < -1``, ``eps >= 0`` and ``0 < A <= T``.
    """
    if eps < 0:
        raise ConfigError("eps must be nonnegative")
    if not rho1 - eps > -1.0:
        raise ConfigError("need rho1 - eps > -1")
    if not rho2 - eps < -1.0:
        raise ConfigError("need rho2 - eps < -1")
    if not 0.0 < A <= T:
        raise ConfigError("need 0 < A <= T")
    e1 = rho1 + 1.0 - eps
    e2 = rho2 + 1.0 - eps
    return {"near": T**eps * A**e1 / e1, "far": T**eps * A**e2 / abs(e2)}


# ----------------------------------------------------------------------------
# the solver space: noise, grid and time nodes
# ----------------------------------------------------------------------------
class SolverSpace:
    """Everything a run shares: basis, noise, grid, time nodes and model fields.

    Parameters
    ----------
    config : SolverConfig
    noise : NoiseRealization, optional
        Defaults to ``sample(basis, config.seed)``.
    """

    def __init__(self, config: SolverConfig, noise: NoiseRealization | None = None):
        self.config = config
        self.basis = noise.basis if noise is not None else make_basis(config.surface, config.K)
        self.noise = noise if noise is not None else sample(self.basis, config.seed)
        self.grid = SolverGrid(self.basis)
        self.surface = self.basis.surface
        self.times = config.times
        self.dt = config.T / config.M
        self.lam = self.basis.eigenvalues
        self.xi = self.grid.synth(self.noise.g)
        kc = np.stack([self.noise.Kxi_coeffs(t) for t in self.times], axis=-1)
        self.kxi = self.grid.synth(kc).T  # (M+1, P)
        self.grad_kxi = np.moveaxis(self.grid.gradient(kc), 1, 0)  # (M+1, P, 2)
        c = np.array([self.noise.counterterm(t) for t in self.times])
        self.c = c if config.renormalize else np.zeros_like(c)
        self._pairs = None

    @property
    def points(self):
        return self.grid.nodes

    @property
    def pairs(self) -> PairSet:
        if self._pairs is None:
            self._pairs = PairSet.build(self.surface, self.points)
        return self._pairs

    def modelled(self, structure, values):
        return ModelledDistribution(structure, self.points, self.times, values, self.config.alpha)

    def norm(self, f: ModelledDistribution, gamma, N, components=False):
        """``||f||_{D^{gamma, gamma0, N}_T}`` over the grid pairs."""
        return norm_DT(f, gamma, self.config.gamma0, N, self.pairs, self.kxi, components)

    def reconstruct_V(self, f: ModelledDistribution):
        """Mode coefficients of ``R_s f(s) = f_Xi xi - f_{I[Xi]Xi} c_s`` at every time node, ``(M+1, n_modes)``."""
        vals = f.values[..., 0] * self.xi[None, :] - f.values[..., 1] * self.c[:, None]
        return self.grid.analyze(vals.T).T


def lift_initial(space: SolverSpace, u0=None):
    """``V_t = 1 P_t u0 + I[Xi] 0 + X d P_t u0`` at every time node (W-valued)."""
    u0 = default_initial(space.basis) if u0 is None else np.asarray(u0, dtype=float)
    coeffs = np.stack([apply_Pt(space.basis, u0, t) for t in space.times], axis=-1)
    vals = np.zeros((len(space.times), space.grid.size, 4))
    vals[..., 0] = space.grid.synth(coeffs).T
    vals[..., 2:4] = np.moveaxis(space.grid.gradient(coeffs), 1, 0)
    return space.modelled("W", vals)


def heat_integral_coeffs(space: SolverSpace, r):
    """``H(t_j) = int_0^{t_j} P_{t_j - s} r(s) ds`` for piecewise-linear mode coefficients ``r`` of shape ``(M+1, n_modes)``."""
    E, A0, A1 = exp_weights(space.lam[: r.shape[1]], space.dt)
    H = np.zeros_like(r)
    for j in range(len(space.times) - 1):
        H[j + 1] = E * H[j] + A1 * r[j] + (A0 - A1) * r[j + 1]
    return H


def K_op(space: SolverSpace, f: ModelledDistribution, return_coeffs=False):
    """Schauder operator on a V-valued modelled distribution.

    ``h_1 = int_0^t <p_{t-s}, R_s f(s)> ds`` by the mode-wise exponential
    integrator, ``h_{I[Xi]} = f_Xi`` and ``h_X = d h_1 - f_Xi d(K_t xi)``.
    """
    if f.structure != "V":
        raise ValueError("the Schauder operator acts on V-valued distributions")
    H = heat_integral_coeffs(space, space.reconstruct_V(f))
    vals = np.zeros_like(f.values)
    vals[..., 0] = space.grid.synth(H.T).T
    vals[..., 1] = f.values[..., 0]
    vals[..., 2:4] = np.moveaxis(space.grid.gradient(H.T), 1, 0) - f.values[..., 0, None] * space.grad_kxi
    out = space.modelled("W", vals)
    return (out, H) if return_coeffs else out


def reconstruct_K_quadrature(space: SolverSpace, Rf, t, order=64):
    """Independent oracle for ``R_t K f``: Gauss-Legendre in ``s`` of ``P_{t-s}`` applied to exact ``R_s f``.

    ``Rf`` maps a time ``s`` to the mode coefficients of ``R_s f(s)``.
    Returns nodal values at ``t``.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * t * (x + 1.0)
    w = 0.5 * t * w
    acc = np.zeros(space.basis.n_modes)
    for sk, wk in zip(s, w):
        acc += wk * np.exp(-space.lam * (t - sk)) * Rf(sk)
    return space.grid.synth(acc)


# ----------------------------------------------------------------------------
# classical Schauder check
# ----------------------------------------------------------------------------
def schauder_distribution_check(noises, points, dists, t, alpha=-1.2, tol=0.15, n_dir=3):
    """Fit ``|K_t xi(p) - K_t xi(q)|`` against ``d(p, q)`` (lower bound ``2 + alpha``).

    ``noises`` is one realization or a sequence of them; magnitudes are the
    root mean square over realizations, then the supremum over pairs.
    """
    from .pamstruct import _offset_points

    noises = [noises] if isinstance(noises, NoiseRealization) else list(noises)
    surface = noises[0].surface
    res = noises[0].resolution
    dists = np.asarray(dists, dtype=float)
    from .errors import UnderResolved

    if np.any(dists < res):
        raise UnderResolved(f"separations below the resolution length {res:.4g}")
    points = np.atleast_2d(points)
    per = np.zeros((len(noises), len(dists)))
    sq = None
    for j, d in enumerate(dists):
        p, q = _offset_points(surface, points, d, n_dir)
        acc = np.zeros(p.shape[:-1])
        for nz in noises:
            acc += nz.S(t, p, q) ** 2
        rms = np.sqrt(acc / len(noises))
        if sq is None:
            sq = np.zeros((rms.size, len(dists)))
        sq[:, j] = rms.ravel()
    return exponent_report("classical Schauder |K_t xi(p) - K_t xi(q)|", dists, sq.max(axis=0), 2.0 + alpha, tol, mode="lower", per_point=sq, notes=f"t={t}, K={noises[0].K}, seeds={len(noises)}, aggregate=sup over pairs of rms over seeds")


# ----------------------------------------------------------------------------
# Picard fixpoint
# ----------------------------------------------------------------------------
@dataclass
class PicardResult:
    """Outcome of :func:`picard_solve`.

    Attributes
    ----------
    f : ModelledDistribution
        W-valued fixpoint on the grid.
    U : ndarray, shape (M+1, P)
        Reconstructed solution (first slot).
    coeffs : ndarray, shape (M+1, n_modes)
        Mode coefficients of ``U``.
    N : float
        Norm scaling used for the contraction factor.
    factor : float
        Measured contraction factor ``max_n ||f_{n+1} - f_n|| / ||f_n - f_{n-1}||``.
    factors_by_N : dict
    increments : list of float
        Sup-norm of successive differences.
    iterations : int
    converged : bool
    """

    f: ModelledDistribution
    U: np.ndarray
    coeffs: np.ndarray
    N: float
    factor: float
    factors_by_N: dict
    increments: list
    norms: list
    iterations: int
    converged: bool
    space: SolverSpace = None

    def summary(self):
        return {"N": self.N, "factor": self.factor, "factors_by_N": {str(k): v for k, v in self.factors_by_N.items()}, "iterations": self.iterations, "converged": self.converged, "increments": self.increments}


def picard_map(space: SolverSpace, f: ModelledDistribution, V: ModelledDistribution, return_coeffs=False):
    """``Phi(f) = K[m^Xi f] + V``."""
    k, H = K_op(space, mult_xi(f), return_coeffs=True)
    out = space.modelled("W", k.values + V.values)
    return (out, H) if return_coeffs else out


def _measure_factors(space, diffs, N_values, gamma):
    norms = {N: [space.norm(space.modelled("W", d), gamma, N) for d in diffs] for N in N_values}
    factors = {}
    for N, ns in norms.items():
        r = [ns[i + 1] / ns[i] for i in range(len(ns) - 1) if ns[i] > 0]
        factors[N] = float(max(r)) if r else 0.0
    return factors, norms


def picard_solve(config: SolverConfig, noise: NoiseRealization | None = None, space: SolverSpace | None = None, n_measure=3):
    """Iterate the fixpoint map until the sup-norm increment drops below ``config.tol``.

    The contraction factor is measured in ``||.||_{D^{gamma, gamma0, N}_T(W)}``
    on the first ``n_measure + 1`` increments; with ``config.N is None`` the
    scaling is chosen from ``config.N_grid`` to minimize it.

    Raises
    ------
    NonContraction
        If the measured factor is not below one for any scaling, or the
        iteration does not reach the tolerance within ``config.max_iter``.
    """
    space = space or SolverSpace(config, noise)
    V = lift_initial(space, config.u0)
    u0 = default_initial(space.basis) if config.u0 is None else np.asarray(config.u0, dtype=float)
    V_coeffs = np.stack([apply_Pt(space.basis, u0, t) for t in space.times])
    f = V
    coeffs = V_coeffs
    diffs, increments = [], []
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        g, H = picard_map(space, f, V, return_coeffs=True)
        d = g.values - f.values
        inc = float(np.abs(d[..., 0]).max())
        increments.append(inc)
        if len(diffs) < n_measure + 1:
            diffs.append(d)
        f = g
        coeffs = V_coeffs + H
        if inc < config.tol:
            converged = True
            break
    N_values = (config.N,) if config.N is not None else tuple(config.N_grid)
    factors, norms = _measure_factors(space, diffs, N_values, config.gamma)
    best = min(factors, key=lambda k: factors[k])
    factor = factors[best]
    if factor >= 1.0 or not converged:
        diag = {"factors_by_N": {str(k): v for k, v in factors.items()}, "increments": increments, "suggestion": "decrease T or increase N"}
        raise NonContraction(f"Picard map does not contract (factor {factor:.3g}, converged={converged})", factor, diag)
    return PicardResult(f=f, U=f.values[..., 0].copy(), coeffs=coeffs, N=best, factor=factor, factors_by_N=factors, increments=increments, norms=norms[best], iterations=it, converged=converged, space=space)


# ----------------------------------------------------------------------------
# direct benchmark
# ----------------------------------------------------------------------------
@dataclass
class DirectResult:
    """Outcome of :func:`direct_solve`: times, mode coefficients and nodal values."""

    times: np.ndarray
    coeffs: np.ndarray
    U: np.ndarray
    space: SolverSpace = None


def direct_solve(config: SolverConfig, noise: NoiseRealization | None = None, space: SolverSpace | None = None, steps=None):
    """Spectral Galerkin ETD2RK for ``dU/dt = Delta U + U (xi - c_t)``.

    ``steps`` overrides ``config.M`` (the space's time grid is rebuilt).
    """
    if steps is not None and steps != config.M:
        config = SolverConfig(**{**config.__dict__, "M": int(steps)})
        space = None
    space = space or SolverSpace(config, noise)
    u = default_initial(space.basis) if config.u0 is None else np.asarray(config.u0, dtype=float).copy()
    E, A0, A1 = exp_weights(space.lam, space.dt)
    xi = space.xi

    def nonlin(c, j):
        return space.grid.analyze(space.grid.synth(c) * (xi - space.c[j]))

    out = [u]
    for j in range(config.M):
        n0 = nonlin(u, j)
        a = E * u + A0 * n0
        n1 = nonlin(a, j + 1)
        u = E * u + A1 * n0 + (A0 - A1) * n1
        out.append(u)
    coeffs = np.array(out)
    return DirectResult(times=space.times, coeffs=coeffs, U=space.grid.synth(coeffs.T).T, space=space)


def relative_l2(space: SolverSpace, a, b):
    """Relative L^2 distance of nodal fields (grid quadrature)."""
    w = space.grid.weights
    return float(np.sqrt(np.sum(w * (a - b) ** 2) / np.sum(w * b**2)))


def constant_noise_solution(space: SolverSpace, value, u0=None):
    """Closed form ``exp(value t - t^2 / (2 vol)) P_t u0`` (nodal, all time nodes) for constant-mode noise."""
    u0 = default_initial(space.basis) if u0 is None else np.asarray(u0, dtype=float)
    vol = space.surface.volume
    out = []
    for t in space.times:
        fac = np.exp(value * t - (t * t / (2.0 * vol) if space.config.renormalize else 0.0))
        out.append(fac * space.grid.synth(apply_Pt(space.basis, u0, t)))
    return np.array(out)


def renormalization_study(Ks, T, M, seed, surface="torus", renormalize=True, alpha=-1.2, gamma=1.5):
    """Direct solutions at ``t = T`` for nested noise across truncations.

    Returns a dict with the sup-norms on a common fine grid and the sup-norm
    differences of successive truncations.
    """
    Ks = list(Ks)
    fine = SolverGrid(make_basis(surface, max(Ks)))
    sups, fields = [], []
    for K in Ks:
        cfg = SolverConfig(alpha=alpha, gamma=gamma, T=T, M=M, K=K, surface=surface, seed=seed, renormalize=renormalize)
        res = direct_solve(cfg)
        cK = res.coeffs[-1]
        full = np.zeros(fine.basis.n_modes)
        full[: len(cK)] = cK
        v = fine.synth(full)
        fields.append(v)
        sups.append(float(np.abs(v).max()))
    diffs = [float(np.abs(fields[i + 1] - fields[i]).max()) for i in range(len(Ks) - 1)]
    return {"K": Ks, "sup": sups, "cauchy": diffs, "renormalize": renormalize, "T": T, "M": M, "seed": seed}


__all__ = [
    "N_GRID",
    "SolverConfig",
    "SolverGrid",
    "SolverSpace",
    "PicardResult",
    "DirectResult",
    "exponent_chain",
    "default_initial",
    "torus_gradient_coeffs",
    "exp_weights",
    "time_integral_helper",
    "lift_initial",
    "heat_integral_coeffs",
    "K_op",
    "reconstruct_K_quadrature",
    "schauder_distribution_check",
    "picard_map",
    "picard_solve",
    "direct_solve",
    "relative_l2",
    "constant_noise_solution",
    "renormalization_study",
    "constant_noise",
    "zero_noise",
]
