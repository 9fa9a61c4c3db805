"""
Symplectic vortices on the cylinder for torus actions on C^n.

In a trivialisation the lambda-vortex equations for ``(u, Phi, Psi)`` read

    d_s u + L_u Phi + i (d_t u + L_u Psi) = 0,
    d_s Psi - d_t Phi + lambda^2 mu(u)     = 0,

with energy density ``|d_s u + L_u Phi|^2 + lambda^2 |mu(u)|^2`` (standard
cylinder metric).  Fields live on a grid that is uniform in ``s`` and
periodic in ``t``; ``t``-derivatives are spectral and ``s``-derivatives are
fourth-order finite differences (second order on request).

Solutions come from the equivariant ansatz ``u = rho(s) e^{2 pi i k t}``,
``Phi = 0``, ``Psi = psi(s)`` for the rotation action of S^1 on C, which
reduces the equations to

    rho' = 2 pi (k + psi) rho,    psi' = -lambda^2 pi (1 - rho^2).

The fixed point ``(1, -k)`` is a saddle with eigenvalues ``+-2 pi lambda``.
Internally the circumference is 1; a cylinder of circumference ``a`` maps to
it by ``(s, t) -> (s/a, t/a)`` together with ``lambda -> a lambda``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .lie_geom import TWO_PI, TorusAction, infinitesimal_action, min_action_norm, moment, norm
from .loops import DiscreteLoop, GaugeLoop, PairLoop, flat_action, invariant_action, lengths


class ShootingError(RuntimeError):
    """No bracket for the shooting parameter could be found."""


# ---------------------------------------------------------------------------
# grids and fields


@dataclass(frozen=True)
class CylinderGrid:
    """Nodes ``s`` (uniform) times ``Nt`` periodic nodes on a circle of circumference ``a``."""

    s: np.ndarray
    Nt: int = 64
    a: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        if s.size >= 2 and not np.allclose(np.diff(s), s[1] - s[0], rtol=1e-9, atol=1e-13):
            raise ValueError("s nodes must be uniform")
        if self.Nt < 16:
            raise ValueError("need at least 16 nodes in t")
        object.__setattr__(self, "s", s)

    @classmethod
    def uniform(cls, s_min, s_max, Ns, Nt=64, a=1.0):
        return cls(np.linspace(s_min, s_max, Ns), Nt, a)

    @property
    def t(self):
        return self.a * np.arange(self.Nt) / self.Nt

    @property
    def ds(self):
        return float(self.s[1] - self.s[0]) if self.s.size > 1 else 0.0

    @property
    def dt(self):
        return self.a / self.Nt

    @property
    def shape(self):
        return (self.s.size, self.Nt)


@dataclass(frozen=True)
class VortexFields:
    """Grid fields: ``u`` (Ns, Nt, n) complex, ``Phi`` and ``Psi`` (Ns, Nt, k), ``lam`` (Ns, Nt)."""

    grid: CylinderGrid
    u: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        shp = self.grid.shape
        u = np.asarray(self.u, dtype=complex)
        if u.ndim == 2:
            u = u[..., None]
        Phi = np.asarray(self.Phi, dtype=float)
        Psi = np.asarray(self.Psi, dtype=float)
        if Phi.ndim == 2:
            Phi = Phi[..., None]
        if Psi.ndim == 2:
            Psi = Psi[..., None]
        lam = np.broadcast_to(np.asarray(self.lam, dtype=float), shp).copy()
        if u.shape[:2] != shp or Phi.shape[:2] != shp or Psi.shape[:2] != shp:
            raise ValueError("field shapes do not match the grid")
        if np.any(lam <= 0):
            raise ValueError("lambda must be positive")
        for name, val in (("u", u), ("Phi", Phi), ("Psi", Psi), ("lam", lam)):
            object.__setattr__(self, name, val)

    def slice_pair(self, i: int) -> PairLoop:
        """The loop pair ``(u, Psi)(s_i, .)``."""
        return PairLoop(DiscreteLoop(self.u[i]), self.Psi[i])

    def to_dict(self) -> dict:
        return {
            "s": self.grid.s.tolist(),
            "Nt": self.grid.Nt,
            "a": self.grid.a,
            "u_re": self.u.real.tolist(),
            "u_im": self.u.imag.tolist(),
            "Phi": self.Phi.tolist(),
            "Psi": self.Psi.tolist(),
            "lam": self.lam.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "VortexFields":
        grid = CylinderGrid(np.asarray(d["s"]), d["Nt"], d.get("a", 1.0))
        u = np.asarray(d["u_re"]) + 1j * np.asarray(d["u_im"])
        return cls(grid, u, np.asarray(d["Phi"]), np.asarray(d["Psi"]), np.asarray(d["lam"]))


def s_derivative(f, h: float, order: int = 4):
    """d/ds along axis 0 by central differences, one-sided at the ends."""
    f = np.asarray(f)
    if order == 2:
        return np.gradient(f, h, axis=0, edge_order=2)
    if order != 4:
        raise ValueError("order must be 2 or 4")
    if f.shape[0] < 5:
        raise ValueError("fourth-order differences need at least 5 nodes")
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return out


def t_derivative(f, a: float = 1.0):
    """Spectral d/dt along axis 1 for a period ``a``."""
    f = np.asarray(f)
    Nt = f.shape[1]
    k = np.fft.fftfreq(Nt, d=1.0 / Nt)
    if Nt % 2 == 0:
        k[Nt // 2] = 0.0
    shape = [1] * f.ndim
    shape[1] = Nt
    out = np.fft.ifft((1j * TWO_PI / a) * k.reshape(shape) * np.fft.fft(f, axis=1), axis=1)
    return out if np.iscomplexobj(f) else out.real


def vortex_residual(fields: VortexFields, action: TorusAction, order: int = 4) -> dict:
    """Residuals of both vortex equations and their maximum norms."""
    g = fields.grid
    u = fields.u
    vs = s_derivative(u, g.ds, order) + infinitesimal_action(action, u, fields.Phi)
    vt = t_derivative(u, g.a) + infinitesimal_action(action, u, fields.Psi)
    r1 = vs + 1j * vt
    r2 = (
        s_derivative(fields.Psi, g.ds, order)
        - t_derivative(fields.Phi, g.a)
        + fields.lam[..., None] ** 2 * moment(action, u)
    )
    return {"holomorphic": r1, "curvature": r2, "max_holomorphic": float(np.max(norm(r1))),
            "max_curvature": float(np.max(norm(r2)))}


def _s_window(grid: CylinderGrid, region):
    if region is None:
        return slice(0, grid.s.size)
    s_lo, s_hi = region
    i0 = int(np.argmin(np.abs(grid.s - s_lo)))
    i1 = int(np.argmin(np.abs(grid.s - s_hi)))
    tol = 1e-9 * max(1.0, abs(grid.ds))
    if abs(grid.s[i0] - s_lo) > tol + 1e-9 * grid.ds or abs(grid.s[i1] - s_hi) > tol + 1e-9 * grid.ds:
        raise ValueError("region endpoints must be grid nodes")
    return slice(i0, i1 + 1)


def integrate_s(f, h: float):
    """Composite Simpson integral along axis 0 (zero for a single node)."""
    f = np.asarray(f)
    if f.shape[0] < 2:
        return np.zeros(f.shape[1:])
    return simpson(f, dx=h, axis=0)


def energy(fields: VortexFields, action: TorusAction, region=None, order: int = 4) -> dict:
    """Energy densities and energy over ``region = (s_lo, s_hi)`` times the circle.

    ``e_cyl`` is the density w.r.t. ``ds dt``; ``e_w`` is the density of the
    lambda-weighted metric, so that ``int e_w lambda^2 ds dt`` is the same
    energy for solutions.
    """
    g = fields.grid
    u, lam2 = fields.u, fields.lam**2
    mu = moment(action, u)
    vs = s_derivative(u, g.ds, order) + infinitesimal_action(action, u, fields.Phi)
    vt = t_derivative(u, g.a) + infinitesimal_action(action, u, fields.Psi)
    F = s_derivative(fields.Psi, g.ds, order) - t_derivative(fields.Phi, g.a)
    e_cyl = norm(vs) ** 2 + lam2 * norm(mu) ** 2
    e_w = 0.5 * ((norm(vs) ** 2 + norm(vt) ** 2) / lam2 + norm(F) ** 2 / lam2**2 + norm(mu) ** 2)
    win = _s_window(g, region)
    per_s = g.a * np.mean(e_cyl[win], axis=1)
    per_s_w = g.a * np.mean((e_w * lam2)[win], axis=1)
    return {
        "e_cyl": e_cyl,
        "e_w": e_w,
        "E": float(integrate_s(per_s, g.ds)),
        "E_w": float(integrate_s(per_s_w, g.ds)),
    }


def check_area_form(lam, grid: CylinderGrid, m_zero: float, a: float | None = None) -> dict:
    """Admissibility of the area form ``lam^2 ds dt``.

    Checks ``lam >= 2 pi / (a m_zero)`` and
    ``sup(|d(1/lam)|^2 + Laplacian(1/lam^2)) < 2 m_zero^2`` with grid
    derivatives, and reports both margins.
    """
    if not m_zero > 0:
        raise ValueError("m_zero must be positive")
    a = grid.a if a is None else a
    lam = np.broadcast_to(np.asarray(lam, dtype=float), grid.shape)
    bound = TWO_PI / (a * m_zero)
    first_margin = float(np.min(lam) - bound)
    inv = 1.0 / lam
    inv2 = inv**2
    h = grid.ds if grid.s.size > 1 else 1.0
    if grid.s.size >= 5:
        grad2 = s_derivative(inv, h) ** 2 + t_derivative(inv, grid.a) ** 2
        lap = s_derivative(s_derivative(inv2, h), h) + t_derivative(t_derivative(inv2, grid.a), grid.a)
    else:
        grad2 = t_derivative(inv, grid.a) ** 2
        lap = t_derivative(t_derivative(inv2, grid.a), grid.a)
    sup = float(np.max(grad2 + lap))
    second_margin = 2.0 * m_zero**2 - sup
    first_ok = first_margin >= -1e-12 * max(1.0, bound)
    return {
        "lower_bound": bound,
        "min_lambda": float(np.min(lam)),
        "first_margin": first_margin,
        "first_ok": bool(first_ok),
        "sup_curvature_term": sup,
        "second_margin": float(second_margin),
        "second_ok": bool(second_margin > 0),
        "admissible": bool(first_ok and second_margin > 0),
    }


def gauge_transform_fields(fields: VortexFields, action: TorusAction, gauge: GaugeLoop) -> VortexFields:
    """Apply a t-dependent gauge ``g(t) = exp(eta(t))`` (circumference 1)."""
    if gauge.N != fields.grid.Nt:
        raise ValueError("gauge must be sampled on the t nodes")
    u = action.act(gauge.eta[None, :, :], fields.u)
    Psi = fields.Psi - gauge.derivative()[None, :, :]
    return VortexFields(fields.grid, u, fields.Phi, Psi, fields.lam)


# ---------------------------------------------------------------------------
# radial reduction


def _rhs(sigma, phi, lam):
    # sigma = 1 - rho, phi = psi + k
    return -TWO_PI * phi * (1.0 - sigma), -lam**2 * np.pi * sigma * (2.0 - sigma)


def _rk4(sigma, phi, h, lam):
    a1, b1 = _rhs(sigma, phi, lam)
    a2, b2 = _rhs(sigma + 0.5 * h * a1, phi + 0.5 * h * b1, lam)
    a3, b3 = _rhs(sigma + 0.5 * h * a2, phi + 0.5 * h * b2, lam)
    a4, b4 = _rhs(sigma + h * a3, phi + h * b3, lam)
    return (sigma + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4),
            phi + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4))


@dataclass(frozen=True)
class RadialProfile:
    """Equivariant vortex profile on uniform nodes ``s``.

    The deviations ``sigma = 1 - rho`` and ``phi = psi + k`` from the
    fixed point are stored directly, so the exponentially small tail keeps
    full relative precision.
    """

    k_deg: int
    lam0: float
    s: np.ndarray
    sigma: np.ndarray
    phi: np.ndarray
    step: float = 0.0
    info: dict = field(default_factory=dict, compare=False)

    @property
    def rho(self):
        return 1.0 - self.sigma

    @property
    def psi(self):
        return self.phi - self.k_deg

    def density(self, sigma=None, phi=None):
        """``rho'^2 + lam^2 pi^2 (1 - rho^2)^2`` (energy per unit s and t)."""
        sigma = self.sigma if sigma is None else sigma
        phi = self.phi if phi is None else phi
        drho = TWO_PI * phi * (1.0 - sigma)
        return drho**2 + self.lam0**2 * np.pi**2 * (sigma * (2.0 - sigma)) ** 2

    def slice_action(self, sigma=None, phi=None):
        """Invariant action of the slice loop, ``pi (1 - rho^2)(psi + k)``."""
        sigma = self.sigma if sigma is None else sigma
        phi = self.phi if phi is None else phi
        return np.pi * sigma * (2.0 - sigma) * phi

    def evaluate(self, s_query):
        """``(sigma, phi)`` at arbitrary ``s`` by one RK4 step from the node below."""
        s_query = np.asarray(s_query, dtype=float)
        if self.s.size == 1 or self.step == 0.0:
            return np.full(s_query.shape, self.sigma[0]), np.full(s_query.shape, self.phi[0])
        if np.any(s_query < self.s[0] - 1e-12) or np.any(s_query > self.s[-1] + 1e-12):
            raise ValueError("query outside the profile range")
        idx = np.clip(np.floor((s_query - self.s[0]) / self.step + 1e-9).astype(int), 0, self.s.size - 1)
        h = s_query - self.s[idx]
        return _rk4(self.sigma[idx], self.phi[idx], h, self.lam0)

    def tail_energy(self):
        """``E(s)`` over ``[s, s_max]`` plus the slice action at ``s_max`` as the tail."""
        dens = self.density()
        if self.s.size < 2:
            return self.slice_action()
        rev = cumulative_simpson(dens[::-1], dx=self.step, initial=0.0)[::-1]
        return rev + self.slice_action()[-1]

    def to_dict(self) -> dict:
        return {
            "k_deg": self.k_deg,
            "lam0": self.lam0,
            "step": self.step,
            "s": self.s.tolist(),
            "sigma": self.sigma.tolist(),
            "phi": self.phi.tolist(),
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, d) -> "RadialProfile":
        return cls(d["k_deg"], d["lam0"], np.asarray(d["s"]), np.asarray(d["sigma"]), np.asarray(d["phi"]),
                   d.get("step", 0.0), d.get("info", {}))


def _shoot_classify(sigma0, phi0, lam, h, s_limit):
    """+1 if rho overshoots 1, -1 if rho turns back towards 0, 0 if undecided."""
    sigma = np.array(sigma0, dtype=float)
    phi = np.array(phi0, dtype=float)
    verdict = np.zeros(phi.shape, dtype=int)
    steps = int(np.ceil(s_limit / h))
    for _ in range(steps):
        sigma, phi = _rk4(sigma, phi, h, lam)
        over = (verdict == 0) & ((sigma < 0) | (1.0 - sigma > 2.0))
        under = (verdict == 0) & (phi < 0) & (sigma > 0)
        verdict[over] = 1
        verdict[under] = -1
        if np.all(verdict != 0):
            break
        # freeze decided trajectories far from the saddle
        sigma = np.where(verdict != 0, 0.5, sigma)
        phi = np.where(verdict != 0, 0.0, phi)
    return verdict


def shoot_psi0(k_deg, lam0, rho0, h=2e-3, tol=1e-12, s_limit=12.0, n_candidates=33):
    """Bisection (multisection) on ``psi(0)`` so the trajectory tends to ``(1, -k)``."""
    sigma0 = 1.0 - rho0
    lo, hi = 0.0, 1.0
    # widen the upper end until it overshoots
    while _shoot_classify(sigma0, np.array([hi]), lam0, h, s_limit)[0] != 1:
        hi *= 2.0
        if hi > 1e6:
            raise ShootingError("no overshooting value of psi(0) found")
    v_lo = _shoot_classify(sigma0, np.array([lo]), lam0, h, s_limit)[0]
    if v_lo != -1:
        raise ShootingError(f"bracket sign pattern ({v_lo}, 1) does not enclose the stable manifold")
    while hi - lo > tol:
        cand = np.linspace(lo, hi, n_candidates)
        v = _shoot_classify(sigma0, cand, lam0, h, s_limit)
        if np.any(v == 0):
            # undecided candidates sit on the manifold to working precision
            mid = cand[v == 0]
            lo, hi = mid[0] - (cand[1] - cand[0]), mid[-1] + (cand[1] - cand[0])
            lo = max(lo, cand[0])
            hi = min(hi, cand[-1])
            if hi - lo <= 2 * (cand[1] - cand[0]):
                break
            continue
        j = int(np.argmax(v == 1))
        if j == 0 or v[j - 1] != -1:
            raise ShootingError("non-monotone classification during bisection")
        lo, hi = cand[j - 1], cand[j]
    return 0.5 * (lo + hi) - k_deg


def _backward(eps, lam, h, sigma_target, max_len):
    """Integrate the stable branch backwards from ``(eps, lam eps)`` until ``sigma = sigma_target``.

    Returns the length in ``s`` travelled.
    """
    sigma, phi = eps, lam * eps
    L = 0.0
    while L < max_len:
        s_new, p_new = _rk4(sigma, phi, -h, lam)
        if s_new >= sigma_target:
            # secant refinement of the fractional step
            lo, hi = 0.0, h
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if _rk4(sigma, phi, -mid, lam)[0] >= sigma_target:
                    hi = mid
                else:
                    lo = mid
            return L + 0.5 * (lo + hi)
        sigma, phi = s_new, p_new
        L += h
    raise ShootingError("stable branch did not reach the initial radius")


def solve_radial(k_deg: int = 1, lam0: float = 1.0, s_max: float = 6.0, rho0: float = 0.1,
                 step: float = 1e-3, shoot: bool = True) -> RadialProfile:
    """Radial vortex on ``[0, s_max]`` with ``rho(0) = rho0`` tending to ``(1, -k)``.

    The profile is the stable manifold of the saddle, integrated backwards
    in ``s`` from ``(sigma, phi) = (eps, lam eps)`` (the stable eigenvector)
    with classical RK4, so the exponentially small tail is resolved to full
    relative precision.  With ``shoot=True`` the initial value ``psi(0)`` is
    also found by forward multisection and recorded in ``info`` for
    comparison.
    """
    if k_deg < 1:
        raise ValueError("k_deg must be >= 1")
    if lam0 <= 0:
        raise ValueError("lam0 must be positive")
    if not 0 < rho0 <= 1:
        raise ValueError("rho0 must lie in (0, 1]")
    M = max(int(np.ceil(s_max / step)), 4)
    h = s_max / M
    s = np.linspace(0.0, s_max, M + 1)
    if rho0 == 1.0:
        z = np.zeros_like(s)
        return RadialProfile(k_deg, lam0, s, z, z.copy(), h, {"fixed_point": True})
    sigma0 = 1.0 - rho0
    rate = TWO_PI * lam0
    # choose eps so that the branch is about s_max + 1/2 long
    eps = 1e-6 * sigma0
    L = _backward(eps, lam0, h, sigma0, max_len=1e3)
    for _ in range(3):
        eps = eps * np.exp(-rate * (s_max + 0.5 - L))
        L = _backward(eps, lam0, h, sigma0, max_len=1e3)
    # second pass: land exactly on the uniform nodes
    n_full = int(np.floor(L / h + 1e-12))
    frac = L - n_full * h
    sigma, phi = eps, lam0 * eps
    if frac > 0:
        sigma, phi = _rk4(sigma, phi, -frac, lam0)
    sig_nodes = np.empty(n_full + 1)
    phi_nodes = np.empty(n_full + 1)
    sig_nodes[n_full], phi_nodes[n_full] = sigma, phi
    for j in range(n_full - 1, -1, -1):
        sigma, phi = _rk4(sigma, phi, -h, lam0)
        sig_nodes[j], phi_nodes[j] = sigma, phi
    info = {"eps": eps, "branch_length": L, "psi0": float(phi_nodes[0] - k_deg),
            "rho0_error": float(abs(sig_nodes[0] - sigma0))}
    if shoot:
        psi0_shoot = shoot_psi0(k_deg, lam0, rho0)
        info["psi0_shooting"] = psi0_shoot
        info["psi0_discrepancy"] = abs(psi0_shoot - info["psi0"])
    prof = RadialProfile(k_deg, lam0, s, sig_nodes[: M + 1], phi_nodes[: M + 1], h, info)
    info["terminal_distance"] = float(np.hypot(prof.sigma[-1], prof.phi[-1]))
    return prof


def embed_radial(profile: RadialProfile, Nt: int = 64, s_nodes=None) -> VortexFields:
    """Fields ``u = rho e^{2 pi i k t}``, ``Phi = 0``, ``Psi = psi``, ``lam = lam0``."""
    s_nodes = profile.s if s_nodes is None else np.asarray(s_nodes, dtype=float)
    grid = CylinderGrid(s_nodes, Nt)
    sigma, phi = profile.evaluate(s_nodes)
    rho = 1.0 - sigma
    t = grid.t
    u = rho[:, None] * np.exp(1j * TWO_PI * profile.k_deg * t)[None, :]
    Psi = np.broadcast_to((phi - profile.k_deg)[:, None], grid.shape)
    return VortexFields(grid, u[..., None], np.zeros(grid.shape + (1,)), Psi[..., None], profile.lam0)


# ---------------------------------------------------------------------------
# identities and bounds


def energy_action_check(fields: VortexFields, s_minus: float, s_plus: float, action: TorusAction,
                        delta: float = 0.1, order: int = 4) -> dict:
    """Compare the energy on ``[s_-, s_+]`` with the drop of the invariant action.

    Also evaluates the equivalent form with usual actions of the slices and
    explicit ``<mu(u), Psi>`` boundary terms.
    """
    E = energy(fields, action, region=(s_minus, s_plus), order=order)["E"]
    win = _s_window(fields.grid, (s_minus, s_plus))
    i_minus, i_plus = win.start, win.stop - 1
    pm, pp = fields.slice_pair(i_minus), fields.slice_pair(i_plus)
    q_minus = lengths(pm, action)["quotient"]
    q_plus = lengths(pp, action)["quotient"]
    A_minus = invariant_action(pm, action, delta=np.inf)
    A_plus = invariant_action(pp, action, delta=np.inf)
    dA = A_minus - A_plus

    def boundary(i):
        return float(np.mean(np.sum(moment(action, fields.u[i]) * fields.Psi[i], axis=-1)))

    usual = -flat_action(pp.x) + flat_action(pm.x) - boundary(i_plus) + boundary(i_minus)
    scale = max(abs(dA), abs(E), 1e-300)
    return {
        "E": E,
        "action_drop": dA,
        "action_minus": A_minus,
        "action_plus": A_plus,
        "usual_form": usual,
        "relative_error": abs(E - dA) / scale if (E or dA) else 0.0,
        "usual_form_error": abs(usual - dA),
        "admissible": bool(q_minus < delta and q_plus < delta),
        "quotient_lengths": (q_minus, q_plus),
    }


def pointwise_bound_check(fields: VortexFields, action: TorusAction, z, r: float = 0.5, order: int = 4) -> dict:
    """Compare ``e(z)`` with ``(32/pi) E(B_r(z))`` on the grid.

    The disc integral is the grid sum over nodes inside the disc.  ``z`` is
    ``(s, t)`` and is snapped to the nearest node.
    """
    g = fields.grid
    s0, t0 = z
    if s0 - r < g.s[0] or s0 + r > g.s[-1]:
        raise ValueError("disc leaves the grid")
    dens = energy(fields, action, order=order)["e_cyl"]
    i = int(np.argmin(np.abs(g.s - s0)))
    dtt = np.abs(g.t - t0) % g.a
    dtt = np.minimum(dtt, g.a - dtt)
    j = int(np.argmin(dtt))
    S, T = np.meshgrid(g.s - g.s[i], np.minimum(np.abs(g.t - g.t[j]) % g.a, g.a - np.abs(g.t - g.t[j]) % g.a),
                       indexing="ij")
    inside = S**2 + T**2 < r**2
    E_disc = float(np.sum(dens[inside]) * g.ds * g.dt)
    bound = 32.0 / np.pi * E_disc
    return {"density": float(dens[i, j]), "bound": bound, "pass": bool(dens[i, j] <= bound),
            "s": float(g.s[i]), "t": float(g.t[j])}


def disc_grid(r: float, n: int = 101):
    """Square grid ``[-r, r]^2`` with ``n`` nodes per side (``n`` odd puts a node at 0)."""
    x = np.linspace(-r, r, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return X, Y, float(x[1] - x[0])


def mean_value_check(f, r: float, h: float) -> dict:
    """Mean-value inequality for ``f >= 0`` with ``Laplacian f >= -C f^2``.

    ``f`` is sampled on the square grid of :func:`disc_grid` (odd size, centre
    node at the origin).  ``C`` is the smallest constant compatible with the
    data (5-point Laplacian at nodes inside the disc where ``f > 0``).  The
    conclusion ``f(0) <= 8/(pi r^2) int_{B_r} f`` is reported together with
    whether the smallness hypothesis ``int f < pi/(8C)`` holds.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    n = f.shape[0]
    if f.shape != (n, n) or n % 2 == 0:
        raise ValueError("f must be sampled on an odd square grid")
    x = (np.arange(n) - n // 2) * h
    X, Y = np.meshgrid(x, x, indexing="ij")
    inside = X**2 + Y**2 < r**2
    lap = np.full_like(f, np.nan)
    lap[1:-1, 1:-1] = (f[2:, 1:-1] + f[:-2, 1:-1] + f[1:-1, 2:] + f[1:-1, :-2] - 4 * f[1:-1, 1:-1]) / h**2
    use = inside & (f > 0) & np.isfinite(lap)
    C = float(max(0.0, np.max(-lap[use] / f[use] ** 2))) if np.any(use) else 0.0
    integral = float(np.sum(f[inside]) * h * h)
    hypothesis = C == 0.0 or integral < np.pi / (8.0 * C)
    centre = float(f[n // 2, n // 2])
    bound = 8.0 / (np.pi * r**2) * integral
    return {
        "C": C,
        "integral": integral,
        "hypothesis": bool(hypothesis),
        "f0": centre,
        "bound": bound,
        "conclusion": bool(centre <= bound),
        "margin": bound - centre,
    }


# ---------------------------------------------------------------------------
# decay


def log_slope(s, values) -> float:
    """Least-squares slope of ``log(values)`` against ``s``."""
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise ValueError("values must be positive on the fit window")
    return float(np.polyfit(np.asarray(s, dtype=float), np.log(values), 1)[0])


def decay_fit(obj, window=(2.0, 4.0), action: TorusAction | None = None, order: int = 4) -> dict:
    """Fitted exponential rates of the energy density and the tail energy.

    ``obj`` is a :class:`RadialProfile` or :class:`VortexFields`.  For fields
    the tail energy is the cumulative integral to the last node plus the
    invariant action of the last slice.
    """
    s1, s2 = window
    if isinstance(obj, RadialProfile):
        s = obj.s
        dens = obj.density()
        tail = obj.tail_energy()
    else:
        action = TorusAction.standard() if action is None else action
        g = obj.grid
        s = g.s
        dens = g.a * np.mean(energy(obj, action, order=order)["e_cyl"], axis=1)
        last = invariant_action(obj.slice_pair(s.size - 1), action, delta=np.inf)
        tail = cumulative_simpson(dens[::-1], dx=g.ds, initial=0.0)[::-1] + last
    sel = (s >= s1 - 1e-12) & (s <= s2 + 1e-12)
    if sel.sum() < 10:
        raise ValueError("fit window holds fewer than 10 nodes")
    return {
        "density_slope": log_slope(s[sel], dens[sel]),
        "energy_slope": log_slope(s[sel], tail[sel]),
        "window": (float(s1), float(s2)),
        "nodes": int(sel.sum()),
    }


def energy_decay_inequality(profile: RadialProfile, eps: float = 0.5, s_range=None) -> dict:
    """Check ``dE/ds <= -(4 pi - eps) E`` with a finite-difference derivative of ``E(s)``."""
    E = profile.tail_energy()
    dE = s_derivative(E, profile.step)
    s_lo, s_hi = (2.0, profile.s[-1] - 1.0) if s_range is None else s_range
    sel = (profile.s >= s_lo - 1e-12) & (profile.s <= s_hi + 1e-12)
    slack = -(4 * np.pi - eps) * E[sel] - dE[sel]
    return {"holds": bool(np.all(slack >= 0)), "min_slack_ratio": float(np.min(slack / E[sel])),
            "rate_min": float(np.min(-dE[sel] / E[sel]))}


def holomorphic_witness(a: float = 1.0, s=None, scale: float = 2.0) -> dict:
    """``|du|_0`` for ``u(z) = exp(2 pi z / a)`` into the round sphere.

    ``|du|_0(s) = (scale/2) (2 pi/a) 2 e^{x} / (1 + e^{2x})`` with
    ``x = 2 pi s / a``; ``scale = 2`` is the Fubini-Study metric of the unit
    sphere.  The log-slope tends to ``-2 pi / a``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    s = np.linspace(3.0, 6.0, 61) if s is None else np.asarray(s, dtype=float)
    w = TWO_PI / a
    vals = 0.5 * scale * w / np.cosh(w * s)
    return {"s": s, "values": vals, "slope": log_slope(s, vals) if s.size > 1 else float("nan")}


def m_zero_level(action: TorusAction, n_samples: int = 721) -> float:
    """``m`` over sampled points of the zero level (single-coordinate actions)."""
    if action.n != 1:
        raise ValueError("sampling of the zero level is implemented for n = 1")
    r2 = action.c[0]
    if r2 <= 0:
        return 0.0
    th = np.linspace(0, TWO_PI, n_samples, endpoint=False)
    return min_action_norm(action, (np.sqrt(r2) * np.exp(1j * th))[:, None])


def write_profile_csv(profile: RadialProfile, path) -> None:
    """One row per node: ``s, rho, psi, density, E(s), slice action``."""
    E = profile.tail_energy()
    dens = profile.density()
    act = profile.slice_action()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "rho", "psi", "density", "tail_energy", "slice_action"])
        for row in zip(profile.s, profile.rho, profile.psi, dens, E, act):
            w.writerow([f"{v:.17g}" for v in row])


def profile_to_json(profile: RadialProfile) -> str:
    return json.dumps(profile.to_dict(), default=float)


def plot_decay(profile: RadialProfile, path, witness_a: float | None = None) -> None:
    """SVG plot of ``log`` density and tail energy against ``s``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "invaction"}):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        sel = profile.density() > 0
        ax.semilogy(profile.s[sel], profile.density()[sel], label="energy density")
        ax.semilogy(profile.s[sel], profile.tail_energy()[sel], label="E(s)")
        if witness_a is not None:
            wit = holomorphic_witness(witness_a, profile.s[profile.s > 0])
            ax.semilogy(wit["s"], wit["values"], "--", label="|du| witness")
        ax.set_xlabel("s")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
