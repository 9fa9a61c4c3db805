"""
Discrete loops in C^n and R^k, and the invariant symplectic action.

A loop is sampled at ``t_i = i/N`` on the circle R/Z.  Derivatives are
spectral by default (``derivative="spectral"``); second-order central
differences are available with ``derivative="central"``.  Integrals over
the circle are uniform means, i.e. the trapezoid rule for periodic data,
so the Haar measure has total mass one.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .lie_geom import (
    TWO_PI,
    TorusAction,
    connection_form,
    infinitesimal_action,
    moment,
    norm,
    omega,
    project_vertical,
)

DEFAULT_N = 256
DEFAULT_DELTA = 0.1


class UnderResolvedError(RuntimeError):
    """The sampled gauge lift jumps by half a period or more between samples."""


class AdmissibilityWarning(UserWarning):
    """The quotient length exceeds the configured admissibility threshold."""


# ---------------------------------------------------------------------------
# periodic calculus


def _wavenumbers(N):
    k = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0.0
    return k


def periodic_derivative(f, method: str = "spectral"):
    """d/dt of samples of a 1-periodic function along axis 0."""
    f = np.asarray(f)
    N = f.shape[0]
    if method == "central":
        return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) * (N / 2.0)
    if method != "spectral":
        raise ValueError(f"unknown derivative method {method!r}")
    shape = (N,) + (1,) * (f.ndim - 1)
    mult = (1j * TWO_PI * _wavenumbers(N)).reshape(shape)
    out = np.fft.ifft(mult * np.fft.fft(f, axis=0), axis=0)
    return out if np.iscomplexobj(f) else out.real


def periodic_antiderivative(a):
    """Antiderivative ``F`` of periodic samples with ``F(0) = 0``.

    The mean of ``a`` contributes the linear part ``mean(a) * t``; the
    oscillating part is integrated spectrally.
    """
    a = np.asarray(a, dtype=float)
    N = a.shape[0]
    mean = a.mean(axis=0)
    k = _wavenumbers(N)
    shape = (N,) + (1,) * (a.ndim - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(k != 0, 1.0 / (1j * TWO_PI * k), 0.0).reshape(shape)
    osc = np.fft.ifft(mult * np.fft.fft(a - mean, axis=0), axis=0).real
    t = (np.arange(N) / N).reshape(shape)
    return mean * t + osc - osc[:1]


def circle_mean(f):
    """Integral over S^1 with Haar measure (uniform mean along axis 0)."""
    return np.mean(f, axis=0)


# ---------------------------------------------------------------------------
# loop containers


@dataclass(frozen=True)
class DiscreteLoop:
    """``N`` uniform samples of a loop in C^n, array of shape (N, n)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape[0] < 8:
            raise ValueError("a discrete loop needs at least 8 samples")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def N(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    @property
    def t(self):
        return np.arange(self.N) / self.N

    @classmethod
    def from_function(cls, fn, N: int = DEFAULT_N) -> "DiscreteLoop":
        return cls(fn(np.arange(N) / N))

    @classmethod
    def circle(cls, r: float = 1.0, degree: int = 1, N: int = DEFAULT_N, center=0.0, n: int = 1):
        t = np.arange(N) / N
        z = np.zeros((N, n), dtype=complex)
        z[:, 0] = center + r * np.exp(1j * TWO_PI * degree * t)
        return cls(z)

    @classmethod
    def constant(cls, point, N: int = DEFAULT_N):
        point = np.atleast_1d(np.asarray(point, dtype=complex))
        return cls(np.tile(point, (N, 1)))

    def derivative(self, method: str = "spectral"):
        return periodic_derivative(self.samples, method)

    def reversed(self) -> "DiscreteLoop":
        return DiscreteLoop(np.roll(self.samples[::-1], 1, axis=0))

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "coords": [[[float(v.real), float(v.imag)] for v in col] for col in self.samples.T],
        }

    @classmethod
    def from_dict(cls, d) -> "DiscreteLoop":
        coords = np.asarray(d["coords"], dtype=float)  # (n, N, 2)
        return cls((coords[..., 0] + 1j * coords[..., 1]).T)


@dataclass(frozen=True)
class PairLoop:
    """A loop ``x`` in C^n together with a loop ``xi`` in R^k (shape (N, k))."""

    x: DiscreteLoop
    xi: np.ndarray

    def __post_init__(self):
        x = self.x if isinstance(self.x, DiscreteLoop) else DiscreteLoop(self.x)
        xi = np.array(self.xi, dtype=float)
        if xi.ndim == 0:
            xi = np.full((x.N, 1), float(xi))
        elif xi.ndim == 1:
            xi = xi[:, None] if xi.shape[0] == x.N else np.tile(xi, (x.N, 1))
        if xi.shape[0] != x.N:
            raise ValueError("x and xi must have the same number of samples")
        xi.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def N(self) -> int:
        return self.x.N

    def twisted_derivative(self, action: TorusAction, method: str = "spectral"):
        """``x' + L_x xi`` at every sample."""
        return self.x.derivative(method) + infinitesimal_action(action, self.x.samples, self.xi)

    def to_dict(self) -> dict:
        return {"x": self.x.to_dict(), "xi": self.xi.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PairLoop":
        return cls(DiscreteLoop.from_dict(d["x"]), np.asarray(d["xi"], dtype=float))


@dataclass(frozen=True)
class GaugeLoop:
    """Loop ``g = exp(eta)`` in T^k, stored as its lift ``eta`` (shape (N, k)).

    ``winding`` is the integer vector ``eta(1) - eta(0)``.
    """

    eta: np.ndarray
    winding: np.ndarray

    def __post_init__(self):
        eta = np.array(self.eta, dtype=float)
        if eta.ndim == 1:
            eta = eta[:, None]
        w = np.array(self.winding, dtype=float).reshape(-1)
        if w.shape[0] != eta.shape[1]:
            raise ValueError("winding must have one entry per torus factor")
        if not np.allclose(w, np.round(w)):
            raise ValueError("winding must be an integer vector")
        w = np.round(w).astype(np.int64)
        steps = np.diff(np.vstack([eta, eta[:1] + w]), axis=0)
        if np.max(np.abs(steps), initial=0.0) >= 0.5:
            raise UnderResolvedError("gauge lift is ambiguous; increase the number of samples")
        eta.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "winding", w)

    @property
    def N(self) -> int:
        return self.eta.shape[0]

    @property
    def k(self) -> int:
        return self.eta.shape[1]

    @property
    def t(self):
        return np.arange(self.N) / self.N

    @classmethod
    def identity(cls, N: int, k: int = 1) -> "GaugeLoop":
        return cls(np.zeros((N, k)), np.zeros(k, dtype=int))

    @classmethod
    def from_function(cls, fn, N: int, winding) -> "GaugeLoop":
        """Sample a lift ``fn(t)`` (shape (N, k) or (N,)) with the given winding."""
        return cls(np.asarray(fn(np.arange(N) / N), dtype=float), winding)

    def values(self):
        """Group elements as canonical representatives in [0, 1)^k."""
        return wrap_unit(self.eta)

    def derivative(self, method: str = "spectral"):
        """``g^{-1} dg/dt = d eta/dt``."""
        t = self.t[:, None]
        return periodic_derivative(self.eta - t * self.winding, method) + self.winding

    def inverse(self) -> "GaugeLoop":
        return GaugeLoop(-self.eta, -self.winding)

    def compose(self, other: "GaugeLoop") -> "GaugeLoop":
        return GaugeLoop(self.eta + other.eta, self.winding + other.winding)

    def act(self, action: TorusAction, x: DiscreteLoop) -> DiscreteLoop:
        return DiscreteLoop(action.act(self.eta, x.samples))


# ---------------------------------------------------------------------------
# norms, lengths, actions


def lp_norm(field, p: float) -> float:
    """L^p norm on the circle of a sampled field.

    ``field`` has shape (N,) (scalars) or (N, d) (real or complex vectors);
    pointwise norms are Euclidean.  ``p`` may be ``np.inf``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    f = np.asarray(field)
    mags = np.abs(f) if f.ndim == 1 else norm(f)
    if np.isinf(p):
        return float(np.max(mags))
    m = np.max(mags)
    if m == 0:
        return 0.0
    return float(m * np.mean((mags / m) ** p) ** (1.0 / p))


def lengths(pair: PairLoop, action: TorusAction, method: str = "spectral") -> dict:
    """Length, twisted length and quotient length of a pair of loops.

    The quotient length is the length of the horizontal part
    ``(id - Pr) x'`` of the velocity.
    """
    xdot = pair.x.derivative(method)
    twisted = xdot + infinitesimal_action(action, pair.x.samples, pair.xi)
    horiz = xdot - project_vertical(action, pair.x.samples, xdot)
    return {
        "ell": float(circle_mean(norm(xdot))),
        "twisted": float(circle_mean(norm(twisted))),
        "quotient": float(circle_mean(norm(horiz))),
    }


def loop_length(x: DiscreteLoop, method: str = "spectral") -> float:
    return float(circle_mean(norm(x.derivative(method))))


def flat_action(x: DiscreteLoop, basepoint: int = 0, method: str = "spectral") -> float:
    """Symplectic action ``-int_D u^* omega`` of a loop in flat C^n.

    Uses the cone over ``x(basepoint)``; the result does not depend on the
    basepoint because the standard form is exact.
    """
    z = x.samples
    return float(-0.5 * circle_mean(omega(z - z[basepoint], x.derivative(method))))


def horizontal_gauge(x: DiscreteLoop, action: TorusAction, method: str = "spectral", full_output: bool = False):
    """Gauge making the vertical part of the loop velocity constant.

    The connection ``a(t) = (L^*L)^{-1} L^* x'(t)`` is integrated to
    ``eta(t)``; ``eta(1)`` is reduced modulo Z^k to the minimal
    representative ``xi0`` (ties at one half go to ``-1/2``), and the gauge
    is ``g(t) = exp(-eta(t) + t xi0)``, which is periodic with winding
    ``-round(eta(1))``.  After transforming, the connection applied to
    ``d/dt (g x)`` equals ``xi0`` identically.

    Returns the :class:`GaugeLoop`, or ``(gauge, xi0)`` with ``full_output``.
    """
    a = connection_form(action, x.samples, x.derivative(method))
    if method == "spectral":
        eta = periodic_antiderivative(a)
        hol = a.mean(axis=0)
    else:
        eta = np.vstack([np.zeros((1, a.shape[1])), np.cumsum(0.5 * (a[1:] + a[:-1]), axis=0) / x.N])
        hol = eta[-1] + 0.5 * (a[-1] + a[0]) / x.N
    lattice = np.floor(hol + 0.5)
    xi0 = hol - lattice
    t = x.t[:, None]
    gauge = GaugeLoop(-eta + t * xi0, -lattice)
    if full_output:
        return gauge, xi0
    return gauge


def gauge_apply(g: GaugeLoop, pair: PairLoop, action: TorusAction, method: str = "spectral") -> PairLoop:
    """``g_*(x, xi) = (g x, xi - g^{-1} dg/dt)`` for an abelian gauge group."""
    if g.N != pair.N:
        raise ValueError("gauge and pair have different sample counts")
    return PairLoop(g.act(action, pair.x), pair.xi - g.derivative(method))


def _moment_pairing(action, x: DiscreteLoop, xi):
    return np.sum(moment(action, x.samples) * xi, axis=-1)


def invariant_action(
    pair: PairLoop,
    action: TorusAction,
    gauge: GaugeLoop | None = None,
    delta: float = DEFAULT_DELTA,
    method: str = "spectral",
    full_output: bool = False,
):
    """Invariant symplectic action ``A(g x) + int <mu(x), xi - g^{-1} g'> dt``.

    ``gauge`` defaults to :func:`horizontal_gauge`.  An
    :class:`AdmissibilityWarning` is issued when the quotient length is not
    below ``delta``.
    """
    if gauge is None:
        gauge = horizontal_gauge(pair.x, action, method=method)
    lq = lengths(pair, action, method)["quotient"]
    if lq >= delta:
        warnings.warn(
            f"quotient length {lq:.3g} is not below delta={delta:g}; admissibility is not guaranteed",
            AdmissibilityWarning,
            stacklevel=2,
        )
    gx = gauge.act(action, pair.x)
    a_flat = flat_action(gx, method=method)
    coupling = float(circle_mean(_moment_pairing(action, pair.x, pair.xi - gauge.derivative(method))))
    value = a_flat + coupling
    if full_output:
        return {"action": value, "flat": a_flat, "coupling": coupling, "gauge": gauge, "quotient_length": lq}
    return value


def _random_periodic(rng, N, k, n_modes, amplitude):
    t = np.arange(N) / N
    out = np.zeros((N, k))
    for m in range(1, n_modes + 1):
        a = rng.uniform(-1, 1, size=k)
        b = rng.uniform(-1, 1, size=k)
        out += np.outer(np.cos(TWO_PI * m * t), a) + np.outer(np.sin(TWO_PI * m * t), b)
    peak = np.max(np.abs(out))
    return out * (amplitude * rng.uniform(0, 1) / peak) if peak > 0 else out


def admissibility_check(
    x: DiscreteLoop,
    action: TorusAction,
    max_winding: int = 2,
    n_random: int = 20,
    n_modes: int = 3,
    amplitude: float = 0.2,
    seed: int = 0,
    tol: float = 1e-8,
    method: str = "spectral",
) -> dict:
    """Falsification test of the admissibility identity for the horizontal gauge.

    Competitors are ``g exp(m t)`` for integer ``m`` with ``|m|_inf <=
    max_winding``, constant rotations ``g exp(theta)``, and ``n_random``
    random low-frequency periodic perturbations of ``g``.  Competitors with
    ``ell(g~ x) <= ell(g x)`` are admitted, and for each admitted competitor
    the residual of

        A(g~ x) - A(g x) = int <mu(x), g~^{-1} g~' - g^{-1} g'> dt

    is recorded.  ``passed`` is True when every admitted residual is below
    ``tol``.
    """
    rng = np.random.default_rng(seed)
    g = horizontal_gauge(x, action, method=method)
    gx = g.act(action, x)
    ell_g = loop_length(gx, method)
    a_g = flat_action(gx, method=method)
    mu = moment(action, x.samples)
    dg = g.derivative(method)
    k, N = action.k, x.N
    t = x.t[:, None]

    competitors = []
    for m in np.ndindex(*(2 * max_winding + 1,) * k):
        m = np.asarray(m) - max_winding
        if np.any(m != 0):
            competitors.append(("winding", m.tolist(), GaugeLoop(g.eta + t * m, g.winding + m)))
    for _ in range(3):
        theta = rng.uniform(-0.5, 0.5, size=k)
        competitors.append(("constant", theta.tolist(), GaugeLoop(g.eta + theta, g.winding)))
    for i in range(n_random):
        pert = _random_periodic(rng, N, k, n_modes, amplitude)
        competitors.append(("fourier", i, GaugeLoop(g.eta + pert, g.winding)))

    rows = []
    max_res = 0.0
    worst = None
    for kind, label, gt in competitors:
        gtx = gt.act(action, x)
        ell_t = loop_length(gtx, method)
        lhs = flat_action(gtx, method=method) - a_g
        rhs = float(circle_mean(np.sum(mu * (gt.derivative(method) - dg), axis=-1)))
        res = abs(lhs - rhs)
        admitted = ell_t <= ell_g * (1 + 1e-9) + 1e-12
        rows.append({"kind": kind, "label": label, "length": ell_t, "admitted": bool(admitted), "residual": res})
        if admitted and res > max_res:
            max_res = res
            worst = rows[-1]
    passed = max_res <= tol
    return {
        "passed": bool(passed),
        "candidate_length": ell_g,
        "n_competitors": len(rows),
        "n_admitted": int(sum(r["admitted"] for r in rows)),
        "max_residual": max_res,
        "falsifier": None if passed else worst,
        "competitors": rows,
    }


def pullback_identity_residual(u, eta, action: TorusAction, ds: float | None = None, dt: float | None = None) -> float:
    """Max pointwise residual of ``(g u)^* omega = u^* omega - d<mu(u), g^{-1} dg>``.

    ``u`` has shape (Ns, Nt, n) and ``eta`` (the lift of ``g``) shape
    (Ns, Nt, k), both sampled on a uniform grid of the unit square unless
    ``ds``/``dt`` are given.  Derivatives are second-order finite differences
    and the maximum is taken over nodes at least two away from the boundary,
    where every stencil is central, so the residual is O(h^2).
    """
    u = np.asarray(u, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 2:
        eta = eta[..., None]
    Ns, Nt = u.shape[:2]
    ds = 1.0 / (Ns - 1) if ds is None else ds
    dt = 1.0 / (Nt - 1) if dt is None else dt

    def d(f, axis, h):
        return np.gradient(f, h, axis=axis, edge_order=2)

    gu = action.act(eta, u)
    lhs = omega(d(gu, 0, ds), d(gu, 1, dt))
    mu = moment(action, u)
    alpha_s = np.sum(mu * d(eta, 0, ds), axis=-1)
    alpha_t = np.sum(mu * d(eta, 1, dt), axis=-1)
    rhs = omega(d(u, 0, ds), d(u, 1, dt)) - (d(alpha_t, 0, ds) - d(alpha_s, 1, dt))
    return float(np.max(np.abs(lhs - rhs)[2:-2, 2:-2]))


def write_loop_csv(pair: PairLoop, action: TorusAction, path, method: str = "spectral") -> None:
    """Write ``t``, the loop samples, ``xi`` and the integrands to CSV."""
    z = pair.x.samples
    twisted = norm(pair.twisted_derivative(action, method))
    mu = moment(action, z)
    pairing = np.sum(mu * pair.xi, axis=-1)
    header = ["t"]
    header += [f"re_x{j}" for j in range(pair.x.n)] + [f"im_x{j}" for j in range(pair.x.n)]
    header += [f"xi{a}" for a in range(pair.xi.shape[1])] + [f"mu{a}" for a in range(action.k)]
    header += ["twisted_speed", "mu_xi"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(pair.N):
            row = [pair.x.t[i], *z[i].real, *z[i].imag, *pair.xi[i], *mu[i], twisted[i], pairing[i]]
            w.writerow([f"{v:.17g}" for v in row])


def pair_to_json(pair: PairLoop) -> str:
    return json.dumps(pair.to_dict())


def pair_from_json(text: str) -> PairLoop:
    return PairLoop.from_dict(json.loads(text))
