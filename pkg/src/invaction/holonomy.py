"""
Connections on trivial bundles over planar charts: curvature, parallel
transport and holonomy, for the torus T^k and the unit quaternions.

A connection is a pair of Lie-algebra valued fields ``(A1, A2)`` on a
rectangle; along a loop ``x(t)`` the holonomy solves

    h'(t) = -(A1 x1' + A2 x2')(t) h(t),   h(0) = 1,

and equals ``h(1)``.  Under a gauge transformation
``A -> g A g^{-1} - dg g^{-1}`` the holonomy is conjugated by ``g(x(0))``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .lie_geom import Torus, UnitQuaternions, get_group, norm, quat_mul, wrap_unit

TWO_PI = 2.0 * np.pi


class StepSizeError(RuntimeError):
    """A single integration step moved further than the allowed Lie-algebra increment."""


@dataclass(frozen=True)
class ConnectionChart:
    """Lie-algebra valued one-form ``A1 dx + A2 dy`` sampled on a grid.

    Parameters
    ----------
    x, y : ndarray
        Uniform node coordinates.
    A1, A2 : ndarray, shape (len(x), len(y), dim)
        Components at the nodes.
    group : str
        ``"torus"`` or ``"quaternion"``.
    fn : callable, optional
        Exact evaluator ``fn(points) -> (A1, A2)``; when present it replaces
        bilinear interpolation along loops.
    """

    x: np.ndarray
    y: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    group: str = "torus"
    fn: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        for name, nodes in (("x", x), ("y", y)):
            if nodes.size < 3 or not np.allclose(np.diff(nodes), nodes[1] - nodes[0], rtol=1e-9, atol=1e-12):
                raise ValueError(f"{name} nodes must be uniform with at least 3 entries")
        A1 = np.asarray(self.A1, dtype=float)
        A2 = np.asarray(self.A2, dtype=float)
        if A1.ndim == 2:
            A1, A2 = A1[..., None], A2[..., None]
        if A1.shape != (x.size, y.size, A1.shape[-1]) or A2.shape != A1.shape:
            raise ValueError("component arrays must have shape (nx, ny, dim)")
        if not (np.all(np.isfinite(A1)) and np.all(np.isfinite(A2))):
            raise ValueError("connection components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "A1", A1)
        object.__setattr__(self, "A2", A2)
        if self.group == "quaternion" and A1.shape[-1] != 3:
            raise ValueError("quaternion connections take values in R^3")

    @property
    def dim(self) -> int:
        return self.A1.shape[-1]

    @property
    def G(self):
        return get_group(self.group, self.dim)

    @classmethod
    def from_function(cls, fn, xlim=(-1.0, 1.0), ylim=(-1.0, 1.0), shape=(161, 161), group="torus"):
        """Sample ``fn(points) -> (A1, A2)`` on a grid and keep it as the exact evaluator."""
        x = np.linspace(*xlim, shape[0])
        y = np.linspace(*ylim, shape[1])
        X, Y = np.meshgrid(x, y, indexing="ij")
        A1, A2 = fn(np.stack([X, Y], axis=-1))
        return cls(x, y, A1, A2, group=group, fn=fn)

    def evaluate(self, points):
        """Connection components at arbitrary points, shape (..., dim) each."""
        points = np.asarray(points, dtype=float)
        if self.fn is not None:
            A1, A2 = self.fn(points)
            A1, A2 = np.asarray(A1, dtype=float), np.asarray(A2, dtype=float)
            if A1.ndim == points.ndim - 1:
                A1, A2 = A1[..., None], A2[..., None]
            return A1, A2
        lo = np.array([self.x[0], self.y[0]])
        hi = np.array([self.x[-1], self.y[-1]])
        if np.any(points < lo - 1e-12) or np.any(points > hi + 1e-12):
            raise ValueError("loop leaves the chart")
        f1 = RegularGridInterpolator((self.x, self.y), self.A1, method="linear")
        f2 = RegularGridInterpolator((self.x, self.y), self.A2, method="linear")
        flat = points.reshape(-1, 2)
        shape = points.shape[:-1] + (self.dim,)
        return f1(flat).reshape(shape), f2(flat).reshape(shape)

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "dim": self.dim,
            "grid": {
                "x0": float(self.x[0]), "x1": float(self.x[-1]), "nx": int(self.x.size),
                "y0": float(self.y[0]), "y1": float(self.y[-1]), "ny": int(self.y.size),
            },
            "A1": self.A1.reshape(-1).tolist(),
            "A2": self.A2.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "ConnectionChart":
        g = d["grid"]
        x = np.linspace(g["x0"], g["x1"], g["nx"])
        y = np.linspace(g["y0"], g["y1"], g["ny"])
        shape = (g["nx"], g["ny"], d["dim"])
        return cls(x, y, np.reshape(d["A1"], shape), np.reshape(d["A2"], shape), group=d["group"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text) -> "ConnectionChart":
        return cls.from_dict(json.loads(text))


def curvature(conn: ConnectionChart):
    """``F12 = d1 A2 - d2 A1 + [A1, A2]`` on the grid, and its sup norm."""
    hx = conn.x[1] - conn.x[0]
    hy = conn.y[1] - conn.y[0]
    F = (
        np.gradient(conn.A2, hx, axis=0, edge_order=2)
        - np.gradient(conn.A1, hy, axis=1, edge_order=2)
        + conn.G.bracket(conn.A1, conn.A2)
    )
    return F, float(np.max(norm(F)))


# ---------------------------------------------------------------------------
# loops in the plane


def _as_planar(loop):
    if hasattr(loop, "samples"):
        z = np.asarray(loop.samples)[:, 0]
        return np.stack([z.real, z.imag], axis=-1)
    pts = np.asarray(loop)
    if np.iscomplexobj(pts):
        pts = np.stack([pts.real, pts.imag], axis=-1)
    return np.asarray(pts, dtype=float)


def circle(center=(0.0, 0.0), r: float = 1.0, N: int = 256, reverse: bool = False):
    """Counterclockwise circle as an array of shape (N, 2), starting at angle 0."""
    t = np.arange(N) / N
    if reverse:
        t = -t
    return np.stack([center[0] + r * np.cos(TWO_PI * t), center[1] + r * np.sin(TWO_PI * t)], axis=-1)


def _trig_upsample(pts, factor=2):
    N = pts.shape[0]
    M = factor * N
    F = np.fft.fft(pts, axis=0)
    G = np.zeros((M,) + pts.shape[1:], dtype=complex)
    half = N // 2
    G[:half] = F[:half]
    G[M - half + (N % 2 == 0):] = F[half + (N % 2 == 0):]
    if N % 2 == 0:
        G[half] = 0.5 * F[half]
        G[M - half] = 0.5 * F[half]
    up = np.fft.ifft(G, axis=0).real * factor
    k = np.fft.fftfreq(M, d=1.0 / M)
    dG = G * (1j * TWO_PI * k)[:, None]
    if N % 2 == 0:
        dG[half] = 1j * TWO_PI * half * G[half]
        dG[M - half] = -1j * TWO_PI * half * G[M - half]
    dup = np.fft.ifft(dG, axis=0).real * factor
    return up, dup


def planar_length(loop, path: str = "spectral") -> float:
    pts = _as_planar(loop)
    if path == "polygon":
        return float(np.sum(norm(np.roll(pts, -1, axis=0) - pts)))
    _, d = _trig_upsample(pts, 1)
    return float(np.mean(norm(d)))


def _velocity_field(conn, loop, path):
    """Lie-algebra values ``X = A(x')`` at the three RK4 nodes of each step, plus step size."""
    pts = _as_planar(loop)
    N = pts.shape[0]
    if path == "spectral":
        up, dup = _trig_upsample(pts, 2)
        A1, A2 = conn.evaluate(up)
        X = A1 * dup[:, :1] + A2 * dup[:, 1:]
        X = np.vstack([X, X[:1]])
        return X[0:-1:2], X[1::2], X[2::2], 1.0 / N
    if path == "polygon":
        nxt = np.roll(pts, -1, axis=0)
        seg = nxt - pts
        A1s, A2s = conn.evaluate(pts)
        A1m, A2m = conn.evaluate(0.5 * (pts + nxt))
        A1e, A2e = np.roll(A1s, -1, axis=0), np.roll(A2s, -1, axis=0)

        def contract(a1, a2):
            return a1 * seg[:, :1] + a2 * seg[:, 1:]

        return contract(A1s, A2s), contract(A1m, A2m), contract(A1e, A2e), 1.0
    raise ValueError(f"unknown path mode {path!r}")


def holonomy(conn: ConnectionChart, loop, path: str = "spectral", max_increment: float = 0.1):
    """Holonomy of ``conn`` around a planar loop based at its first sample.

    ``loop`` is an (N, 2) array, a complex array or a one-dimensional
    :class:`~invaction.loops.DiscreteLoop`.  With ``path="spectral"`` the
    samples are trigonometrically interpolated (smooth closed loops); with
    ``path="polygon"`` the loop is the closed polygon through the samples.
    The ODE is integrated by classical RK4 with one step per sample and the
    state is projected back onto the group after each step.

    Returns a torus element in [0, 1)^k or a unit quaternion.
    """
    X0, Xm, X1, h = _velocity_field(conn, loop, path)
    peak = np.max(norm(np.concatenate([X0, Xm, X1]))) * h
    if peak > max_increment:
        raise StepSizeError(f"Lie-algebra increment {peak:.3g} per step exceeds {max_increment}")
    G = conn.G
    if G.abelian:
        # for a commutative group RK4 reduces to Simpson's rule on the angle
        incr = -(X0 + 4 * Xm + X1) * (h / 6.0)
        return wrap_unit(np.sum(incr, axis=0))
    q = G.identity()

    def f(Xv, q):
        return -quat_mul(G.algebra_to_quat(Xv), q)

    for i in range(X0.shape[0]):
        k1 = f(X0[i], q)
        k2 = f(Xm[i], q + 0.5 * h * k1)
        k3 = f(Xm[i], q + 0.5 * h * k2)
        k4 = f(X1[i], q + h * k3)
        q = G.project(q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
    return q


def circulation(conn: ConnectionChart, loop) -> np.ndarray:
    """``oint A`` by the periodic trapezoid rule (abelian cross-check)."""
    pts = _as_planar(loop)
    up, dup = _trig_upsample(pts, 1)
    A1, A2 = conn.evaluate(up)
    return np.mean(A1 * dup[:, :1] + A2 * dup[:, 1:], axis=0)


def holonomy_distance(conn: ConnectionChart, h) -> float:
    return float(conn.G.dist(h))


def holonomy_bound_scaling(conn: ConnectionChart, loops, path: str = "spectral") -> dict:
    """Ratios ``d(1, h) / (|F|_inf l^2)`` over a family of loops and the log-log slope.

    The slope is the least-squares exponent of ``d(1, h)`` against the loop
    length; it is ``nan`` when fewer than two loops have ``d > 0``.
    """
    _, Fsup = curvature(conn)
    ells, dists = [], []
    for lp in loops:
        ells.append(planar_length(lp, path))
        dists.append(holonomy_distance(conn, holonomy(conn, lp, path=path)))
    ells = np.asarray(ells)
    dists = np.asarray(dists)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(Fsup > 0, dists / (Fsup * ells**2), 0.0)
    good = dists > 0
    slope = float(np.polyfit(np.log(ells[good]), np.log(dists[good]), 1)[0]) if good.sum() >= 2 else float("nan")
    return {"lengths": ells, "distances": dists, "F_sup": Fsup, "ratios": ratios, "slope": slope}


def write_scaling_csv(result: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["length", "distance", "F_sup", "ratio"])
        for ell, d, r in zip(result["lengths"], result["distances"], result["ratios"]):
            w.writerow([f"{ell:.17g}", f"{d:.17g}", f"{result['F_sup']:.17g}", f"{r:.17g}"])


# ---------------------------------------------------------------------------
# sample connections


def constant_curvature_chart(B: float = 1.0, half_width: float = 1.0, n: int = 41) -> ConnectionChart:
    """Abelian ``A = (B/2)(x dy - y dx)``, whose curvature is ``B`` everywhere."""

    def fn(p):
        return -0.5 * B * p[..., 1:2], 0.5 * B * p[..., 0:1]

    return ConnectionChart.from_function(fn, (-half_width, half_width), (-half_width, half_width), (n, n), "torus")


def random_smooth_chart(seed: int = 0, group: str = "quaternion", n_modes: int = 3, amplitude: float = 1.0,
                        shape=(161, 161), half_width: float = 1.0, k: int = 1) -> ConnectionChart:
    """Sum of a few random plane waves in each component (smooth, bounded)."""
    rng = np.random.default_rng(seed)
    dim = 3 if group == "quaternion" else k
    waves = rng.normal(size=(2, n_modes, 2)) * 2.0
    phases = rng.uniform(0, TWO_PI, size=(2, n_modes, dim))
    amps = rng.normal(size=(2, n_modes, dim)) * amplitude / n_modes

    def fn(p):
        out = []
        for c in range(2):
            arg = p @ waves[c].T  # (..., n_modes)
            out.append(np.sum(amps[c] * np.sin(arg[..., :, None] + phases[c]), axis=-2))
        return out[0], out[1]

    return ConnectionChart.from_function(fn, (-half_width, half_width), (-half_width, half_width), shape, group)


def gauge_transform(conn: ConnectionChart, g_fn, dgginv_fn) -> ConnectionChart:
    """Gauge transform ``A -> g A g^{-1} - dg g^{-1}``.

    ``g_fn(points)`` returns group elements and ``dgginv_fn(points)`` the pair
    ``(d1 g g^{-1}, d2 g g^{-1})`` of Lie-algebra values.
    """
    G = conn.G

    def fn(p):
        A1, A2 = conn.evaluate(p)
        g = g_fn(p)
        r1, r2 = dgginv_fn(p)
        return G.adjoint(g, A1) - r1, G.adjoint(g, A2) - r2

    X, Y = np.meshgrid(conn.x, conn.y, indexing="ij")
    A1, A2 = fn(np.stack([X, Y], axis=-1))
    return ConnectionChart(conn.x, conn.y, A1, A2, group=conn.group, fn=fn)


__all__ = [
    "ConnectionChart",
    "StepSizeError",
    "Torus",
    "UnitQuaternions",
    "circle",
    "circulation",
    "constant_curvature_chart",
    "curvature",
    "gauge_transform",
    "holonomy",
    "holonomy_bound_scaling",
    "holonomy_distance",
    "planar_length",
    "random_smooth_chart",
    "write_scaling_csv",
]
