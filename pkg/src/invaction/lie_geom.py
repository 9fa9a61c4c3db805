"""
Flat model geometry for weighted torus actions on C^n.

Points of C^n are complex arrays of shape ``(..., n)``; tangent vectors use
the same representation.  The symplectic form is the standard one,
``omega(u, v) = Im sum(conj(u) * v)``, the complex structure is
multiplication by ``i`` and the metric is ``Re sum(conj(u) * v)``, so that
``metric(u, v) == omega(u, i v)``.

The Lie algebra of T^k is R^k with the Euclidean inner product and the
exponential map ``theta -> theta mod Z^k``.  A group element acts on
coordinate ``j`` by the phase ``exp(2 pi i <w_j, theta>)``.

The module also provides the unit quaternion group used by the holonomy
experiments.
"""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

TWO_PI = 2.0 * np.pi


class DegenerateRankWarning(UserWarning):
    """Raised (as a warning) when L_z is numerically rank deficient."""


class AmbiguousLogError(ValueError):
    """Logarithm requested at the cut locus of the group."""


@dataclass(frozen=True)
class TorusAction:
    """Linear action of T^k on C^n with integer weights.

    Parameters
    ----------
    W : array_like of int, shape (k, n)
        Column ``W[:, j]`` is the weight vector of coordinate ``j``.
    c : array_like of float, shape (n,)
        Offsets of the moment map, in units of area.
    """

    W: np.ndarray
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W))
        if not np.all(np.equal(np.mod(W, 1), 0)):
            raise ValueError("weight matrix must have integer entries")
        W = W.astype(np.int64)
        c = np.zeros(W.shape[1]) if self.c is None else np.asarray(self.c, dtype=float).reshape(-1)
        if c.shape != (W.shape[1],):
            raise ValueError(f"offset vector must have length n={W.shape[1]}, got {c.shape}")
        if np.any(np.all(W == 0, axis=0)):
            raise ValueError("every column of W needs a nonzero entry")
        W.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "c", c)

    @property
    def k(self) -> int:
        return self.W.shape[0]

    @property
    def n(self) -> int:
        return self.W.shape[1]

    @classmethod
    def standard(cls) -> "TorusAction":
        """Rotation of C by S^1 with moment map pi*(1 - |z|^2)."""
        return cls(W=[[1]], c=[1.0])

    def to_dict(self) -> dict:
        return {"n": self.n, "k": self.k, "W": self.W.tolist(), "c": self.c.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TorusAction":
        act = cls(W=d["W"], c=d["c"])
        if ("n" in d and d["n"] != act.n) or ("k" in d and d["k"] != act.k):
            raise ValueError("n/k fields disagree with the shape of W")
        return act

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TorusAction":
        return cls.from_dict(json.loads(text))

    def act(self, theta, z):
        """Apply ``exp(theta)`` to ``z``; ``theta`` has shape (..., k)."""
        phase = np.asarray(theta, dtype=float) @ self.W
        return np.exp(1j * TWO_PI * phase) * np.asarray(z)


# ---------------------------------------------------------------------------
# symplectic linear algebra on C^n


def omega(u, v):
    """Standard symplectic form, summed over the last axis."""
    return np.sum(np.imag(np.conj(u) * v), axis=-1)


def inner(u, v):
    """Euclidean inner product on C^n = R^{2n}."""
    return np.sum(np.real(np.conj(u) * v), axis=-1)


def norm(u):
    return np.sqrt(np.sum(np.abs(u) ** 2, axis=-1))


def as_real(v):
    """View complex vectors (..., n) as real vectors (..., 2n)."""
    v = np.asarray(v)
    return np.concatenate([v.real, v.imag], axis=-1)


def as_complex(x):
    x = np.asarray(x)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


# ---------------------------------------------------------------------------
# infinitesimal action and moment map


def infinitesimal_action(action: TorusAction, z, xi):
    """Return ``L_z xi`` with components ``2 pi i <w_j, xi> z_j``."""
    rate = np.asarray(xi, dtype=float) @ action.W
    return 1j * TWO_PI * rate * np.asarray(z)


def action_matrix(action: TorusAction, z):
    """Real matrix of ``L_z`` with shape (..., 2n, k)."""
    z = np.asarray(z, dtype=complex)
    cols = 1j * TWO_PI * z[..., None, :] * action.W  # (..., k, n)
    return np.swapaxes(as_real(cols), -1, -2)


def gram(action: TorusAction, z):
    """``L_z^* L_z``, shape (..., k, k)."""
    r2 = np.abs(np.asarray(z)) ** 2
    return (TWO_PI**2) * np.einsum("aj,bj,...j->...ab", action.W, action.W, r2)


def adjoint_action(action: TorusAction, z, v):
    """``L_z^* v`` in R^k."""
    w = np.imag(np.conj(np.asarray(z)) * np.asarray(v))
    return TWO_PI * w @ action.W.T


def moment(action: TorusAction, z):
    """Moment map ``mu(z) = pi W (c - |z|^2)`` as a vector in R^k."""
    r2 = np.abs(np.asarray(z)) ** 2
    return np.pi * (action.c - r2) @ action.W.T


def _scale(z):
    return np.maximum(1.0, norm(z))


def connection_form(action: TorusAction, z, v, tol: float = 1e-9):
    """Vertical connection ``(L^* L)^{-1} L^* v`` in R^k.

    Falls back to the pseudoinverse (with a :class:`DegenerateRankWarning`)
    where the smallest singular value of ``L_z`` is below ``tol`` times the
    scale of ``z``.
    """
    z = np.asarray(z, dtype=complex)
    G = gram(action, z)
    rhs = adjoint_action(action, z, v)
    smin = min_singular_value(action, z)
    bad = smin < tol * _scale(z)
    if np.any(bad):
        warnings.warn(
            f"L_z is rank deficient at {int(np.sum(bad))} point(s); using pseudoinverse",
            DegenerateRankWarning,
            stacklevel=2,
        )
        return np.einsum("...ab,...b->...a", np.linalg.pinv(G, hermitian=True), rhs)
    return np.linalg.solve(G, rhs[..., None])[..., 0]


def project_vertical(action: TorusAction, z, v, tol: float = 1e-9):
    """Orthogonal projection of ``v`` onto the tangent space of the orbit through ``z``."""
    return infinitesimal_action(action, z, connection_form(action, z, v, tol=tol))


def min_singular_value(action: TorusAction, z):
    """Smallest singular value of ``L_z`` for each point."""
    M = action_matrix(action, np.asarray(z, dtype=complex))
    if M.shape[-2] < M.shape[-1]:
        return np.zeros(M.shape[:-2])
    # singular values directly: the square root of Gram eigenvalues loses half the digits
    return np.linalg.svd(M, compute_uv=False)[..., -1]


def min_action_norm(action: TorusAction, samples) -> float:
    """``m_X = min |L_x xi|`` over ``x`` in the samples and unit ``xi``."""
    z = np.asarray(samples, dtype=complex).reshape(-1, action.n)
    if z.shape[0] == 0:
        raise ValueError("need at least one sample point")
    return float(np.min(min_singular_value(action, z)))


# ---------------------------------------------------------------------------
# hypothesis (H)


def _lattice_index(WS: np.ndarray) -> int:
    """Index of the lattice spanned by the columns of WS in Z^k (0 if rank < k)."""
    k, m = WS.shape
    if m < k:
        return 0
    g = 0
    for cols in itertools.combinations(range(m), k):
        d = int(round(np.linalg.det(WS[:, cols].astype(float))))
        g = np.gcd(g, abs(d))
        if g == 1:
            return 1
    return int(g)


def _support_occurs(action: TorusAction, S) -> bool:
    """Is there ``r >= 0`` with support exactly ``S`` and ``W r = W c``?"""
    target = action.W @ action.c
    if len(S) == 0:
        return bool(np.allclose(target, 0.0))
    WS = action.W[:, S].astype(float)
    m = len(S)
    # maximise t subject to W_S r = W c, r_j >= t, t <= 1
    cost = np.zeros(m + 1)
    cost[-1] = -1.0
    A_eq = np.hstack([WS, np.zeros((action.k, 1))])
    A_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    res = linprog(
        cost,
        A_ub=A_ub,
        b_ub=np.zeros(m),
        A_eq=A_eq,
        b_eq=target,
        bounds=[(0, None)] * m + [(None, 1.0)],
        method="highs",
    )
    return bool(res.status == 0 and -res.fun > 1e-9)


def _sampled_hypothesis(action, eps, rng, n_samples=4000):
    # coarse fallback: random points along rays, and near-zero-level points
    dirs = rng.normal(size=(n_samples, action.n)) + 1j * rng.normal(size=(n_samples, action.n))
    dirs /= norm(dirs)[:, None]
    far = 1e3 * dirs
    compact = bool(np.all(norm(moment(action, far)) > eps))
    radii = np.sqrt(np.abs(rng.uniform(0, 2 * np.max(np.abs(action.c)) + 1, size=(n_samples, action.n))))
    pts = radii * np.exp(1j * rng.uniform(0, TWO_PI, size=radii.shape))
    near = norm(moment(action, pts)) < 0.05 * max(eps, 1e-3)
    free = bool(np.all(min_singular_value(action, pts[near]) > 1e-6)) if np.any(near) else True
    return {"compact": compact, "free_on_zero_level": free, "samples": int(n_samples)}


def check_hypothesis_h(action: TorusAction, eps: float, max_exact_n: int = 12, seed: int = 0) -> dict:
    """Decide hypothesis (H) for the linear model.

    The sublevel set ``{|mu| <= eps}`` is compact iff no nonzero ``r >= 0``
    satisfies ``W r = 0`` (``r`` being the vector of ``|z_j|^2``).  The action
    is free on the zero level iff, for every coordinate support that occurs on
    ``mu^{-1}(0)``, the corresponding weight columns span Z^k.

    Returns a dict with ``compact``, ``free_on_zero_level``, ``status``
    (``"decided"`` or ``"undecidable"``) and the list of supports found on the
    zero level.  For ``n > max_exact_n`` the result is ``"undecidable"`` and
    the sampled estimate is attached under ``"sampled"``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if action.n > max_exact_n:
        est = _sampled_hypothesis(action, eps, np.random.default_rng(seed))
        return {
            "compact": None,
            "free_on_zero_level": None,
            "status": "undecidable",
            "sampled": est,
        }
    n, k = action.n, action.k
    # recession cone of {r >= 0 : |W(c - r)| <= const}
    res = linprog(
        np.zeros(n),
        A_eq=np.vstack([action.W.astype(float), np.ones((1, n))]),
        b_eq=np.concatenate([np.zeros(k), [1.0]]),
        bounds=[(0, None)] * n,
        method="highs",
    )
    compact = res.status != 0
    supports = []
    free = True
    for size in range(n + 1):
        for S in itertools.combinations(range(n), size):
            if _support_occurs(action, list(S)):
                supports.append(list(S))
                if _lattice_index(action.W[:, list(S)]) != 1:
                    free = False
    return {
        "compact": bool(compact),
        "free_on_zero_level": bool(free),
        "status": "decided",
        "zero_level_supports": supports,
    }


# ---------------------------------------------------------------------------
# groups


def wrap_unit(x):
    """Reduce modulo 1 into [0, 1); ``np.mod`` alone can return 1.0 for tiny negatives."""
    r = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(r >= 1.0, 0.0, r)


class Torus:
    """The torus T^k = R^k / Z^k with the Euclidean bi-invariant metric."""

    abelian = True

    def __init__(self, k: int = 1):
        self.k = int(k)
        self.dim = self.k

    def identity(self):
        return np.zeros(self.k)

    def exp(self, xi):
        return wrap_unit(xi)

    def log(self, g):
        """Lattice-reduced representative in [-1/2, 1/2)^k."""
        g = np.asarray(g, dtype=float)
        return g - np.floor(g + 0.5)

    def mul(self, g, h):
        return wrap_unit(np.asarray(g) + np.asarray(h))

    def inv(self, g):
        return wrap_unit(-np.asarray(g, dtype=float))

    def dist(self, g, h=None):
        """Bi-invariant distance ``d(g, h)``; ``d(1, g)`` if ``h`` is omitted."""
        diff = np.asarray(g, dtype=float) if h is None else np.asarray(h, dtype=float) - np.asarray(g, dtype=float)
        return norm(self.log(diff))

    def bracket(self, xi, eta):
        return np.zeros(np.broadcast(np.asarray(xi), np.asarray(eta)).shape)

    def adjoint(self, g, xi):
        return np.asarray(xi, dtype=float)

    def project(self, g):
        return wrap_unit(g)


def quat_mul(p, q):
    """Hamilton product of quaternions stored as (w, x, y, z)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, pv = p[..., :1], p[..., 1:]
    qw, qv = q[..., :1], q[..., 1:]
    w = pw * qw - np.sum(pv * qv, axis=-1, keepdims=True)
    v = pw * qv + qw * pv + np.cross(pv, qv)
    return np.concatenate([w, v], axis=-1)


def quat_conj(q):
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


class UnitQuaternions:
    """Unit quaternions with Lie algebra R^3 and bracket the cross product.

    ``xi`` in R^3 corresponds to the pure quaternion ``xi/2``, so that
    ``exp(xi) = (cos(|xi|/2), sin(|xi|/2) xi/|xi|)`` and the adjoint action
    is the rotation of R^3 represented by the quaternion.  The distance is
    the angle of the relative rotation, so the cut locus sits at angle pi.
    """

    abelian = False
    dim = 3

    def identity(self):
        return np.array([1.0, 0.0, 0.0, 0.0])

    def algebra_to_quat(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.concatenate([np.zeros(xi.shape[:-1] + (1,)), 0.5 * xi], axis=-1)

    def exp(self, xi):
        xi = np.asarray(xi, dtype=float)
        theta = norm(xi)[..., None]
        half = 0.5 * theta
        # sin(x/2)/x, with its limit 1/2 at 0
        sinc = np.where(theta > 1e-8, np.sin(half) / np.where(theta > 0, theta, 1.0), 0.5 - theta**2 / 48.0)
        return np.concatenate([np.cos(half), sinc * xi], axis=-1)

    def angle(self, q):
        q = np.asarray(q, dtype=float)
        return 2.0 * np.arctan2(norm(q[..., 1:]), np.abs(q[..., 0]))

    def log(self, q, tol: float = 1e-12):
        q = self.project(q)
        q = np.where(q[..., :1] < 0, -q, q)
        theta = self.angle(q)
        if np.any(np.abs(theta - np.pi) <= tol):
            raise AmbiguousLogError("rotation angle pi: logarithm is not unique")
        s = norm(q[..., 1:])
        factor = np.where(s > 1e-15, theta / np.where(s > 0, s, 1.0), 2.0)
        return factor[..., None] * q[..., 1:]

    def mul(self, g, h):
        return self.project(quat_mul(g, h))

    def inv(self, g):
        return quat_conj(g)

    def dist(self, g, h=None):
        rel = g if h is None else quat_mul(quat_conj(g), h)
        return self.angle(rel)

    def bracket(self, xi, eta):
        return np.cross(xi, eta)

    def adjoint(self, g, xi):
        """``g xi g^{-1}`` as a vector in R^3."""
        q = self.algebra_to_quat(xi)
        return 2.0 * quat_mul(quat_mul(g, q), quat_conj(g))[..., 1:]

    def project(self, q):
        q = np.asarray(q, dtype=float)
        return q / norm(q)[..., None]

    def same_rotation(self, g, h, atol=1e-12):
        return bool(np.all(self.dist(g, h) <= atol))


def get_group(tag: str, k: int = 1):
    if tag in ("torus", "T"):
        return Torus(k)
    if tag in ("quaternion", "SU2", "su2"):
        return UnitQuaternions()
    raise ValueError(f"unknown group tag {tag!r}")
