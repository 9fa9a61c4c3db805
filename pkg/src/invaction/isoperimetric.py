"""
Batch verification of the sharp isoperimetric inequality

    |A(x, xi)| <= c ||x' + L_x xi||_p^2 + (pi / m_K^2) ||mu(x)||_{p'}^2,

with ``p' = p / (p - 1)``, over seeded families of short loops, together
with the two constant-pair witnesses showing that neither constant can be
lowered.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .lie_geom import TWO_PI, TorusAction, min_action_norm, moment
from .loops import DEFAULT_DELTA, DEFAULT_N, DiscreteLoop, PairLoop, invariant_action, lengths, lp_norm

QUARTER_PI_INV = 1.0 / (4.0 * np.pi)


@dataclass
class VerifierConfig:
    """Settings for :func:`verify_batch`.

    ``region`` lists sample points of the compact set K (complex, shape
    (m, n)); loops are built around torus orbits of these points.
    """

    action: TorusAction = field(default_factory=TorusAction.standard)
    region: list = field(default_factory=lambda: [[2.0 + 0.0j]])
    c: float = QUARTER_PI_INV + 0.05
    delta: float = DEFAULT_DELTA
    p_values: tuple = (1.0, 1.5, 2.0)
    trials: int = 1000
    seed: int = 0
    N: int = DEFAULT_N
    amplitude: float = 0.05
    xi_amplitude: float = 1.0
    max_mode: int = 4
    max_winding: int = 1
    coefficient: float | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.c > QUARTER_PI_INV:
            raise ValueError("c must exceed 1/(4 pi)")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if any(p < 1 or p > 2 for p in self.p_values):
            raise ValueError("p values must lie in [1, 2]")
        self.region = np.asarray(self.region, dtype=complex).reshape(-1, self.action.n)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["action"] = self.action.to_dict()
        d["region"] = [[[float(v.real), float(v.imag)] for v in pt] for pt in self.region]
        d["p_values"] = list(self.p_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VerifierConfig":
        d = dict(d)
        if "action" in d:
            d["action"] = TorusAction.from_dict(d["action"])
        if "region" in d:
            reg = np.asarray(d["region"], dtype=float)
            d["region"] = reg[..., 0] + 1j * reg[..., 1]
        if "p_values" in d:
            d["p_values"] = tuple(d["p_values"])
        return cls(**d)


def dual_exponent(p: float) -> float:
    return np.inf if p == 1 else p / (p - 1.0)


def isoperi_evaluate(pair: PairLoop, action: TorusAction, p: float, c: float, m_K: float,
                     coefficient: float | None = None, delta: float = DEFAULT_DELTA) -> dict:
    """Both sides of the isoperimetric inequality for one pair and one ``p``.

    ``coefficient`` replaces ``pi / m_K^2`` in front of the moment term.
    """
    if not m_K > 0:
        raise ValueError("m_K must be positive (region touches the stabilizer locus)")
    coef = np.pi / m_K**2 if coefficient is None else coefficient
    lhs = abs(invariant_action(pair, action, delta=delta))
    twisted = lp_norm(pair.twisted_derivative(action), p)
    mom = lp_norm(moment(action, pair.x.samples), dual_exponent(p))
    rhs = c * twisted**2 + coef * mom**2
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "twisted_norm": twisted, "moment_norm": mom}


def _fourier_shape(rng, N, dims, max_mode, complex_valued):
    t = np.arange(N) / N
    out = np.zeros((N, dims), dtype=complex if complex_valued else float)
    for m in range(-max_mode if complex_valued else 1, max_mode + 1):
        if complex_valued:
            coef = rng.normal(size=dims) + 1j * rng.normal(size=dims)
            out += np.outer(np.exp(1j * TWO_PI * m * t), coef)
        else:
            out += np.outer(np.cos(TWO_PI * m * t), rng.normal(size=dims))
            out += np.outer(np.sin(TWO_PI * m * t), rng.normal(size=dims))
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


def make_trial(config: VerifierConfig, index: int, amplitude: float | None = None) -> PairLoop:
    """Pair number ``index`` of the batch; reproducible from ``(seed, index)``.

    The loop is ``exp(m t) (z0 + a p(t))`` with ``z0`` drawn from the
    region, ``m`` a small winding vector and ``p`` a normalised Fourier
    perturbation with modes up to ``max_mode``.  Unless ``amplitude`` is
    given, ``a`` is drawn in ``[0, config.amplitude]`` and shrunk until the
    quotient length is below ``delta``.
    """
    act = config.action
    rng = np.random.default_rng([config.seed, index])
    N = config.N
    t = np.arange(N) / N
    z0 = config.region[rng.integers(len(config.region))]
    m = rng.integers(-config.max_winding, config.max_winding + 1, size=act.k)
    shape = _fourier_shape(rng, N, act.n, config.max_mode, True)
    xi = config.xi_amplitude * (rng.uniform(-1, 1, size=act.k) + _fourier_shape(rng, N, act.k, config.max_mode, False))
    a = config.amplitude * rng.uniform() if amplitude is None else amplitude
    orbit = act.act(np.outer(t, m), np.ones(act.n))

    def build(a):
        return PairLoop(DiscreteLoop(orbit * (z0 + a * shape)), xi)

    pair = build(a)
    if amplitude is None:
        lq = lengths(pair, act)["quotient"]
        while lq >= config.delta:
            a *= 0.9 * config.delta / lq
            pair = build(a)
            lq = lengths(pair, act)["quotient"]
    return pair


def sample_loops(config: VerifierConfig, seed: int | None = None) -> list[PairLoop]:
    if seed is not None and seed != config.seed:
        config = VerifierConfig.from_dict({**config.to_dict(), "seed": seed})
    return [make_trial(config, i) for i in range(config.trials)]


def _trial_rows(config, index, pair, m_K):
    act = config.action
    lq = lengths(pair, act)["quotient"]
    rows = []
    for p in config.p_values:
        ev = isoperi_evaluate(pair, act, p, config.c, m_K, config.coefficient, delta=config.delta)
        rows.append({"index": index, "quotient_length": lq, "p": float(p), **{k: ev[k] for k in ("lhs", "rhs", "margin")}})
    return rows


def verify_batch(config: VerifierConfig, pairs: list[PairLoop] | None = None, bins: int = 20) -> dict:
    """Evaluate the inequality over a seeded batch and all requested ``p``.

    ``m_K`` is the minimum of ``|L_x xi|`` over the region samples and all
    loop samples.  Rows are returned in canonical (trial, p) order whatever
    the number of workers.
    """
    if pairs is None:
        pairs = sample_loops(config)
    pts = [config.region.reshape(-1, config.action.n)] + [pr.x.samples for pr in pairs]
    m_K = min_action_norm(config.action, np.vstack(pts))
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as ex:
            chunks = list(ex.map(lambda ip: _trial_rows(config, ip[0], ip[1], m_K), enumerate(pairs)))
    else:
        chunks = [_trial_rows(config, i, pr, m_K) for i, pr in enumerate(pairs)]
    rows = [r for chunk in chunks for r in chunk]
    margins = np.array([r["margin"] for r in rows])
    violations = [r for r in rows if r["margin"] < 0]
    hist, edges = np.histogram(margins, bins=bins) if margins.size else (np.zeros(0, int), np.zeros(0))
    return {
        "trials": len(pairs),
        "m_K": m_K,
        "c": config.c,
        "coefficient": np.pi / m_K**2 if config.coefficient is None else config.coefficient,
        "n_violations": len(violations),
        "violations": violations,
        "min_margin": float(margins.min()) if margins.size else None,
        "histogram": {"counts": hist.tolist(), "edges": edges.tolist()},
        "rows": rows,
    }


def sharpness_witness(action: TorusAction | None = None, N: int = 64) -> dict:
    """The constant pair ((2, 0), 3/8) for the standard rotation action.

    Returns two evaluations: with coefficient ``1/(32 pi)`` and ``c = 0.1``
    (the inequality fails), and with the true coefficient ``1/(16 pi)`` and
    ``c = 1/(4 pi)`` (equality).
    """
    action = TorusAction.standard() if action is None else action
    pair = PairLoop(DiscreteLoop.constant([2.0], N=N), 3.0 / 8.0)
    m_K = min_action_norm(action, [[2.0]])
    rows = []
    for label, c, coef in (
        ("reduced_coefficient", 0.1, 1.0 / (32.0 * np.pi)),
        ("sharp_constants", QUARTER_PI_INV, None),
    ):
        for p in (1.0, 1.5, 2.0):
            ev = isoperi_evaluate(pair, action, p, c, m_K, coef)
            rows.append({"case": label, "p": p, "c": c, "coefficient": np.pi / m_K**2 if coef is None else coef, **ev})
    return {"m_K": m_K, "rows": rows}


def write_report_csv(report: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "quotient_length", "p", "lhs", "rhs", "margin"])
        for r in report["rows"]:
            w.writerow([r["index"]] + [f"{r[k]:.17g}" for k in ("quotient_length", "p", "lhs", "rhs", "margin")])


def report_to_json(report: dict) -> str:
    return json.dumps(report, default=float, indent=1)


def plot_margin_histogram(report: dict, path) -> None:
    """Write the margin histogram as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "invaction"}):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        edges = np.asarray(report["histogram"]["edges"])
        counts = np.asarray(report["histogram"]["counts"])
        if counts.size:
            ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge", edgecolor="k")
        ax.set_xlabel("margin (rhs - lhs)")
        ax.set_ylabel("count")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
