"""End-to-end acceptance checks, one test per criterion."""
import time

import numpy as np

from invaction.holonomy import circle, constant_curvature_chart, holonomy_bound_scaling, random_smooth_chart
from invaction.isoperimetric import QUARTER_PI_INV, VerifierConfig, sharpness_witness, verify_batch
from invaction.lie_geom import TorusAction, infinitesimal_action, moment, norm, omega
from invaction.loops import (
    DiscreteLoop,
    GaugeLoop,
    PairLoop,
    gauge_apply,
    invariant_action,
    lengths,
    pullback_identity_residual,
)
from invaction.vortex import (
    decay_fit,
    disc_grid,
    embed_radial,
    energy_action_check,
    energy_decay_inequality,
    holomorphic_witness,
    mean_value_check,
    pointwise_bound_check,
    solve_radial,
    vortex_residual,
)

STD = TorusAction.standard()


def test_sharpness_witness(criterion):
    t0 = time.perf_counter()
    wit = sharpness_witness()
    elapsed = time.perf_counter() - t0
    reduced = [r for r in wit["rows"] if r["case"] == "reduced_coefficient"]
    sharp = [r for r in wit["rows"] if r["case"] == "sharp_constants"]
    ok = (
        abs(wit["m_K"] - 4 * np.pi) < 1e-12
        and all(abs(r["lhs"] - 9 * np.pi / 8) < 1e-12 and r["margin"] < 0 for r in reduced)
        and all(abs(r["rhs"] - 3.1043) < 1e-4 for r in reduced)
        and all(abs(r["margin"]) <= 1e-10 for r in sharp)
        and elapsed < 1.0
    )
    worst = max(abs(r["margin"]) for r in sharp)
    criterion(1, ok, f"reduced rhs {reduced[0]['rhs']:.4f} < lhs {reduced[0]['lhs']:.4f}; "
                     f"equality gap {worst:.1e}; {elapsed:.3f} s")


def test_circle_actions(criterion):
    t0 = time.perf_counter()
    errs = []
    for r, deg in ((2.0, 1), (0.5, 1), (2.0, 3)):
        pair = PairLoop(DiscreteLoop.circle(r, deg, 512), 0.0)
        errs.append(abs(invariant_action(pair, STD) - np.pi * (1 - r**2) * deg))
    elapsed = time.perf_counter() - t0
    criterion(2, max(errs) <= 1e-6 and elapsed < 1.0, f"max error {max(errs):.1e}; {elapsed:.3f} s")


def test_isoperimetric_batch(criterion):
    cfg = VerifierConfig(trials=1000, seed=0, c=QUARTER_PI_INV + 0.05)
    t0 = time.perf_counter()
    rep = verify_batch(cfg)
    elapsed = time.perf_counter() - t0
    ok = rep["n_violations"] == 0 and rep["min_margin"] > 0 and len(rep["rows"]) == 3000 and elapsed < 30
    criterion(3, ok, f"{rep['n_violations']} violations, min margin {rep['min_margin']:.3e}; {elapsed:.1f} s")


def _random_instance(rng, N=512):
    t = np.arange(N) / N
    x = np.full((N, 1), 2.0, dtype=complex)
    for m in range(-3, 4):
        x += 0.001 * np.outer(np.exp(2j * np.pi * m * t), rng.normal(size=1) + 1j * rng.normal(size=1))
    xi = rng.uniform(-1, 1, size=1) + 0.3 * np.outer(np.sin(2 * np.pi * t), rng.normal(size=1))
    w = rng.integers(-2, 3, size=1)
    eta = np.outer(t, w) + rng.uniform(-0.5, 0.5, size=1)
    for m in range(1, 4):
        eta += np.outer(np.sin(2 * np.pi * m * t + rng.uniform(0, 6)), 0.1 * rng.normal(size=1))
    return PairLoop(DiscreteLoop(x), xi), GaugeLoop(eta, w)


def test_gauge_invariance(criterion):
    rng = np.random.default_rng(2024)
    dA, dtw, admissible = 0.0, 0.0, True
    for _ in range(100):
        pair, g = _random_instance(rng)
        moved = gauge_apply(g, pair, STD)
        admissible &= lengths(pair, STD)["quotient"] < 0.1
        dA = max(dA, abs(invariant_action(moved, STD) - invariant_action(pair, STD)))
        diff = norm(moved.twisted_derivative(STD)) - norm(pair.twisted_derivative(STD))
        dtw = max(dtw, float(np.max(np.abs(diff))))
    criterion(4, admissible and dA <= 1e-6 and dtw <= 1e-10, f"max |dA| {dA:.1e}; twisted discrepancy {dtw:.1e}")


def test_holonomy_bound(criterion):
    t0 = time.perf_counter()
    cc = holonomy_bound_scaling(constant_curvature_chart(0.5), [circle((0, 0), r, 256) for r in (0.5, 0.25, 0.1)])
    ratio_err = float(np.max(np.abs(np.asarray(cc["ratios"]) - 1 / (4 * np.pi))))
    rq = holonomy_bound_scaling(random_smooth_chart(0), [circle((0, 0), r, 256) for r in (0.2, 0.1, 0.05, 0.025)])
    elapsed = time.perf_counter() - t0
    ok = ratio_err <= 1e-6 and abs(rq["slope"] - 2) <= 0.1 and elapsed < 10
    criterion(5, ok, f"ratio error {ratio_err:.1e}; quaternion exponent {rq['slope']:.4f}; {elapsed:.2f} s")


def test_energy_action_identity(criterion):
    prof = solve_radial(1, 1.0, s_max=6.0, rho0=0.1, step=1e-3)
    fields = embed_radial(prof, Nt=256, s_nodes=np.linspace(1.0, 3.0, 256))
    res = energy_action_check(fields, 1.0, 3.0, STD)
    closed = prof.slice_action(*prof.evaluate(np.array([1.0, 3.0])))
    closed_err = max(abs(res["action_minus"] - closed[0]), abs(res["action_plus"] - closed[1]))
    closed_rel = closed_err / abs(closed[0])
    ok = res["relative_error"] < 1e-4 and closed_rel < 1e-4
    criterion(6, ok, f"E {res['E']:.8e} vs action drop {res['action_drop']:.8e} "
                     f"(rel {res['relative_error']:.1e}); closed form rel {closed_rel:.1e}")


def test_optimal_decay(criterion):
    t0 = time.perf_counter()
    p1 = solve_radial(1, 1.0, s_max=6.0, step=1e-3)
    s1 = decay_fit(p1, window=(2.0, 4.0))["density_slope"]
    ineq = energy_decay_inequality(p1, eps=0.5, s_range=(2.0, 5.0))
    p2 = solve_radial(1, 2.0, s_max=6.0, step=1e-3)
    s2 = decay_fit(p2, window=(2.0, 4.0))["density_slope"]
    elapsed = time.perf_counter() - t0
    ok = (abs(s1 / (-4 * np.pi) - 1) < 0.05 and ineq["holds"] and abs(s2 / (-8 * np.pi) - 1) < 0.05
          and elapsed < 30)
    criterion(7, ok, f"slope {s1:.5f} (lambda 1), {s2:.5f} (lambda 2); "
                     f"min rate {ineq['rate_min']:.4f}; {elapsed:.1f} s")


def test_holomorphic_witness(criterion):
    w = holomorphic_witness(1.0, np.linspace(3.0, 6.0, 61))
    rel = abs(w["slope"] / (-2 * np.pi) - 1)
    criterion(8, rel < 0.01, f"slope {w['slope']:.6f}, relative error {rel:.1e}")


def _pullback_order():
    res = []
    for n in (81, 161):
        s = np.linspace(0, 1, n)
        S, T = np.meshgrid(s, s, indexing="ij")
        u = ((S + 1) * np.exp(2j * np.pi * T))[..., None]
        res.append(pullback_identity_residual(u, (S * T)[..., None], STD))
    return float(np.log2(res[0] / res[1]))


def _mean_value_suite(r=0.5):
    rng = np.random.default_rng(7)
    X, Y, h = disc_grid(r, 101)
    passed = 0
    for i in range(50):
        A = rng.uniform(0.5, 3)
        if i % 3 == 0:
            a = rng.normal(size=2)
            f = A * np.exp(a[0] * X + a[1] * Y)
        elif i % 3 == 1:
            f = A + rng.uniform(0, 2) * (X**2 + Y**2)
        else:
            sig, c = rng.uniform(5, 10) * r, rng.uniform(-r, r, size=2)
            f = A * np.exp(-((X - c[0]) ** 2 + (Y - c[1]) ** 2) / (2 * sig**2))
        res = mean_value_check(f, r, h)
        passed += res["hypothesis"] and res["conclusion"]
    return passed


def _hamiltonian_orders():
    rng = np.random.default_rng(11)
    orders = []
    while len(orders) < 20:
        n, k = rng.integers(1, 4), rng.integers(1, 3)
        W = rng.integers(-2, 3, size=(k, n))
        W[0, np.all(W == 0, axis=0)] = 1
        act = TorusAction(W, rng.uniform(-1, 2, size=n))
        z, v, w = (rng.normal(size=n) + 1j * rng.normal(size=n) for _ in range(3))
        xi = rng.normal(size=k)
        exact = omega(infinitesimal_action(act, z, xi), v)
        err = [abs((moment(act, z + h * v + h**3 * w) @ xi - moment(act, z - h * v - h**3 * w) @ xi) / (2 * h)
                   - exact) for h in (1e-2, 5e-3)]
        if err[0] > 1e-9:
            orders.append(np.log2(err[0] / err[1]))
    return np.array(orders)


def test_property_suites(criterion):
    prof = solve_radial(1, 1.0, s_max=6.0, step=1e-3, shoot=False)
    # residual of the vortex equations at second-order differences
    res = [vortex_residual(embed_radial(prof, 32, np.linspace(1, 3, Ns)), STD, order=2)["max_holomorphic"]
           for Ns in (81, 161)]
    residual_order = float(np.log2(res[0] / res[1]))
    pullback_order = _pullback_order()
    mv = _mean_value_suite()
    ham = _hamiltonian_orders()
    fields = embed_radial(prof, Nt=32, s_nodes=np.linspace(0.0, 5.0, 501))
    pts = [(s, t) for s in (1.0, 1.5, 2.0, 3.0, 4.0) for t in (0.0, 0.25, 0.6)]
    pointwise = all(pointwise_bound_check(fields, STD, z)["pass"] for z in pts)
    ok = (abs(residual_order - 2) <= 0.2 and abs(pullback_order - 2) <= 0.2 and mv == 50
          and np.all(np.abs(ham - 2) <= 0.2) and pointwise)
    criterion(9, ok, f"residual order {residual_order:.3f}; pullback order {pullback_order:.3f}; "
                     f"mean-value {mv}/50; Hamiltonian orders {ham.min():.3f}..{ham.max():.3f}; "
                     f"pointwise bound at {len(pts)} points {'ok' if pointwise else 'violated'}")
