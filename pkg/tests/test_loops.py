import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invaction.lie_geom import TorusAction, moment, norm
from invaction.loops import (
    AdmissibilityWarning,
    DiscreteLoop,
    GaugeLoop,
    PairLoop,
    UnderResolvedError,
    admissibility_check,
    flat_action,
    gauge_apply,
    horizontal_gauge,
    invariant_action,
    lengths,
    lp_norm,
    pair_from_json,
    pair_to_json,
    periodic_antiderivative,
    periodic_derivative,
    pullback_identity_residual,
    write_loop_csv,
)

STD = TorusAction.standard()


def perturbed_pair(rng, N=256, z0=2.0, amp=0.01, modes=3, act=STD):
    t = np.arange(N) / N
    x = np.full((N, act.n), z0, dtype=complex)
    for m in range(-modes, modes + 1):
        x += amp * np.outer(np.exp(2j * np.pi * m * t), rng.normal(size=act.n) + 1j * rng.normal(size=act.n))
    xi = rng.uniform(-1, 1, size=act.k) + 0.3 * np.outer(np.sin(2 * np.pi * t), rng.normal(size=act.k))
    return PairLoop(DiscreteLoop(x), xi)


def random_gauge(rng, N, k=1, max_winding=2, modes=3):
    t = np.arange(N) / N
    w = rng.integers(-max_winding, max_winding + 1, size=k)
    eta = np.outer(t, w) + rng.uniform(-0.5, 0.5, size=k)
    for m in range(1, modes + 1):
        eta += np.outer(np.sin(2 * np.pi * m * t + rng.uniform(0, 6)), 0.1 * rng.normal(size=k))
    return GaugeLoop(eta, w)


# --- periodic calculus ------------------------------------------------------


def test_derivatives_on_trig_polynomial():
    t = np.arange(64) / 64
    f = np.sin(2 * np.pi * 3 * t)
    df = 6 * np.pi * np.cos(2 * np.pi * 3 * t)
    assert np.allclose(periodic_derivative(f), df, atol=1e-10)
    assert np.max(np.abs(periodic_derivative(f, "central") - df)) < 0.5
    F = periodic_antiderivative(f[:, None])[:, 0]
    assert F[0] == 0.0
    assert np.allclose(F, (1 - np.cos(2 * np.pi * 3 * t)) / (6 * np.pi), atol=1e-12)


def test_central_difference_order():
    errs = []
    for N in (64, 128):
        t = np.arange(N) / N
        f = np.exp(np.sin(2 * np.pi * t))
        df = 2 * np.pi * np.cos(2 * np.pi * t) * f
        errs.append(np.max(np.abs(periodic_derivative(f, "central") - df)))
    assert abs(np.log2(errs[0] / errs[1]) - 2) < 0.2


def test_loop_validation_and_serialisation(tmp_path):
    with pytest.raises(ValueError):
        DiscreteLoop(np.zeros((4, 1)))
    pair = perturbed_pair(np.random.default_rng(0), N=32)
    back = pair_from_json(pair_to_json(pair))
    assert np.array_equal(back.x.samples, pair.x.samples) and np.array_equal(back.xi, pair.xi)
    d = json.loads(pair_to_json(pair))
    assert np.asarray(d["x"]["coords"]).shape == (1, 32, 2)
    write_loop_csv(pair, STD, tmp_path / "loop.csv")
    lines = (tmp_path / "loop.csv").read_text().splitlines()
    assert len(lines) == 33 and lines[0].startswith("t,re_x0")


# --- lengths and norms ------------------------------------------------------


def test_lengths_examples():
    ln = lengths(PairLoop(DiscreteLoop.circle(2.0, 1, 256), 0.0), STD)
    assert ln["ell"] == pytest.approx(4 * np.pi)
    assert ln["twisted"] == pytest.approx(4 * np.pi)
    assert ln["quotient"] < 1e-10
    ln = lengths(PairLoop(DiscreteLoop.constant([2.0], 64), 3 / 8), STD)
    assert ln["ell"] == 0 and ln["twisted"] == pytest.approx(1.5 * np.pi)
    ln = lengths(PairLoop(DiscreteLoop.constant([2.0], 64), 0.0), STD)
    assert ln["ell"] == ln["twisted"] == ln["quotient"] == 0


def test_lp_norm_examples():
    const = np.full((50, 1), 3 * np.pi)
    for p in (1, 1.5, 2, np.inf):
        assert lp_norm(const, p) == pytest.approx(3 * np.pi)
    t = np.arange(1000) / 1000
    assert lp_norm(np.sin(2 * np.pi * t)[:, None], 1) == pytest.approx(2 / np.pi, abs=1e-5)
    rng = np.random.default_rng(1)
    f = rng.normal(size=(40, 2))
    assert lp_norm(f, np.inf) == np.max(norm(f))
    vals = [lp_norm(f, p) for p in (1, 1.5, 2, 4, np.inf)]
    assert np.all(np.diff(vals) >= -1e-12)


def test_quotient_length_at_most_length():
    rng = np.random.default_rng(2)
    for _ in range(20):
        pr = perturbed_pair(rng, N=64, amp=0.3)
        ln = lengths(pr, STD)
        assert ln["quotient"] <= ln["ell"] + 1e-12


# --- flat action ------------------------------------------------------------


def test_flat_action_examples():
    for r, c in ((1.0, 0.0), (0.5, 3 + 1j)):
        assert flat_action(DiscreteLoop.circle(r, 1, 128, center=c)) == pytest.approx(-np.pi * r**2)
    assert flat_action(DiscreteLoop.constant([1 + 1j], 16)) == 0.0
    eight = DiscreteLoop.from_function(lambda t: np.sin(2 * np.pi * t) + 1j * np.sin(4 * np.pi * t), 128)
    assert abs(flat_action(eight)) < 1e-12


def test_flat_action_reversal_and_basepoint():
    rng = np.random.default_rng(3)
    x = perturbed_pair(rng, N=128, amp=0.4).x
    assert flat_action(x.reversed()) == pytest.approx(-flat_action(x), abs=1e-12)
    assert flat_action(x, basepoint=64) == pytest.approx(flat_action(x), abs=1e-10)


# --- horizontal gauge and the invariant action ------------------------------


@pytest.mark.parametrize("deg", [1, 2, -1])
def test_horizontal_gauge_on_circles(deg):
    x = DiscreteLoop.circle(1.5, deg, 128)
    g, xi0 = horizontal_gauge(x, STD, full_output=True)
    assert np.allclose(xi0, 0, atol=1e-12)
    assert np.array_equal(g.winding, [-deg])
    assert np.allclose(g.eta[:, 0], -deg * x.t, atol=1e-12)
    gx = g.act(STD, x).samples
    assert np.allclose(gx, gx[0], atol=1e-12)


def test_horizontal_gauge_constant_is_identity():
    g = horizontal_gauge(DiscreteLoop.constant([2.0], 32), STD)
    assert np.allclose(g.eta, 0) and np.array_equal(g.winding, [0])


def test_horizontal_gauge_makes_connection_constant():
    from invaction.lie_geom import connection_form

    rng = np.random.default_rng(4)
    act = TorusAction([[1, 0], [1, 1]], [1.0, 2.0])
    pr = perturbed_pair(rng, N=256, z0=1.5, amp=0.05, act=act)
    g, xi0 = horizontal_gauge(pr.x, act, full_output=True)
    gx = g.act(act, pr.x)
    a = connection_form(act, gx.samples, gx.derivative())
    assert np.allclose(a, xi0, atol=1e-9)
    assert np.all(np.abs(xi0) <= 0.5)


@pytest.mark.parametrize("r,deg", [(2.0, 1), (0.5, 1), (2.0, 3), (1.0, 1)])
def test_circle_invariant_action(r, deg):
    pair = PairLoop(DiscreteLoop.circle(r, deg, 512), 0.0)
    assert invariant_action(pair, STD) == pytest.approx(np.pi * (1 - r**2) * deg, abs=1e-9)


def test_constant_pair_action():
    pair = PairLoop(DiscreteLoop.constant([2.0], 64), 3 / 8)
    assert invariant_action(pair, STD) == pytest.approx(-9 * np.pi / 8, abs=1e-12)


def test_admissibility_warning():
    pair = PairLoop(DiscreteLoop.from_function(lambda t: 2 + 0.5 * np.cos(2 * np.pi * t), 64), 0.0)
    with pytest.warns(AdmissibilityWarning):
        invariant_action(pair, STD)


def test_gauge_loop_validation():
    with pytest.raises(UnderResolvedError):
        GaugeLoop(np.array([0.0, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]), [0])
    with pytest.raises(ValueError):
        GaugeLoop(np.zeros(8), [0.5])


def test_gauge_apply_examples():
    rng = np.random.default_rng(5)
    pr = perturbed_pair(rng, N=64)
    same = gauge_apply(GaugeLoop.identity(64), pr, STD)
    assert np.allclose(same.x.samples, pr.x.samples) and np.allclose(same.xi, pr.xi)
    const = PairLoop(DiscreteLoop.constant([1.5], 64), 0.0)
    g = GaugeLoop.from_function(lambda t: t, 64, [1])
    moved = gauge_apply(g, const, STD)
    assert np.allclose(moved.x.samples[:, 0], 1.5 * np.exp(2j * np.pi * moved.x.t))
    assert np.allclose(moved.xi, -1.0)
    assert lengths(moved, STD)["twisted"] < 1e-10
    h = random_gauge(rng, 64)
    back = gauge_apply(h.inverse(), gauge_apply(h, pr, STD), STD)
    assert np.allclose(back.x.samples, pr.x.samples, atol=1e-12)
    assert np.allclose(back.xi, pr.xi, atol=1e-12)


def test_gauge_invariance_random():
    rng = np.random.default_rng(6)
    for _ in range(30):
        pr = perturbed_pair(rng, N=512, amp=0.002)
        assert lengths(pr, STD)["quotient"] < 0.1
        g = random_gauge(rng, 512)
        moved = gauge_apply(g, pr, STD)
        assert abs(invariant_action(moved, STD) - invariant_action(pr, STD)) <= 1e-6
        d = np.abs(norm(moved.twisted_derivative(STD)) - norm(pr.twisted_derivative(STD)))
        assert np.max(d) <= 1e-10
        assert np.allclose(norm(moment(STD, moved.x.samples)), norm(moment(STD, pr.x.samples)), rtol=0, atol=1e-12)
        assert abs(lengths(moved, STD)["quotient"] - lengths(pr, STD)["quotient"]) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gauge_invariance_two_torus(seed):
    rng = np.random.default_rng(seed)
    act = TorusAction([[1, 0], [1, 1]], [1.0, 2.0])
    pr = perturbed_pair(rng, N=256, z0=1.5, amp=0.005, act=act)
    g = random_gauge(rng, 256, k=2)
    moved = gauge_apply(g, pr, act)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AdmissibilityWarning)
        assert abs(invariant_action(moved, act) - invariant_action(pr, act)) <= 1e-6


def test_quadrature_convergence():
    # doubling N leaves the invariant action of a smooth loop unchanged to high accuracy
    def pair(N):
        t = np.arange(N) / N
        x = (2 + 0.01 * np.cos(2 * np.pi * t) + 0.01j * np.sin(4 * np.pi * t)) * np.exp(2j * np.pi * t)
        return PairLoop(DiscreteLoop(x), 0.2 + 0.1 * np.cos(2 * np.pi * t))

    vals = [invariant_action(pair(N), STD) for N in (64, 128, 256)]
    assert abs(vals[1] - vals[0]) < 1e-9 and abs(vals[2] - vals[1]) < 1e-9


# --- admissibility ----------------------------------------------------------


def test_admissibility_circle():
    rep = admissibility_check(DiscreteLoop.circle(2.0, 1, 512), STD)
    assert rep["passed"] and rep["candidate_length"] < 1e-10
    ident = [r for r in rep["competitors"] if r["kind"] == "winding" and r["label"] == [1]]
    assert ident and ident[0]["length"] == pytest.approx(4 * np.pi) and not ident[0]["admitted"]


def test_admissibility_constant_and_short():
    rep = admissibility_check(DiscreteLoop.constant([2.0], 64), STD)
    assert rep["passed"] and rep["max_residual"] == 0.0
    rng = np.random.default_rng(7)
    pr = perturbed_pair(rng, N=256, amp=0.003)
    assert lengths(pr, STD)["quotient"] < 0.1
    rep = admissibility_check(pr.x, STD)
    assert rep["passed"] and rep["n_admitted"] >= 1


# --- pullback identity ------------------------------------------------------


def _pullback_residual(n):
    s = np.linspace(0, 1, n)
    t = np.linspace(0, 1, n)
    S, T = np.meshgrid(s, t, indexing="ij")
    u = ((S + 1) * np.exp(2j * np.pi * T))[..., None]
    return pullback_identity_residual(u, (S * T)[..., None], STD)


def test_pullback_identity_order_two():
    r1, r2 = _pullback_residual(81), _pullback_residual(161)
    assert abs(np.log2(r1 / r2) - 2) <= 0.2


def test_pullback_identity_trivial_cases():
    s = np.linspace(0, 1, 21)
    S, T = np.meshgrid(s, s, indexing="ij")
    u = ((S + 1) * np.exp(2j * np.pi * T))[..., None]
    assert pullback_identity_residual(u, np.full(S.shape + (1,), 0.3), STD) < 1e-10
    assert pullback_identity_residual(np.full(S.shape + (1,), 1 + 1j), (S * T)[..., None], STD) < 1e-12
