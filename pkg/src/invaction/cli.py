"""
Command-line front end.

    invaction <subcommand> [--config FILE] [--out DIR] [--seed U64]
              [--format csv,json,svg] [--sharpness] [--k K] [--lambda L] [--smax S]

Exit status is 0 when every check of the requested suite passed, 1 on a
numerical failure and 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import platform
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
import scipy

from . import __version__
from .holonomy import StepSizeError, circle, constant_curvature_chart, holonomy_bound_scaling, random_smooth_chart
from .isoperimetric import (QUARTER_PI_INV, VerifierConfig, plot_margin_histogram, sharpness_witness, verify_batch,
                            write_report_csv)
from .lie_geom import TorusAction
from .loops import DiscreteLoop, PairLoop, UnderResolvedError, invariant_action, lengths
from .vortex import (ShootingError, decay_fit, embed_radial, energy_action_check, energy_decay_inequality,
                     holomorphic_witness, plot_decay, pointwise_bound_check, solve_radial, vortex_residual,
                     write_profile_csv)

SUBCOMMANDS = ("action", "isoperi", "holonomy", "vortex", "decay")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "action": {
        "delta": 0.1,
        "tolerance": 1e-6,
        "loops": [
            {"circle": {"r": 2.0, "degree": 1, "N": 512}, "expected": -3 * np.pi},
            {"circle": {"r": 0.5, "degree": 1, "N": 512}, "expected": 0.75 * np.pi},
            {"circle": {"r": 2.0, "degree": 3, "N": 512}, "expected": -9 * np.pi},
        ],
    },
    "isoperi": {"trials": 1000, "sharpness": False},
    "holonomy": {
        "family": "constant_curvature",
        "group": "quaternion",
        "B": 0.5,
        "N": 256,
        "amplitude": 1.0,
        "ratio_tolerance": 1e-6,
        "slope_tolerance": 0.1,
    },
    "vortex": {
        "k": 1, "lambda": 1.0, "s_max": 6.0, "rho0": 0.1, "step": 1e-3,
        "s_minus": 1.0, "s_plus": 3.0, "Ns": 256, "Nt": 256, "tolerance": 1e-4,
    },
    "decay": {
        "k": 1, "lambda": 1.0, "s_max": 6.0, "rho0": 0.1, "step": 1e-3,
        "window": [2.0, 4.0], "eps": 0.5, "slope_tolerance": 0.05,
        "witness_a": 1.0, "witness_window": [3.0, 6.0], "witness_tolerance": 0.01,
    },
}


class ConfigError(ValueError):
    pass


def _schema():
    return json.loads(resources.files("invaction").joinpath("schema/config.schema.json").read_text())


def load_config(path, subcommand):
    """Validate a configuration file and fill in defaults."""
    if path is None:
        cfg = {"subcommand": subcommand}
    else:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from exc
    if cfg["subcommand"] != subcommand:
        raise ConfigError(f"config is for '{cfg['subcommand']}', not '{subcommand}'")
    present = [name for name in SUBCOMMANDS if name in cfg]
    if any(name != subcommand for name in present):
        raise ConfigError(f"config holds blocks for {present}; exactly one block for '{subcommand}' is allowed")
    block = copy.deepcopy(DEFAULTS[subcommand])
    block.update(cfg.get(subcommand, {}))
    cfg = {"seed": 0, "out": ".", "formats": ["csv", "json", "svg"], **cfg, subcommand: block}
    return cfg


def _versions():
    return {"invaction": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _torus_action(block):
    return TorusAction.from_dict(block["torus_action"]) if "torus_action" in block else TorusAction.standard()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _plot_loglog(x, y, path, xlabel, ylabel):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "invaction"}):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.loglog(x, y, "o-")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


# ---------------------------------------------------------------------------
# subcommands; each returns (summary, checks) and writes its artifacts


def run_action(cfg, out, formats):
    block = cfg["action"]
    act = _torus_action(block)
    rows, checks = [], {}
    for i, entry in enumerate(block["loops"]):
        if "circle" in entry:
            c = entry["circle"]
            x = DiscreteLoop.circle(c["r"], c.get("degree", 1), c.get("N", 512), n=act.n)
            pair = PairLoop(x, np.full(act.k, c.get("xi", 0.0)))
        else:
            pair = PairLoop.from_dict(entry["pair"])
        ln = lengths(pair, act)
        A = invariant_action(pair, act, delta=np.inf)
        admissible = ln["quotient"] < block["delta"]
        rows.append((i, pair.N, float(A), float(ln["quotient"]), float(ln["twisted"]), int(admissible)))
        checks[f"loop{i}_admissible"] = bool(admissible)
        if "expected" in entry:
            checks[f"loop{i}_expected"] = bool(abs(A - entry["expected"]) <= block["tolerance"])
    if "csv" in formats:
        _write_csv(out / "action.csv", ["index", "N", "action", "quotient_length", "twisted_length", "admissible"], rows)
    summary = {"loops": [dict(zip(("index", "N", "action", "quotient_length", "twisted_length", "admissible"), r))
                         for r in rows]}
    return summary, checks


def run_isoperi(cfg, out, formats):
    block = dict(cfg["isoperi"])
    sharp = block.pop("sharpness", False)
    if "torus_action" in block:
        block["action"] = block.pop("torus_action")
    block["seed"] = cfg["seed"]
    try:
        vc = VerifierConfig.from_dict(block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    report = verify_batch(vc)
    checks = {"no_violations": report["n_violations"] == 0}
    summary = {k: report[k] for k in ("trials", "m_K", "c", "coefficient", "n_violations", "min_margin", "histogram")}
    summary["margins"] = [r["margin"] for r in report["rows"]]
    if "csv" in formats:
        write_report_csv(report, out / "isoperi.csv")
    if "svg" in formats:
        plot_margin_histogram(report, out / "margins.svg")
    if sharp:
        wit = sharpness_witness(vc.action)
        summary["sharpness"] = wit
        reduced = [r for r in wit["rows"] if r["case"] == "reduced_coefficient"]
        exact = [r for r in wit["rows"] if r["case"] == "sharp_constants"]
        checks["witness_violated_with_reduced_coefficient"] = all(r["margin"] < 0 for r in reduced)
        checks["witness_equality_with_sharp_constants"] = all(abs(r["margin"]) <= 1e-10 for r in exact)
        if "csv" in formats:
            _write_csv(out / "sharpness.csv", ["case", "p", "c", "coefficient", "lhs", "rhs", "margin"],
                       [(r["case"], r["p"], r["c"], r["coefficient"], r["lhs"], r["rhs"], r["margin"])
                        for r in wit["rows"]])
    return summary, checks


def run_holonomy(cfg, out, formats):
    block = cfg["holonomy"]
    if "radii" not in block:
        # the random family needs small loops to reach the quadratic regime
        block["radii"] = [0.5, 0.25, 0.1] if block["family"] == "constant_curvature" else [0.2, 0.1, 0.05, 0.025]
    radii = [float(r) for r in block["radii"]]
    loops = [circle((0.0, 0.0), r, block["N"]) for r in radii]
    checks = {}
    if block["family"] == "constant_curvature":
        conn = constant_curvature_chart(block["B"])
        res = holonomy_bound_scaling(conn, loops)
        target = QUARTER_PI_INV
        checks["ratio_quarter_pi"] = bool(np.all(np.abs(res["ratios"] - target) <= block["ratio_tolerance"]))
    else:
        conn = random_smooth_chart(cfg["seed"], group=block["group"], amplitude=block["amplitude"])
        res = holonomy_bound_scaling(conn, loops)
        checks["slope_two"] = bool(abs(res["slope"] - 2.0) <= block["slope_tolerance"])
    checks["bound_holds"] = bool(np.all(res["ratios"] <= QUARTER_PI_INV * (1 + 1e-9)))
    rows = [(r, float(ell), float(d), float(res["F_sup"]), float(q))
            for r, ell, d, q in zip(radii, res["lengths"], res["distances"], res["ratios"])]
    if "csv" in formats:
        _write_csv(out / "holonomy.csv", ["radius", "length", "distance", "F_sup", "ratio"], rows)
    if "svg" in formats:
        _plot_loglog(res["lengths"], np.maximum(res["distances"], 1e-300), out / "holonomy.svg", "length",
                     "d(1, hol)")
    summary = {"F_sup": float(res["F_sup"]), "slope": res["slope"], "ratios": [float(q) for q in res["ratios"]],
               "lengths": [float(v) for v in res["lengths"]], "distances": [float(v) for v in res["distances"]]}
    return summary, checks


def _profile(block):
    return solve_radial(block["k"], block["lambda"], block["s_max"], block["rho0"], step=block["step"])


def run_vortex(cfg, out, formats):
    block = cfg["vortex"]
    if not block["s_minus"] <= block["s_plus"] <= block["s_max"]:
        raise ConfigError("need s_minus <= s_plus <= s_max")
    act = TorusAction.standard()
    prof = _profile(block)
    s_nodes = np.linspace(block["s_minus"], block["s_plus"], block["Ns"])
    fields = embed_radial(prof, block["Nt"], s_nodes)
    res = vortex_residual(fields, act)
    ea = energy_action_check(fields, block["s_minus"], block["s_plus"], act)
    sg, ph = prof.evaluate(np.array([block["s_minus"], block["s_plus"]]))
    closed = prof.slice_action(sg, ph)
    tol = block["tolerance"]
    checks = {
        "energy_action_identity": ea["relative_error"] < tol,
        "closed_form_minus": abs(ea["action_minus"] - closed[0]) <= tol,
        "closed_form_plus": abs(ea["action_plus"] - closed[1]) <= tol,
        "slices_admissible": ea["admissible"],
    }
    summary = {
        "psi0": prof.info.get("psi0"),
        "psi0_shooting": prof.info.get("psi0_shooting"),
        "max_residual": [res["max_holomorphic"], res["max_curvature"]],
        "energy": ea["E"],
        "action_drop": ea["action_drop"],
        "relative_error": ea["relative_error"],
        "usual_form_error": ea["usual_form_error"],
        "closed_form": [float(v) for v in closed],
    }
    mid = 0.5 * (block["s_minus"] + block["s_plus"])
    if mid - 0.5 >= block["s_minus"] and mid + 0.5 <= block["s_plus"]:
        pb = pointwise_bound_check(fields, act, (mid, 0.0))
        summary["pointwise_bound"] = pb
        checks["pointwise_bound"] = pb["pass"]
    if "csv" in formats:
        write_profile_csv(prof, out / "profile.csv")
    if "json" in formats:
        (out / "profile.json").write_text(json.dumps(prof.to_dict(), default=float))
    if "svg" in formats:
        plot_decay(prof, out / "decay.svg")
    return summary, checks


def run_decay(cfg, out, formats):
    block = cfg["decay"]
    lam = block["lambda"]
    prof = _profile(block)
    fit = decay_fit(prof, tuple(block["window"]))
    expected = -4 * np.pi * lam
    ineq = energy_decay_inequality(prof, block["eps"])
    wa = block["witness_a"]
    ws = np.linspace(block["witness_window"][0], block["witness_window"][1], 61)
    wit = holomorphic_witness(wa, ws)
    w_expected = -2 * np.pi / wa
    def rel(v, e):
        return abs(v / e - 1.0)

    tol = block["slope_tolerance"]
    checks = {
        "density_slope": rel(fit["density_slope"], expected) <= tol,
        "energy_slope": rel(fit["energy_slope"], expected) <= tol,
        "slope_within_bound": fit["density_slope"] <= -4 * np.pi + block["eps"],
        "differential_inequality": ineq["holds"],
        "witness_slope": rel(wit["slope"], w_expected) <= block["witness_tolerance"],
    }
    rows = [
        ("density_slope", fit["density_slope"], expected, rel(fit["density_slope"], expected)),
        ("energy_slope", fit["energy_slope"], expected, rel(fit["energy_slope"], expected)),
        ("witness_slope", wit["slope"], w_expected, rel(wit["slope"], w_expected)),
        ("min_decay_rate", ineq["rate_min"], 4 * np.pi - block["eps"], ineq["min_slack_ratio"]),
    ]
    if "csv" in formats:
        _write_csv(out / "decay.csv", ["quantity", "fitted", "expected", "relative_error"],
                   [(q, float(a), float(b), float(c)) for q, a, b, c in rows])
        write_profile_csv(prof, out / "profile.csv")
    if "svg" in formats:
        plot_decay(prof, out / "decay.svg", witness_a=wa)
    summary = {"fit": fit, "inequality": ineq, "witness_slope": wit["slope"], "expected_slope": expected}
    return summary, checks


RUNNERS = {"action": run_action, "isoperi": run_isoperi, "holonomy": run_holonomy, "vortex": run_vortex,
           "decay": run_decay}


def build_parser():
    parser = argparse.ArgumentParser(prog="invaction", description="Invariant action verification experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="64-bit unsigned seed")
        p.add_argument("--format", help="comma-separated subset of csv,json,svg")
        if name == "isoperi":
            p.add_argument("--sharpness", action="store_true", help="also evaluate the sharpness witnesses")
        if name in ("vortex", "decay"):
            p.add_argument("--k", type=int, dest="k_deg")
            p.add_argument("--lambda", type=float, dest="lam")
            p.add_argument("--smax", type=float)
    return parser


def _apply_overrides(cfg, args):
    name = args.subcommand
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    if args.format is not None:
        fmts = [f.strip() for f in args.format.split(",") if f.strip()]
        if any(f not in ("csv", "json", "svg") for f in fmts):
            raise ConfigError(f"unknown format in {args.format!r}")
        cfg["formats"] = fmts
    if getattr(args, "sharpness", False):
        cfg[name]["sharpness"] = True
    for attr, key in (("k_deg", "k"), ("lam", "lambda"), ("smax", "s_max")):
        val = getattr(args, attr, None)
        if val is not None:
            cfg[name][key] = val
    jsonschema.validate({k: v for k, v in cfg.items()}, _schema())
    return cfg


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not serialisable: {type(obj)}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.subcommand)
        cfg = _apply_overrides(cfg, args)
    except (ConfigError, jsonschema.ValidationError) as exc:
        print(f"config error: {getattr(exc, 'message', exc)}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    formats = cfg["formats"]
    report = {"subcommand": args.subcommand, "config": cfg, "versions": _versions()}
    try:
        summary, checks = RUNNERS[args.subcommand](cfg, out, formats)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ShootingError, StepSizeError, UnderResolvedError, FloatingPointError, np.linalg.LinAlgError) as exc:
        report.update({"passed": False, "error": f"{type(exc).__name__}: {exc}"})
        if "json" in formats:
            (out / "report.json").write_text(json.dumps(report, default=_json_default, indent=1))
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    checks = {k: bool(v) for k, v in checks.items()}
    passed = all(checks.values())
    report.update({"passed": passed, "checks": checks, "summary": summary})
    if "json" in formats:
        (out / "report.json").write_text(json.dumps(report, default=_json_default, indent=1))
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if passed else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
