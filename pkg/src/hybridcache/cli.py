"""Command-line driver: ``hybridcache {solve,reproduce-figs,regimes,simulate,compare}``.

Exit codes: 0 success, 1 other error, 2 infeasible instance,
3 non-convergence, 4 figure-regression failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import scaling
from .config import ExperimentConfig, load_config
from .errors import InfeasibleInstance, MissingExponents, NonConvergence, NotApplicable
from .figures import REFERENCE_SETS, compare_to_reference, plateau_run
from .params import Allocation
from .sim import distance_slope, run_experiment
from .sim.checks import frozen_hop_check
from .solver import baseline_combination, solve_joint

EXIT_OK, EXIT_OTHER, EXIT_INFEASIBLE, EXIT_NONCONV, EXIT_FIGURES = 0, 1, 2, 3, 4


# ---- output helpers ---------------------------------------------------------------

def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _cell(x):
    x = _num(x)
    return repr(x) if isinstance(x, float) else str(x)


def write_table(out: Path, stem: str, columns, rows, fmt: str) -> Path:
    """Write ``rows`` with fixed ``columns`` as CSV or as JSON records."""
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out / f"{stem}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([_cell(v) for v in r])
    else:
        path = out / f"{stem}.json"
        recs = [{c: _num(v) for c, v in zip(columns, r)} for r in rows]
        path.write_text(json.dumps({"columns": list(columns), "rows": recs}, indent=1) + "\n",
                        encoding="utf-8")
    return path


def write_summary(out: Path, stem: str, data: dict, fmt: str) -> Path:
    if fmt == "csv":
        return write_table(out, stem, ("key", "value"), sorted(data.items()), fmt)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.json"
    path.write_text(json.dumps({k: _num(v) for k, v in data.items()}, indent=1,
                               sort_keys=True) + "\n", encoding="utf-8")
    return path


def _tag(alpha: float) -> str:
    return f"alpha{alpha:g}"


# ---- commands ---------------------------------------------------------------------

def _solve_summary(sol) -> dict:
    c = sol.certificate
    a = sol.allocation
    return {"case": c.case, "lambda_node": c.lambda_node, "mu_sbs": c.mu_sbs,
            "kkt_residual": c.kkt_residual, "objective": sol.objective.value,
            "node_replicas": float(a.a.sum()), "sbs_replicas": float(a.b.sum())}


def cmd_solve(cfg: ExperimentConfig, out: Path) -> int:
    for alpha in cfg.alphas:
        params = cfg.params_for(alpha)
        sol = solve_joint(params, tie_split=cfg.tie_split)
        a = sol.allocation
        p = params.zipf.probabilities
        rows = [(m + 1, a.a[m], a.b[m], a.t[m], p[m]) for m in range(params.M)]
        write_table(out, f"solve_{_tag(alpha)}", ("m", "A_m", "B_m", "t_m", "p_m"), rows, cfg.format)
        write_summary(out, f"solve_{_tag(alpha)}_summary", dict(alpha=alpha, **_solve_summary(sol)),
                      cfg.format)
    return EXIT_OK


def cmd_reproduce_figs(cfg: ExperimentConfig, out: Path) -> int:
    sols = {}
    for alpha in sorted({a for a, _ in REFERENCE_SETS.values()}):
        sols[alpha] = solve_joint(cfg.params_for(alpha), tie_split=cfg.tie_split).allocation
    for name, alpha in (("fig4a", 0.55), ("fig4b", 1.2)):
        a = sols[alpha]
        write_table(out, name, ("m", "t_m"), [(m + 1, a.t[m]) for m in range(len(a))], cfg.format)
    for name, alpha in (("fig5a", 0.55), ("fig5b", 1.2)):
        a = sols[alpha]
        write_table(out, name, ("m", "A_m", "B_m"),
                    [(m + 1, a.a[m], a.b[m]) for m in range(len(a))], cfg.format)
    checks = [compare_to_reference(n, sols[al], cfg.tolerance) for n, (al, _) in REFERENCE_SETS.items()]
    rows = [(c.dataset, c.alpha, c.points, c.max_rel_dev, c.worst_m, c.failing_points, c.passed)
            for c in checks]
    write_table(out, "figure_report",
                ("dataset", "alpha", "points", "max_rel_dev", "worst_m", "failing_points", "passed"),
                rows, cfg.format)
    run = plateau_run(sols[1.2].t, 49.0, 51.0, must_contain=range(10, 15))
    write_summary(out, "fig4b_plateau", {
        "lo": 49.0, "hi": 51.0,
        "first_m": run[0] if run else -1, "last_m": run[1] if run else -1,
        "contains_10_to_14": run is not None}, cfg.format)
    for c in checks:
        status = "ok" if c.passed else "FAIL"
        print(f"{c.dataset:8s} alpha={c.alpha:<5g} max rel dev {c.max_rel_dev:.4f} "
              f"(m={c.worst_m}, {c.failing_points}/{c.points} beyond {cfg.tolerance:g}) {status}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FIGURES


def cmd_regimes(cfg: ExperimentConfig, out: Path) -> int:
    p = cfg.params
    if not p.has_exponents:
        raise MissingExponents("regime map needs gamma, beta and delta")
    g, b = p.gamma, p.beta
    alphas = np.round(np.linspace(0.05, 2.0, 40), 6)
    lo = max(1.0 - b, 0.0)
    deltas = np.round(np.linspace(lo, 0.99, 25), 6)
    rows = []
    for d in deltas:
        for a in alphas:
            e = scaling.Exponents(float(a), g, b, float(d))
            rep = scaling.classify_regime(e)
            rows.append((float(a), float(d), rep.regime, float(rep.b_exponent)))
    write_table(out, "regimes", ("alpha", "delta", "regime", "b"), rows, cfg.format)
    bounds = []
    for d in deltas:
        e = scaling.Exponents(1.0, g, b, float(d))
        bounds.append((float(d), float(scaling.regime_boundary(e)), 1.5,
                       float(scaling.case_boundary(e)), float(scaling.comparison_threshold(e))))
    write_table(out, "regime_boundaries",
                ("delta", "alpha_II_lower", "alpha_I_lower", "alpha_case1", "alpha_compare"),
                bounds, cfg.format)
    per_alpha = []
    for a in cfg.alphas:
        rep = scaling.classify_regime(cfg.params_for(a))
        per_alpha.append((a, rep.regime, rep.b_exponent, rep.m1_exponent, rep.m2_exponent,
                          rep.m4_exponent))
    write_table(out, "regimes_config", ("alpha", "regime", "b", "m1_exp", "m2_exp", "m4_exp"),
                per_alpha, cfg.format)
    return EXIT_OK


def _read_allocation(path: Path, M: int) -> Allocation:
    with path.open(encoding="utf-8") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    a = np.zeros(M)
    b = np.zeros(M)
    for r in rows:
        m = int(r["m"])
        a[m - 1] = float(r["A_m"])
        b[m - 1] = float(r["B_m"])
    return Allocation(a, b)


def cmd_simulate(cfg: ExperimentConfig, out: Path, allocation: Path | None = None,
                 workers: int = 1) -> int:
    marker = out / "SIMULATION_INCOMPLETE"
    out.mkdir(parents=True, exist_ok=True)
    marker.write_text("simulation did not finish\n", encoding="utf-8")
    for alpha in cfg.alphas:
        sc = cfg.sim_for(alpha)
        if allocation is not None:
            alloc = _read_allocation(allocation, sc.params.M)
        else:
            alloc = solve_joint(sc.params, tie_split=cfg.tie_split).allocation
        o = run_experiment(alloc, sc, workers=workers)
        rows = [(m + 1, o.per_content_requests[m], o.per_content_mean_delay[m],
                 o.per_content_mean_hops[m], o.per_content_mean_initial_distance[m])
                for m in range(sc.params.M)]
        write_table(out, f"simulate_{_tag(alpha)}",
                    ("m", "requests", "mean_delay_slots", "mean_hops", "mean_initial_distance"),
                    rows, cfg.format)
        write_table(out, f"simulate_{_tag(alpha)}_hops", ("hops", "count"),
                    list(enumerate(o.hop_histogram)), cfg.format)
        write_summary(out, f"simulate_{_tag(alpha)}_summary", {
            "alpha": alpha, "mean_delay_slots": o.mean_delay_slots,
            "delay_stderr": o.delay_stderr, "max_cell_load": o.max_cell_load,
            "load_per_request": o.load_per_request,
            "achieved_throughput": o.achieved_throughput,
            "throughput_stderr": o.throughput_stderr, "completed": o.completed,
            "horizon_exceeded": o.horizon_exceeded, "trials": o.trials}, cfg.format)
    slope, means = distance_slope(seed=cfg.seed)
    hop = frozen_hop_check(seed=cfg.seed)
    write_summary(out, "simulate_checks", {
        "closest_holder_slope": slope, "closest_holder_expected": -0.5,
        "closest_holder_mean_r4": means[0], "closest_holder_mean_r256": means[-1],
        "frozen_pairs": hop.pairs, "frozen_max_abs_hop_deviation": hop.max_abs_hop_deviation,
        "frozen_max_abs_delay_deviation": hop.max_abs_delay_deviation}, cfg.format)
    marker.unlink()
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, out: Path) -> int:
    rows = []
    for alpha in cfg.alphas:
        params = cfg.params_for(alpha)
        joint = solve_joint(params, tie_split=cfg.tie_split)
        _, base = baseline_combination(params)
        try:
            verdict = scaling.compare_strategies(params)
        except (MissingExponents, NotApplicable) as exc:
            verdict = f"n/a ({type(exc).__name__})"
        ratio = base.value / joint.objective.value
        rows.append((alpha, joint.objective.value, base.value, ratio, verdict))
        print(f"alpha={alpha:g}: joint {joint.objective.value:.6g}, baseline {base.value:.6g}, "
              f"ratio {ratio:.4f}, asymptotic verdict {verdict}")
    write_table(out, "compare", ("alpha", "objective_joint", "objective_baseline", "ratio",
                                 "verdict"), rows, cfg.format)
    return EXIT_OK


# ---- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file overriding the bundled defaults")
    common.add_argument("--alpha", type=float, action="append",
                        help="Zipf exponent (repeatable; replaces the config list)")
    common.add_argument("--seed", type=int, help="master random seed")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--format", choices=("csv", "json"), help="table format")
    common.add_argument("--tolerance", type=float, help="figure-regression relative tolerance")
    ap = argparse.ArgumentParser(prog="hybridcache", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="optimal replica counts per alpha")
    sub.add_parser("reproduce-figs", parents=[common], help="reference figure datasets + gate")
    sub.add_parser("regimes", parents=[common], help="regime map over (alpha, delta)")
    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo network simulation")
    s.add_argument("--allocation", type=Path, help="CSV with columns m,A_m,B_m")
    s.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    sub.add_parser("compare", parents=[common], help="joint vs separately optimised caches")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    changes = {"outputs": args.out}
    if args.alpha:
        changes["alphas"] = tuple(args.alpha)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.format:
        changes["format"] = args.format
    if args.tolerance is not None:
        changes["tolerance"] = args.tolerance
    return cfg.with_(**changes)


def _error(out: Path, exc: Exception, code: int) -> int:
    try:
        out.mkdir(parents=True, exist_ok=True)
        rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        residual = getattr(exc, "residual", None)
        if residual is not None:
            rec["residual"] = float(residual)
        (out / "error.json").write_text(json.dumps(rec, sort_keys=True) + "\n", encoding="utf-8")
    except OSError:
        pass
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        cfg = _config_from_args(args)
        if args.command == "solve":
            return cmd_solve(cfg, out)
        if args.command == "reproduce-figs":
            return cmd_reproduce_figs(cfg, out)
        if args.command == "regimes":
            return cmd_regimes(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.allocation, args.workers)
        if args.command == "compare":
            return cmd_compare(cfg, out)
    except InfeasibleInstance as exc:
        return _error(out, exc, EXIT_INFEASIBLE)
    except NonConvergence as exc:
        return _error(out, exc, EXIT_NONCONV)
    except Exception as exc:  # noqa: BLE001 - every other failure maps to exit code 1
        return _error(out, exc, EXIT_OTHER)
    return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
