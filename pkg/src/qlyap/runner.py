"""Batch execution, outcome classification, reporting.

A scenario run simulates each configured initial state, writes one CSV
(trajectory schema) and one JSON state-snapshot sidecar per run, then a
single analysis.json / summary.json / summary.txt.  Outcomes are
classified against fixed thresholds (echoed into every report header):

  converged_to_target          final-window mean V below V_TARGET_TOL
  converged_to_other_critical_point
                               final state within CRIT_POINT_TOL of a
                               freely-evolved non-identity permutation state
  converged_to_orbit           final-window mean orbit distance below
                               ORBIT_TOL while V stays up
  non_convergent               none of the above

evaluated in that order.  Runs are independent; the batch runner executes
them on a thread pool (the compiled stepping loop releases the GIL) and
all outputs are deterministic functions of config + seeds.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from qlyap import bloch, config as config_mod, dynamics, hamiltonians, invariance, linalg

V_TARGET_TOL = 1e-4
ORBIT_TOL = 1e-3
CRIT_POINT_TOL = 1e-3
FINAL_WINDOW_FRACTION = 0.1

THRESHOLDS = {
    "v_target_tol": V_TARGET_TOL,
    "orbit_tol": ORBIT_TOL,
    "critical_point_tol": CRIT_POINT_TOL,
    "final_window_fraction": FINAL_WINDOW_FRACTION,
}


@dataclass
class RunReport:
    run_id: str
    seed: int | None
    v_initial: float | None = None
    v_final: float | None = None
    v_max: float | None = None
    min_dist_target: float | None = None
    final_dist_orbit: float | None = None
    classification: str = "failed"
    error: str | None = None

    def to_json(self):
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "v_initial": self.v_initial,
            "v_final": self.v_final,
            "v_max": self.v_max,
            "min_dist_target": self.min_dist_target,
            "final_dist_orbit": self.final_dist_orbit,
            "classification": self.classification,
            "error": self.error,
        }


def _perm_states(system):
    """Distinct non-identity permutation states of the target spectrum, in
    the target's eigenbasis (the candidate limit points besides the target)."""
    w, u = linalg.herm_eig(system.target0)
    seen = set()
    out = []
    if w.size > 6:
        return out
    for perm in permutations(range(w.size)):
        key = tuple(round(float(w[i]), 12) for i in perm)
        if key in seen:
            continue
        seen.add(key)
        if perm == tuple(range(w.size)):
            continue
        state = linalg.hermitize(u @ np.diag(w[list(perm)]).astype(complex) @ u.conj().T)
        out.append(state)
    return out


def classify_run(traj, system, orbit, perm_states):
    """(classification, diagnostics dict) for one finished trajectory."""
    fw = traj.final_window(FINAL_WINDOW_FRACTION)
    fv = float(np.mean(traj.vs[fw]))
    s_rows = np.einsum("aij,tji->ta", orbit.basis.elements, traj.rhos[fw]).real
    dist_orbit = float(np.mean(orbit.distances(s_rows)))
    diag = {
        "v_final": fv,
        "final_dist_orbit": dist_orbit,
        "min_dist_target": float(math.sqrt(max(2.0 * float(np.min(traj.vs)), 0.0))),
    }
    if fv < V_TARGET_TOL:
        return "converged_to_target", diag
    if perm_states:
        t_final = float(traj.times[-1])
        u0 = linalg.expm_skew(system.h0.matrix, t_final)
        d = min(
            float(np.linalg.norm(traj.rhos[-1] - u0 @ p @ u0.conj().T)) for p in perm_states
        )
        diag["min_dist_critical"] = d
        if d < CRIT_POINT_TOL:
            return "converged_to_other_critical_point", diag
    if dist_orbit < ORBIT_TOL:
        return "converged_to_orbit", diag
    return "non_convergent", diag


def run_scenario(cfg, out_dir, jobs=1):
    """Execute a validated ScenarioConfig; returns (reports, analysis dict).

    Writes per-run artifacts plus analysis.json / summary.json /
    summary.txt under ``out_dir``.  A failed run (integration abort) is
    reported and does not stop the batch.
    """
    os.makedirs(out_dir, exist_ok=True)
    system, perm = config_mod.build_system(cfg)
    basis = bloch.build_basis(system.dim)
    orbit = dynamics.FreeOrbit(system, basis, n_samples=cfg.orbit_samples)
    perm_states = _perm_states(system)
    runs = config_mod.build_initial_states(cfg, system, perm)
    v_max = dynamics.v_max_value(system.target0)

    def one(item):
        index, (label, seed, rho0) = item
        run_id = f"{cfg.name}-{index:03d}-{label}"
        report = RunReport(run_id=run_id, seed=seed, v_max=v_max)
        try:
            traj = dynamics.simulate(
                system, rho0, cfg.horizon, dt=cfg.dt, record_stride=cfg.record_stride
            )
        except RuntimeError as exc:
            report.error = str(exc)
            return report
        report.v_initial = float(traj.vs[0])
        cls, diag = classify_run(traj, system, orbit, perm_states)
        report.classification = cls
        report.v_final = diag["v_final"]
        report.final_dist_orbit = diag["final_dist_orbit"]
        report.min_dist_target = diag["min_dist_target"]
        dynamics.write_trajectory_csv(traj, os.path.join(out_dir, run_id + ".csv"), orbit, basis)
        dynamics.write_snapshots_json(
            traj, os.path.join(out_dir, run_id + ".states.json"), cfg.snapshot_stride
        )
        return report

    items = list(enumerate(runs))
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(one, items))
    else:
        reports = [one(item) for item in items]

    analysis = analyze_scenario(cfg, system, basis, runs, jobs=jobs)
    write_json(analysis, os.path.join(out_dir, "analysis.json"))

    summary = summarize(reports, cfg, analysis)
    write_json(summary, os.path.join(out_dir, "summary.json"))
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(format_summary_text(summary))
    return reports, analysis


def analyze_scenario(cfg, system, basis, runs=None, jobs=1):
    """Machine-readable analysis block: system facts, regularity test,
    critical-point table, invariant residuals, attraction search."""
    v_max, v_max_paper = dynamics.v_max_forms(system.target0)
    out = {
        "thresholds": dict(THRESHOLDS),
        "v_max": v_max,
        "v_max_sum_of_squares_form": v_max_paper,
        "system": {
            "dim": system.dim,
            "levels": [float(x) for x in system.h0.levels],
            "strongly_regular": hamiltonians.is_strongly_regular(system.h0),
            "fully_connected": hamiltonians.is_fully_connected(system.h1),
            "ideal": system.is_ideal(),
            "transition_frequencies": {
                f"{k},{l}": w
                for (k, l), w in sorted(hamiltonians.transition_frequencies(system.h0).items())
            },
            "kappa": system.kappa,
        },
    }
    acfg = cfg.analysis
    if acfg.get("target_regularity", True):
        reg = bloch.target_regularity(system.target0, basis)
        out["target_regularity"] = {
            "has_equal_diagonals": reg.has_equal_diagonals,
            "det_tilde": reg.det_tilde,
            "det_threshold": reg.det_threshold,
            "is_regular": reg.is_regular,
        }
    if acfg.get("critical_points", False):
        try:
            pts, counts = invariance.classify_all(system, basis)
            out["critical_points"] = [
                {
                    "permutation": list(p.permutation),
                    "diagonal": [float(x) for x in np.diag(p.state).real],
                    "v_value": p.v_value,
                    "eigenvalues": [[z.real, z.imag] for z in p.jacobian_spectrum],
                    "classification": p.classification,
                    "is_target": p.is_target,
                    "is_global_max": p.is_global_max,
                }
                for p in pts
            ]
            out["classification_counts"] = counts
            eigs, cls = invariance.target_linearization(system, basis)
            out["target_linearization"] = {
                "eigenvalues": [[z.real, z.imag] for z in eigs],
                "classification": cls,
                "min_abs_re": float(np.min(np.abs(np.asarray(eigs).real))),
            }
        except ValueError as exc:
            out["critical_points_skipped"] = str(exc)
    if acfg.get("invariant_residuals", False) and runs:
        label, _, rho0 = runs[0]
        rep = invariance.trace_conditions(rho0, system.target0, system, m_max=acfg.get("m_max"))
        out["invariant_report"] = {
            "pair": label,
            "residuals": list(rep.residuals),
            "is_member": rep.is_member,
            "commutator_diagonal": rep.commutator_diagonal,
            "commutator_zero": rep.commutator_zero,
            "m_max": rep.m_max,
            "tol": rep.tol,
        }
        if system.is_ideal():
            out["invariant_report"]["ideal_membership"] = invariance.ideal_membership(
                rho0, system.target0, system
            )
    if acfg.get("saddle_index") is not None:
        search = invariance.unstable_attraction_search(
            system,
            int(acfg["saddle_index"]),
            int(acfg.get("trials", 50)),
            seed=int(cfg.initial_spec.get("seed_base", 1000)),
            horizon=float(acfg.get("attraction_horizon", 400.0)),
            dt=cfg.dt,
            jobs=jobs,
        )
        out["attraction_search"] = {
            "saddle_index": search.saddle_index,
            "saddle_level": search.saddle_level,
            "saddle_max_field": search.saddle_max_field,
            "n_to_target": search.n_to_target,
            "trials": [
                {
                    "seed": t.seed,
                    "v_initial": t.v_initial,
                    "v_final": t.v_final,
                    "outcome": t.outcome,
                }
                for t in search.trials
            ],
        }
    return out


def summarize(reports, cfg=None, analysis=None):
    """Aggregate classification counts and the V-plateau histogram."""
    counts = {}
    for r in reports:
        counts[r.classification] = counts.get(r.classification, 0) + 1
    v_max = next((r.v_max for r in reports if r.v_max is not None), None)
    hist = None
    finals = [r.v_final for r in reports if r.v_final is not None]
    if finals and v_max:
        edges = [i * v_max / 12.0 for i in range(13)]
        binned = [0] * 12
        for v in finals:
            idx = min(11, max(0, int(v / v_max * 12.0)))
            binned[idx] += 1
        hist = {"edges": edges, "counts": binned}
    summary = {
        "thresholds": dict(THRESHOLDS),
        "n_runs": len(reports),
        "classification_counts": counts,
        "v_final_histogram": hist,
        "runs": [r.to_json() for r in reports],
    }
    if cfg is not None:
        summary["config"] = cfg.echo
    if analysis is not None:
        summary["v_max"] = analysis.get("v_max")
        summary["v_max_sum_of_squares_form"] = analysis.get("v_max_sum_of_squares_form")
        if "classification_counts" in analysis:
            summary["critical_point_counts"] = analysis["classification_counts"]
    return summary


def format_summary_text(summary):
    """Human-readable rendering of a summary dict."""
    lines = []
    cfgname = summary.get("config", {}).get("name", "scenario")
    lines.append(f"scenario: {cfgname}")
    desc = summary.get("config", {}).get("description")
    if desc:
        lines.append(desc)
    th = summary["thresholds"]
    lines.append(
        "thresholds: V_target_tol=%g orbit_tol=%g critical_point_tol=%g final_window=%g"
        % (
            th["v_target_tol"],
            th["orbit_tol"],
            th["critical_point_tol"],
            th["final_window_fraction"],
        )
    )
    if summary.get("v_max") is not None:
        lines.append(
            "V_max (computed over permutation states): %.6g   "
            "sum-of-squares form: %.6g" % (summary["v_max"], summary["v_max_sum_of_squares_form"])
        )
    lines.append(f"runs: {summary['n_runs']}")
    for cls, cnt in sorted(summary["classification_counts"].items()):
        lines.append(f"  {cls}: {cnt}")
    if summary.get("critical_point_counts"):
        lines.append("critical points: " + json.dumps(summary["critical_point_counts"], sort_keys=True))
    runs = summary.get("runs", [])
    if runs:
        lines.append("")
        lines.append(f"{'run_id':40s} {'seed':>8s} {'V_initial':>12s} {'V_final':>12s} {'d_orbit':>12s}  class")
        for r in runs:
            lines.append(
                "%-40s %8s %12s %12s %12s  %s"
                % (
                    r["run_id"],
                    "-" if r["seed"] is None else r["seed"],
                    _fmt(r["v_initial"]),
                    _fmt(r["v_final"]),
                    _fmt(r["final_dist_orbit"]),
                    r["classification"] + (f" ({r['error']})" if r["error"] else ""),
                )
            )
    return "\n".join(lines) + "\n"


def _fmt(x):
    return "-" if x is None else "%.4e" % x


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path):
    """Canonical JSON writing: sorted keys, fixed indentation, newline EOF.
    Identical inputs produce identical bytes."""
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, sort_keys=True, indent=1)
        fh.write("\n")
