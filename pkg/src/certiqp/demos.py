"""Runnable application scenarios behind the ``demo`` CLI command.

Both demos emit deterministic CSV (given the seed) so the outputs can be
plotted or diffed directly.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .apps.mpc import afti16_setup, simulate_closed_loop
from .apps.rkf import KfState, kf_predict, kf_update, rkf_update, rms_error, three_tank_setup
from .problem import SolverOptions

__all__ = ["run_mpc_demo", "run_rkf_demo", "run_three_tank"]


def run_mpc_demo(steps: int = 60, opts: SolverOptions | None = None) -> tuple[str, dict]:
    """Closed-loop aircraft demo from the infeasible start x0 = [0, 5, 0, 0]."""
    model, cfg = afti16_setup()
    x0 = np.array([0.0, 5.0, 0.0, 0.0])
    traj = simulate_closed_loop(model, cfg, x0, None, steps, opts)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x1", "x2", "x3", "x4", "y1", "y2", "u1", "u2",
                "r2", "gap", "iters", "rank1"])
    for t in range(steps):
        w.writerow([f"{model.Ts * (t + 1):.17g}",
                    *(f"{v:.17g}" for v in traj.states[t + 1]),
                    *(f"{v:.17g}" for v in traj.outputs[t]),
                    *(f"{v:.17g}" for v in traj.inputs[t]),
                    f"{traj.references[t][1]:.17g}",
                    f"{traj.gaps[t]:.17g}", traj.iterations[t], traj.rank1[t]])
    summary = {
        "boxqp_n": traj.boxqp_n,
        "max_abs_u": float(np.max(np.abs(traj.inputs))),
        "final_y1": float(traj.outputs[-1, 0]),
        "final_y2": float(traj.outputs[-1, 1]),
    }
    return buf.getvalue(), summary


def run_three_tank(
    seed: int,
    steps: int = 60,
    rho_rkf: float | None = None,
    opts: SolverOptions | None = None,
    outlier_prob: float = 0.05,
    outlier_scale: float = 10.0,
) -> dict:
    """One seeded three-tank run: truth, measurements with sparse outliers,
    and both the standard and the robust filter estimates."""
    model, cfg = three_tank_setup()
    if rho_rkf is not None:
        cfg = type(cfg)(Qn=cfg.Qn, Rn=cfg.Rn, rho_rkf=rho_rkf)
    rng = np.random.default_rng(seed)
    nx, ny = model.nx, model.ny
    sq = np.sqrt(np.diag(cfg.Qn))
    sr = np.sqrt(np.diag(cfg.Rn))

    x = np.zeros(nx)
    kf = KfState(xhat=np.zeros(nx), P=0.1 * np.eye(nx))
    rkf = KfState(xhat=np.zeros(nx), P=0.1 * np.eye(nx))

    truth = np.zeros((steps, nx))
    est_kf = np.zeros((steps, nx))
    est_rkf = np.zeros((steps, nx))
    inputs = np.zeros(steps)
    gaps = np.zeros(steps)
    iters = np.zeros(steps, dtype=int)
    rank1 = np.zeros(steps, dtype=int)
    outliers = np.zeros((steps, ny))

    for t in range(steps):
        u = np.array([0.5 + 0.5 * np.sin(0.1 * t)])
        w_noise = sq * rng.standard_normal(nx)
        v_noise = sr * rng.standard_normal(ny)
        hit = rng.random(ny) < outlier_prob
        spike = np.where(hit, outlier_scale * sr * rng.choice((-1.0, 1.0), ny), 0.0)

        x = model.A @ x + (model.B @ u) + w_noise
        y = model.C @ x + v_noise + spike

        kf = kf_predict(kf, model, u, cfg)
        kf = kf_update(kf, y, model, cfg)
        rkf = kf_predict(rkf, model, u, cfg)
        rkf, zhat, sol = rkf_update(rkf, y, model, cfg, opts, return_details=True)

        truth[t] = x
        est_kf[t] = kf.xhat
        est_rkf[t] = rkf.xhat
        inputs[t] = u[0]
        outliers[t] = spike
        if sol is not None:
            gaps[t] = sol.duality_gap
            iters[t] = sol.iterations_run
            rank1[t] = sol.rank1_used

    return {
        "truth": truth, "kf": est_kf, "rkf": est_rkf, "inputs": inputs,
        "outliers": outliers, "gaps": gaps, "iters": iters, "rank1": rank1,
        "rms_kf": rms_error(truth, est_kf), "rms_rkf": rms_error(truth, est_rkf),
    }


def run_rkf_demo(steps: int = 60, seed: int = 0,
                 opts: SolverOptions | None = None) -> tuple[str, dict]:
    """Three-tank outlier-rejection demo; CSV ends with RMS summary rows."""
    run = run_three_tank(seed, steps, opts=opts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t", "x1_true", "x2_true", "x3_true", "x1_kf", "x2_kf", "x3_kf",
              "x1_rkf", "x2_rkf", "x3_rkf", "u", "gap", "iters", "rank1"]
    w.writerow(header)
    for t in range(steps):
        w.writerow([t + 1,
                    *(f"{v:.17g}" for v in run["truth"][t]),
                    *(f"{v:.17g}" for v in run["kf"][t]),
                    *(f"{v:.17g}" for v in run["rkf"][t]),
                    f"{run['inputs'][t]:.17g}", f"{run['gaps'][t]:.17g}",
                    run["iters"][t], run["rank1"][t]])
    # summary footer rows, one per filter, padded to the header width
    pad = [""] * (len(header) - 4)
    w.writerow(["rms_kf", *(f"{v:.17g}" for v in run["rms_kf"]), *pad])
    w.writerow(["rms_rkf", *(f"{v:.17g}" for v in run["rms_rkf"]), *pad])
    summary = {
        "rms_kf": [float(v) for v in run["rms_kf"]],
        "rms_rkf": [float(v) for v in run["rms_rkf"]],
    }
    return buf.getvalue(), summary
