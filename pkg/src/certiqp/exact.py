"""Exact-Newton feasible interior-point solver.

One fresh Cholesky factorization per iteration, full unit steps, and a
fixed iteration count known before the first iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .certificate import alg1_constants, iteration_count
from .errors import NotPositiveDefinite
from .problem import (
    AuditRow,
    BoxQP,
    Iterate,
    ScaledProblem,
    Solution,
    SolverOptions,
    TraceRow,
    initialize,
    neighborhood_ratio,
    scale,
    validate,
)

__all__ = ["Direction", "exact_direction", "solve_exact"]


@dataclass(frozen=True)
class Direction:
    """Full primal-dual step; dphi == -dz and dpsi == dz by construction."""

    dz: np.ndarray
    dgamma: np.ndarray
    dtheta: np.ndarray

    @property
    def dphi(self) -> np.ndarray:
        return -self.dz

    @property
    def dpsi(self) -> np.ndarray:
        return self.dz


def exact_direction(it: Iterate, sp: ScaledProblem) -> Direction:
    """Newton direction from the condensed n-by-n system.

    (2*lam*Htilde + diag(gamma/phi) + diag(theta/psi)) dz
        = tau/psi - tau/phi + gamma - theta
    """
    a = sp.two_lam_Htilde.copy()
    gp = it.gamma / it.phi
    tp = it.theta / it.psi
    a[np.diag_indices_from(a)] += gp + tp
    rhs = it.tau / it.psi - it.tau / it.phi + it.gamma - it.theta
    try:
        fac = sla.cho_factor(a, lower=True, overwrite_a=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(
            "condensed Newton system lost positive definiteness"
        ) from exc
    dz = sla.cho_solve(fac, rhs, check_finite=False)
    dgamma = gp * dz + it.tau / it.phi - it.gamma
    dtheta = -tp * dz + it.tau / it.psi - it.theta
    return Direction(dz=dz, dgamma=dgamma, dtheta=dtheta)


def solve_exact(p: BoxQP, opts: SolverOptions | None = None) -> Solution:
    """Solve the box QP with the exact-Newton path-following method."""
    opts = opts or SolverOptions()
    validate(p)
    sp = scale(p, opts.alpha)
    if sp is None:
        # zero linear term: the box is centered and the optimum is z = 0
        return Solution(
            z_star=np.zeros(p.n), duality_gap=0.0, iterations_run=0,
            trace=[] if opts.trace or opts.audit else None,
            audit_rows=[] if opts.audit else None,
        )

    n = p.n
    consts = alg1_constants(n, opts.alpha)
    n_iter = iteration_count(n, opts.epsilon, consts)
    shrink = 1.0 - consts.beta / math.sqrt(2.0 * n)

    it = initialize(sp)
    trace: list[TraceRow] | None = [] if (opts.trace or opts.audit) else None
    audit: list[AuditRow] | None = [] if opts.audit else None
    ran = 0

    for k in range(1, n_iter + 1):
        d = exact_direction(it, sp)
        if audit is not None:
            step_inf = max(
                np.max(np.abs(d.dgamma / it.gamma)),
                np.max(np.abs(d.dtheta / it.theta)),
                np.max(np.abs(d.dz / it.phi)),
                np.max(np.abs(d.dz / it.psi)),
            )
            curvature = float(-d.dgamma @ d.dz + d.dtheta @ d.dz)
        it.z += d.dz
        it.gamma += d.dgamma
        it.theta += d.dtheta
        it.phi -= d.dz
        it.psi += d.dz
        it.tau *= shrink
        if opts.tau_fault is not None and opts.tau_fault[0] == k:
            it.tau *= opts.tau_fault[1]
        ran = k
        gap = it.x_dot_s()
        if trace is not None:
            xi = neighborhood_ratio(it)
            trace.append(TraceRow(k=k, tau=it.tau, gap=gap, neighborhood=xi, rank1_cum=0))
        if audit is not None:
            audit.append(AuditRow(
                k=k, tau=it.tau, gap=gap, neighborhood=xi,
                min_positive=float(min(it.gamma.min(), it.theta.min(),
                                       it.phi.min(), it.psi.min())),
                curvature=curvature, step_ratio_inf=float(step_inf),
                band_margin=0.0, rank1=0,
            ))
        if opts.early_stop and gap <= opts.epsilon:
            break

    return Solution(
        z_star=it.z.copy(), duality_gap=it.x_dot_s(), iterations_run=ran,
        rank1_used=0, trace=trace, audit_rows=audit,
    )
