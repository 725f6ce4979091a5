"""Approximated-Newton feasible interior-point solver.

The Newton system's diagonal coefficients are frozen copies
(gamma_t, theta_t, phi_t, psi_t) that are refreshed per coordinate only
when the true value drifts outside a multiplicative band
[1/(1+delta), 1+delta].  Each refreshed coordinate changes the system
matrix B = 2*lam*Htilde + diag(d) by a diagonal bump, so the inverse
M = B^{-1} is maintained by one Sherman-Morrison rank-1 update per
coordinate instead of a fresh factorization.

M is kept in Fortran order and only its lower triangle is authoritative
inside the iteration loop (rank-1 updates touch just that half); use
ApproxState.inverse() for the full symmetric matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg.blas as blas

from .certificate import alg2_constants, iteration_count
from .errors import SingularUpdate
from .exact import Direction
from .linalg import spd_inverse
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

__all__ = ["ApproxState", "IndexSets", "init_state", "refresh_tildes",
           "apply_rank1", "approx_direction", "solve_approx"]


@dataclass
class ApproxState:
    """Lagged coefficient vectors plus the maintained inverse M = B^{-1}."""

    gamma_t: np.ndarray
    theta_t: np.ndarray
    phi_t: np.ndarray
    psi_t: np.ndarray
    d: np.ndarray
    M: np.ndarray  # Fortran order; lower triangle authoritative
    upper_stale: bool = False

    def inverse(self) -> np.ndarray:
        """Full symmetric M, mirroring the lower triangle if needed."""
        if self.upper_stale:
            low = np.tril(self.M)
            self.M[:] = low + np.tril(self.M, -1).T
            self.upper_stale = False
        return self.M

    def column(self, i: int, out: np.ndarray) -> np.ndarray:
        """Column i of M read from the lower triangle."""
        out[:i] = self.M[i, :i]
        out[i:] = self.M[i:, i]
        return out


@dataclass(frozen=True)
class IndexSets:
    """Sorted indices whose lagged copy was refreshed, one set per vector."""

    i_gamma: np.ndarray
    i_theta: np.ndarray
    i_phi: np.ndarray
    i_psi: np.ndarray

    def union(self) -> np.ndarray:
        return np.union1d(np.union1d(self.i_gamma, self.i_theta),
                          np.union1d(self.i_phi, self.i_psi))

    def total_members(self) -> int:
        return (len(self.i_gamma) + len(self.i_theta)
                + len(self.i_phi) + len(self.i_psi))


def init_state(it: Iterate, sp: ScaledProblem) -> ApproxState:
    """Copy the iterate into the lagged vectors and invert B once."""
    d = it.gamma / it.phi + it.theta / it.psi
    b = sp.two_lam_Htilde.copy()
    b[np.diag_indices_from(b)] += d
    m = np.asfortranarray(spd_inverse(b))
    return ApproxState(
        gamma_t=it.gamma.copy(), theta_t=it.theta.copy(),
        phi_t=it.phi.copy(), psi_t=it.psi.copy(), d=d, M=m,
    )


def refresh_tildes(st: ApproxState, it: Iterate, delta: float) -> IndexSets:
    """Re-sync lagged coordinates whose ratio left [1/(1+delta), 1+delta].

    Each of the four tests refreshes its own lagged vector, so after the
    call every tilde/current ratio lies inside the band.
    """
    lo = 1.0 / (1.0 + delta)
    hi = 1.0 + delta
    sets = []
    for cur, til in ((it.gamma, st.gamma_t), (it.theta, st.theta_t),
                     (it.phi, st.phi_t), (it.psi, st.psi_t)):
        r = til / cur
        bad = (r < lo) | (r > hi)
        idx = np.nonzero(bad)[0]
        if idx.size:
            til[idx] = cur[idx]
        sets.append(idx)
    return IndexSets(*sets)


def apply_rank1(st: ApproxState, sets: IndexSets, scratch: np.ndarray | None = None) -> int:
    """Fold the refreshed coordinates into M and d.

    One Sherman-Morrison update per unique index, in ascending order; the
    bump Delta captures the combined change of d_i across all four
    vectors.  Returns the number of rank-1 updates performed.
    """
    union = sets.union()
    if union.size == 0:
        return 0
    m = st.M
    col = scratch if scratch is not None else np.empty(m.shape[0])
    for i in union:
        d_new = st.gamma_t[i] / st.phi_t[i] + st.theta_t[i] / st.psi_t[i]
        bump = d_new - st.d[i]
        denom = 1.0 + bump * m[i, i]
        if denom <= 1e-14:
            raise SingularUpdate(
                f"1 + Delta*M[{i},{i}] = {denom:.3e}; inverse update would blow up"
            )
        st.column(i, col)
        blas.dsyr(-bump / denom, col, a=m, lower=1, overwrite_a=1)
        st.d[i] = d_new
    st.upper_stale = True
    return int(union.size)


def approx_direction(st: ApproxState, it: Iterate, sp: ScaledProblem) -> Direction:
    """Newton-like direction using the lagged coefficients; one matvec with M."""
    rhs = (it.tau / st.psi_t - it.tau / st.phi_t
           + it.gamma * it.phi / st.phi_t - it.theta * it.psi / st.psi_t)
    dz = blas.dsymv(1.0, st.M, rhs, lower=1)
    dgamma = (st.gamma_t / st.phi_t) * dz + it.tau / st.phi_t - it.gamma * it.phi / st.phi_t
    dtheta = -(st.theta_t / st.psi_t) * dz + it.tau / st.psi_t - it.theta * it.psi / st.psi_t
    return Direction(dz=dz, dgamma=dgamma, dtheta=dtheta)


def _band_margin(st: ApproxState, it: Iterate, delta: float) -> float:
    hi = 1.0 + delta
    worst = 0.0
    for cur, til in ((it.gamma, st.gamma_t), (it.theta, st.theta_t),
                     (it.phi, st.phi_t), (it.psi, st.psi_t)):
        r = til / cur
        worst = max(worst, float(np.max(r) / hi), float(1.0 / (np.min(r) * hi)))
    return worst


def solve_approx(p: BoxQP, opts: SolverOptions | None = None) -> Solution:
    """Solve the box QP with the rank-1-maintained interior-point method."""
    opts = opts or SolverOptions()
    validate(p)
    sp = scale(p, opts.alpha)
    if sp is None:
        return Solution(
            z_star=np.zeros(p.n), duality_gap=0.0, iterations_run=0,
            trace=[] if opts.trace or opts.audit else None,
            rank1_per_iter=[] if opts.trace or opts.audit else None,
            audit_rows=[] if opts.audit else None,
        )

    n = p.n
    consts = alg2_constants(n, opts.alpha, opts.delta)
    n_iter = iteration_count(n, opts.epsilon, consts)
    shrink = 1.0 - consts.beta / math.sqrt(2.0 * n)

    it = initialize(sp)
    st = init_state(it, sp)
    recording = opts.trace or opts.audit
    trace: list[TraceRow] | None = [] if recording else None
    per_iter: list[int] | None = [] if recording else None
    audit: list[AuditRow] | None = [] if opts.audit else None
    scratch = np.empty(n)
    total_rank1 = 0
    ran = 0

    for k in range(1, n_iter + 1):
        sets = refresh_tildes(st, it, opts.delta)
        n_updates = apply_rank1(st, sets, scratch)
        total_rank1 += n_updates
        if opts.reinvert_every and k % opts.reinvert_every == 0:
            b = sp.two_lam_Htilde.copy()
            b[np.diag_indices_from(b)] += st.d
            st.M = np.asfortranarray(spd_inverse(b))
            st.upper_stale = False
        if opts.debug:
            _debug_checks(st, sp)
        if audit is not None:
            band = _band_margin(st, it, opts.delta)

        d = approx_direction(st, it, sp)
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
        if recording:
            xi = neighborhood_ratio(it)
            trace.append(TraceRow(k=k, tau=it.tau, gap=gap,
                                  neighborhood=xi, rank1_cum=total_rank1))
            per_iter.append(n_updates)
        if audit is not None:
            audit.append(AuditRow(
                k=k, tau=it.tau, gap=gap, neighborhood=xi,
                min_positive=float(min(it.gamma.min(), it.theta.min(),
                                       it.phi.min(), it.psi.min())),
                curvature=curvature, step_ratio_inf=float(step_inf),
                band_margin=band, rank1=n_updates,
            ))
        if opts.early_stop and gap <= opts.epsilon:
            break

    return Solution(
        z_star=it.z.copy(), duality_gap=it.x_dot_s(), iterations_run=ran,
        rank1_used=total_rank1, trace=trace, rank1_per_iter=per_iter,
        audit_rows=audit,
    )


def _debug_checks(st: ApproxState, sp: ScaledProblem) -> None:
    d_fresh = st.gamma_t / st.phi_t + st.theta_t / st.psi_t
    assert np.max(np.abs(d_fresh - st.d)) <= 1e-12, "incremental d drifted"
    b = sp.two_lam_Htilde.copy()
    b[np.diag_indices_from(b)] += st.d
    resid = st.inverse() @ b - np.eye(sp.n)
    assert np.max(np.abs(resid)) <= 1e-6, "maintained inverse drifted"
