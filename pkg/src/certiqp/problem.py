"""Canonical box QP (min 1/2 z'Hz + h'z over -e <= z <= e) and solver state.

The scaled form divides the data by ||h||_inf and multiplies by
2*lambda with lambda = alpha/sqrt(2n); the optimizer is unchanged and the
standard starting point lands inside the central-path neighborhood for
free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AsymmetricH, NotPSD, NotPositiveDefinite
from .linalg import cholesky_factor

__all__ = [
    "BoxQP",
    "ScaledProblem",
    "Iterate",
    "KktResiduals",
    "TraceRow",
    "AuditRow",
    "Solution",
    "SolverOptions",
    "validate",
    "scale",
    "initialize",
    "kkt_residuals",
    "duality_gap",
    "neighborhood_ratio",
]


@dataclass(frozen=True)
class BoxQP:
    """Dense box QP data: symmetric H >= 0 (PSD), linear term h."""

    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float))
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float).ravel())
        if self.H.ndim != 2 or self.H.shape[0] != self.H.shape[1]:
            raise ValueError(f"H must be square, got shape {self.H.shape}")
        if self.h.shape[0] != self.H.shape[0]:
            raise ValueError(
                f"h has length {self.h.shape[0]}, expected {self.H.shape[0]}"
            )
        if self.n < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def n(self) -> int:
        return self.H.shape[0]


def validate(p: BoxQP, check_psd: bool = False) -> None:
    """Check symmetry of H and, optionally, PSD-ness via a shifted Cholesky."""
    scale_ = max(np.max(np.abs(p.H)) if p.H.size else 0.0, 1.0)
    if np.max(np.abs(p.H - p.H.T)) > 1e-12 * scale_:
        raise AsymmetricH("H is not symmetric within 1e-12 * max|H|")
    if check_psd:
        shifted = p.H + 1e-10 * scale_ * np.eye(p.n)
        try:
            cholesky_factor(shifted)
        except NotPositiveDefinite as exc:
            raise NotPSD("H + 1e-10*I failed Cholesky; H is not PSD") from exc


@dataclass(frozen=True)
class ScaledProblem:
    """Problem data after the cost-free rescaling; ||htilde||_inf == 1."""

    n: int
    lam: float
    two_lam_Htilde: np.ndarray
    htilde: np.ndarray
    hinf: float


def scale(p: BoxQP, alpha: float) -> ScaledProblem | None:
    """Rescale the problem; returns None when h == 0 (then z* = 0 directly)."""
    hinf = float(np.max(np.abs(p.h)))
    if hinf == 0.0:
        return None
    lam = alpha / math.sqrt(2.0 * p.n)
    return ScaledProblem(
        n=p.n,
        lam=lam,
        two_lam_Htilde=(2.0 * lam / hinf) * p.H,
        htilde=p.h / hinf,
        hinf=hinf,
    )


@dataclass
class Iterate:
    """Primal-dual point. gamma*phi and theta*psi relax to tau on the path.

    phi = e - z and psi = e + z are maintained by stepping (never
    re-derived), so the linear KKT rows stay satisfied to round-off.
    """

    z: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    tau: float

    def x_dot_s(self) -> float:
        return float(self.gamma @ self.phi + self.theta @ self.psi)


def initialize(sp: ScaledProblem) -> Iterate:
    """Feasible interior start: z=0, gamma=e-lam*htilde, theta=e+lam*htilde."""
    n = sp.n
    return Iterate(
        z=np.zeros(n),
        gamma=1.0 - sp.lam * sp.htilde,
        theta=1.0 + sp.lam * sp.htilde,
        phi=np.ones(n),
        psi=np.ones(n),
        tau=1.0,
    )


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    primal_lower: float
    primal_upper: float
    complementarity_gap: float


def kkt_residuals(it: Iterate, sp: ScaledProblem) -> KktResiduals:
    """Max-norm residuals of the scaled first-order conditions at ``it``."""
    stat = sp.two_lam_Htilde @ it.z + 2.0 * sp.lam * sp.htilde + it.gamma - it.theta
    return KktResiduals(
        stationarity=float(np.max(np.abs(stat))),
        primal_lower=float(np.max(np.abs(it.z + it.phi - 1.0))),
        primal_upper=float(np.max(np.abs(it.z - it.psi + 1.0))),
        complementarity_gap=it.x_dot_s(),
    )


def duality_gap(it: Iterate) -> float:
    """gamma'phi + theta'psi, always nonnegative on interior iterates."""
    return it.x_dot_s()


def neighborhood_ratio(it: Iterate) -> float:
    """||x*s - tau*e||_2 / tau for the stacked multiplier/slack pairs."""
    prod = np.concatenate([it.gamma * it.phi, it.theta * it.psi])
    return float(np.linalg.norm(prod - it.tau) / it.tau)


@dataclass(frozen=True)
class TraceRow:
    """One per-iteration record: k starts at 1; rank1_cum is 0 for exact runs."""

    k: int
    tau: float
    gap: float
    neighborhood: float
    rank1_cum: int


@dataclass(frozen=True)
class AuditRow:
    """Raw per-iteration quantities recorded when auditing is on.

    band_margin is the worst tilde/current ratio relative to the allowed
    band right after the refresh (<= 1 means inside); it is 0 for the
    exact solver, which has no lagged state.
    """

    k: int
    tau: float
    gap: float
    neighborhood: float
    min_positive: float
    curvature: float
    step_ratio_inf: float
    band_margin: float
    rank1: int


@dataclass
class Solution:
    """Solver output. ``trace`` is populated only when tracing was requested."""

    z_star: np.ndarray
    duality_gap: float
    iterations_run: int
    rank1_used: int = 0
    trace: list[TraceRow] | None = None
    rank1_per_iter: list[int] | None = None
    audit_rows: list[AuditRow] | None = None


@dataclass
class SolverOptions:
    """Knobs shared by both solvers.

    early_stop breaks the certified fixed count and stops at the first
    iteration whose gap is <= epsilon; off by default because the
    certificate semantics require running the full count.  debug enables
    O(n^2)-per-iteration self-checks and is meant for small problems.
    tau_fault (iteration, factor) corrupts tau at one iteration; it
    exists so the audit machinery can be shown to catch a broken run.
    """

    epsilon: float = 1e-6
    alpha: float = 0.3
    delta: float = 0.15
    early_stop: bool = False
    trace: bool = False
    audit: bool = False
    debug: bool = False
    reinvert_every: int = 0
    tau_fault: tuple[int, float] | None = None
