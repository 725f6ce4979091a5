"""Reductions of common problem classes to the canonical box QP.

Each transform returns (BoxQP, recovery); feeding the solver's z* back
through the recovery reproduces the original-space optimum.  All inverses
appearing in the data assembly are computed by Cholesky factor-and-solve,
never formed elementwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidBounds, InvalidLabels, NotPositiveDefinite, RankDeficient
from .linalg import CholeskyFactor, cholesky_factor, cholesky_solve
from .problem import BoxQP

__all__ = [
    "StrictQP",
    "LassoProblem",
    "SvmProblem",
    "L1Recovery",
    "LassoRecovery",
    "SvmRecovery",
    "GenBoxRecovery",
    "l1_penalty_to_boxqp",
    "recover_l1",
    "lasso_to_boxqp",
    "recover_lasso",
    "svm_to_boxqp",
    "recover_svm",
    "svm_decision",
    "linear_gram",
    "rbf_gram",
    "genbox_to_unitbox",
    "recover_genbox",
]


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class StrictQP:
    """min 1/2 y'Qy + q'y  s.t.  Gy <= g, with every row softened by an
    l1 penalty weighted by rho (rho > 0 elementwise)."""

    Q: np.ndarray
    q: np.ndarray
    G: np.ndarray
    g: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        for name in ("Q", "q", "G", "g", "rho"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        ny = self.Q.shape[0]
        ng = self.G.shape[0]
        if self.Q.shape != (ny, ny) or self.q.shape != (ny,):
            raise ValueError("Q/q dimensions inconsistent")
        if self.G.shape != (ng, ny) or self.g.shape != (ng,) or self.rho.shape != (ng,):
            raise ValueError("G/g/rho dimensions inconsistent")
        if np.any(self.rho <= 0):
            raise ValueError("penalty weights must be positive")


@dataclass(frozen=True)
class LassoProblem:
    """min 1/2 ||Ax - b||^2 + lam * ||x||_1 with A'A full rank, m >= n."""

    A: np.ndarray
    b: np.ndarray
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float).ravel())
        m, n = self.A.shape
        if m < n:
            raise ValueError(f"need m >= n, got A of shape {self.A.shape}")
        if self.b.shape != (m,):
            raise ValueError("b length must match rows of A")
        if self.lam <= 0:
            raise ValueError("lasso weight must be positive")


@dataclass(frozen=True)
class SvmProblem:
    """Soft-margin SVM dual data: labels in {-1,+1}, gram over augmented
    features (kernel + 1 absorbs the bias), box height rho_svm."""

    labels: np.ndarray
    gram: np.ndarray
    rho_svm: float


@dataclass(frozen=True)
class L1Recovery:
    kind = "l1qp"
    q_factor: CholeskyFactor
    G: np.ndarray
    q: np.ndarray
    rho: np.ndarray


@dataclass(frozen=True)
class LassoRecovery:
    kind = "lasso"
    ata_factor: CholeskyFactor
    atb: np.ndarray
    lam: float


@dataclass(frozen=True)
class SvmRecovery:
    kind = "svm"
    labels: np.ndarray
    rho_svm: float


@dataclass(frozen=True)
class GenBoxRecovery:
    kind = "genbox"
    half_width: np.ndarray
    center: np.ndarray


def l1_penalty_to_boxqp(p: StrictQP) -> tuple[BoxQP, L1Recovery]:
    """Soft-constrained strictly convex QP -> box QP.

    H = diag(rho) G Q^{-1} G' diag(rho)
    h = diag(rho) (G Q^{-1} G' rho + 2 (G Q^{-1} q + g))
    """
    fq = cholesky_factor(p.Q)
    qinv_gt = cholesky_solve(fq, p.G.T)           # Q^{-1} G'
    gqg = _sym(p.G @ qinv_gt)                     # G Q^{-1} G'
    qinv_q = cholesky_solve(fq, p.q)
    H = p.rho[:, None] * gqg * p.rho[None, :]
    h = p.rho * (gqg @ p.rho + 2.0 * (p.G @ qinv_q + p.g))
    return BoxQP(H=_sym(H), h=h), L1Recovery(q_factor=fq, G=p.G, q=p.q, rho=p.rho)


def recover_l1(z_star: np.ndarray, r: L1Recovery) -> np.ndarray:
    """y* = -Q^{-1} (q + 1/2 G' (rho*z* + rho))."""
    w = r.q + 0.5 * r.G.T @ (r.rho * z_star + r.rho)
    return -cholesky_solve(r.q_factor, w)


def lasso_to_boxqp(p: LassoProblem) -> tuple[BoxQP, LassoRecovery]:
    """Lasso dual over [-lam, lam], rescaled to the unit box.

    H = lam (A'A)^{-1},  h = -(A'A)^{-1} A'b.
    """
    ata = _sym(p.A.T @ p.A)
    try:
        fac = cholesky_factor(ata)
    except NotPositiveDefinite as exc:
        raise RankDeficient("A'A is not positive definite") from exc
    atb = p.A.T @ p.b
    ata_inv = cholesky_solve(fac, np.eye(fac.n))
    H = _sym(p.lam * ata_inv)
    h = -cholesky_solve(fac, atb)
    return BoxQP(H=H, h=h), LassoRecovery(ata_factor=fac, atb=atb, lam=p.lam)


def recover_lasso(z_star: np.ndarray, r: LassoRecovery) -> np.ndarray:
    """x* = (A'A)^{-1} (A'b - lam * z*)."""
    return cholesky_solve(r.ata_factor, r.atb - r.lam * z_star)


def linear_gram(x: np.ndarray) -> np.ndarray:
    """Linear-kernel gram over bias-augmented features: x_i'x_j + 1."""
    x = np.asarray(x, dtype=float)
    return x @ x.T + 1.0


def rbf_gram(x: np.ndarray, sigma: float, x2: np.ndarray | None = None) -> np.ndarray:
    """RBF kernel exp(-||u - v||^2 / (2 sigma^2)) + 1 (the +1 absorbs the bias)."""
    x = np.asarray(x, dtype=float)
    y = x if x2 is None else np.asarray(x2, dtype=float)
    sq = (np.sum(x**2, axis=1)[:, None] + np.sum(y**2, axis=1)[None, :]
          - 2.0 * x @ y.T)
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * sigma**2)) + 1.0


def svm_to_boxqp(p: SvmProblem) -> tuple[BoxQP, SvmRecovery]:
    """Soft-margin SVM dual (box [0, rho]) shifted/scaled to [-e, e].

    With Khat = (y y') * gram and the substitution alpha = rho/2 (z + e):
    H = (rho/2)^2 Khat,  h = (rho/2) ((rho/2) Khat e - e).
    """
    y = np.asarray(p.labels, dtype=float).ravel()
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise InvalidLabels("labels must be -1 or +1")
    k = np.asarray(p.gram, dtype=float)
    m = y.shape[0]
    if k.shape != (m, m):
        raise ValueError(f"gram must be {m}x{m}, got {k.shape}")
    if p.rho_svm <= 0:
        raise ValueError("rho_svm must be positive")
    khat = _sym((y[:, None] * y[None, :]) * k)
    half = 0.5 * p.rho_svm
    H = half * half * khat
    h = half * (half * khat @ np.ones(m) - 1.0)
    return BoxQP(H=_sym(H), h=h), SvmRecovery(labels=y, rho_svm=p.rho_svm)


def recover_svm(z_star: np.ndarray, r: SvmRecovery) -> np.ndarray:
    """Dual multipliers alpha = rho/2 (z* + e), inside [0, rho]."""
    return 0.5 * r.rho_svm * (z_star + 1.0)


def svm_decision(alphas: np.ndarray, labels: np.ndarray, gram_cross: np.ndarray) -> np.ndarray:
    """Decision values sum_i alpha_i y_i k_aug(x, x_i) for each row of gram_cross."""
    return gram_cross @ (alphas * np.asarray(labels, dtype=float))


def genbox_to_unitbox(
    H: np.ndarray, h: np.ndarray, l: np.ndarray, u: np.ndarray
) -> tuple[BoxQP, GenBoxRecovery]:
    """Affine change of variables y = D z + c mapping [l, u] onto [-e, e].

    D = diag((u - l)/2), c = (u + l)/2; the transformed data are
    H' = D H D and h' = D (H c + h); objective values shift by a constant.
    """
    H = np.asarray(H, dtype=float)
    h = np.asarray(h, dtype=float).ravel()
    l = np.asarray(l, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    if np.any(l >= u):
        raise InvalidBounds("need l < u elementwise")
    half = 0.5 * (u - l)
    center = 0.5 * (u + l)
    Hp = _sym(half[:, None] * H * half[None, :])
    hp = half * (H @ center + h)
    return BoxQP(H=Hp, h=hp), GenBoxRecovery(half_width=half, center=center)


def recover_genbox(z_star: np.ndarray, r: GenBoxRecovery) -> np.ndarray:
    """Map the unit-box solution back: y = D z* + c."""
    return r.half_width * z_star + r.center
