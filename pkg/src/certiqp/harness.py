"""Independent oracles, random problem generation, invariant auditing,
and the CSV experiment runners.

Oracles here deliberately share no code path with the solvers: the
active-set oracle enumerates candidate sign patterns, and the Lasso
oracle is plain proximal gradient.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .approx import solve_approx
from .certificate import alg1_constants, alg2_constants, iteration_count, rank1_count_bound
from .errors import Intractable
from .exact import solve_exact
from .problem import BoxQP, Solution, SolverOptions
from .transforms import LassoProblem

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - fallback when not installed
    threadpool_limits = None

__all__ = [
    "random_boxqp",
    "oracle_active_set",
    "oracle_ista",
    "AuditReport",
    "audit_solve",
    "trace_experiment",
    "timing_experiment",
    "rows_to_csv",
    "TRACE_HEADER",
    "TIMING_HEADER",
]


def random_boxqp(n: int, seed: int, density_of_curvature: float = 1.0) -> BoxQP:
    """Gram-form random instance: H = S'S/n with S of shape (ceil(density*n), n).

    density < 1 yields PSD-but-singular H; density = 0 yields H = 0.
    Deterministic in the seed.
    """
    if not 0.0 <= density_of_curvature <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    k = math.ceil(density_of_curvature * n)
    s = rng.standard_normal((k, n))
    H = s.T @ s / n if k else np.zeros((n, n))
    return BoxQP(H=H, h=rng.standard_normal(n))


def oracle_active_set(p: BoxQP, tol: float = 1e-7) -> np.ndarray:
    """Brute-force optimum via enumeration of 3^n bound patterns.

    Each coordinate is pinned to -1, +1, or left free; the free block is
    solved as an equality system and kept only when the stationarity,
    multiplier-sign, and box conditions all hold.  For singular H the
    best feasible objective among consistent candidates wins.
    """
    n = p.n
    if n > 10:
        raise Intractable(f"3^{n} patterns is too many; oracle limited to n <= 10")
    scale = max(1.0, float(np.max(np.abs(p.H))) if p.H.size else 0.0,
                float(np.max(np.abs(p.h))))
    best_z = None
    best_obj = np.inf
    idx = np.arange(n)
    for pattern in np.ndindex(*(3,) * n):
        code = np.asarray(pattern) - 1  # -1 lower, 0 free, +1 upper
        z = code.astype(float)
        free = idx[code == 0]
        if free.size:
            rhs = -(p.h[free] + p.H[np.ix_(free, idx[code != 0])] @ z[code != 0])
            hff = p.H[np.ix_(free, free)]
            try:
                zf = np.linalg.solve(hff, rhs)
            except np.linalg.LinAlgError:
                zf, *_ = np.linalg.lstsq(hff, rhs, rcond=None)
            if np.max(np.abs(hff @ zf - rhs), initial=0.0) > tol * scale:
                continue  # inconsistent free block
            if np.any(np.abs(zf) > 1.0 + tol):
                continue
            z[free] = zf
        grad = p.H @ z + p.h
        if np.any(grad[code == -1] < -tol * scale):
            continue
        if np.any(grad[code == 1] > tol * scale):
            continue
        obj = 0.5 * z @ p.H @ z + p.h @ z
        if obj < best_obj:
            best_obj = obj
            best_z = z
    assert best_z is not None, "no KKT-consistent pattern found"
    return best_z


def oracle_ista(p: LassoProblem, iters: int = 20000, tol: float = 1e-10) -> np.ndarray:
    """Proximal-gradient Lasso solve with step 1/||A'A||_2.

    Stops when the gradient-map norm drops below tol.
    """
    ata = p.A.T @ p.A
    atb = p.A.T @ p.b
    # power iteration for the spectral norm
    v = np.ones(ata.shape[0]) / math.sqrt(ata.shape[0])
    for _ in range(100):
        w = ata @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
    lip = max(float(v @ ata @ v), 1e-12)
    step = 1.0 / lip
    thresh = step * p.lam
    x = np.zeros(ata.shape[0])
    for _ in range(iters):
        g = ata @ x - atb
        x_new = x - step * g
        x_new = np.sign(x_new) * np.maximum(np.abs(x_new) - thresh, 0.0)
        if np.linalg.norm(x - x_new) / step <= tol:
            return x_new
        x = x_new
    return x


@dataclass
class AuditReport:
    """Per-iteration invariant checks compiled from an audited solve."""

    algorithm: str
    n: int
    iterations: int
    rank1_total: int
    rank1_bound: int
    checks: dict[str, np.ndarray] = field(default_factory=dict)
    worst: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(bool(np.all(v)) for v in self.checks.values())

    def failures(self) -> dict[str, int]:
        return {k: int(np.sum(~v)) for k, v in self.checks.items() if not np.all(v)}


def audit_solve(p: BoxQP, opts: SolverOptions | None = None,
                algorithm: str = "approx") -> AuditReport:
    """Run one solve with full instrumentation and grade every invariant."""
    from dataclasses import replace

    opts = replace(opts or SolverOptions(), audit=True)
    n = p.n
    if algorithm == "approx":
        consts = alg2_constants(n, opts.alpha, opts.delta)
        sol = solve_approx(p, opts)
        bound = rank1_count_bound(n, max(iteration_count(n, opts.epsilon, consts), 1), consts)
        eta = consts.eta
    elif algorithm == "exact":
        consts = alg1_constants(n, opts.alpha)
        sol = solve_exact(p, opts)
        bound = 0
        eta = consts.eta
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    rows = sol.audit_rows or []
    alpha = opts.alpha
    root = math.sqrt(2.0 * n)
    lo_c = 2.0 * n - alpha * root
    hi_c = 2.0 * n + alpha * root
    tau = np.array([r.tau for r in rows])
    gap = np.array([r.gap for r in rows])
    xi = np.array([r.neighborhood for r in rows])
    pos = np.array([r.min_positive for r in rows])
    curv = np.array([r.curvature for r in rows])
    step = np.array([r.step_ratio_inf for r in rows])
    band = np.array([r.band_margin for r in rows])
    r1 = np.cumsum([r.rank1 for r in rows]) if rows else np.array([], dtype=int)

    checks = {
        "positivity": pos > 0.0,
        "neighborhood": xi <= alpha * (1.0 + 1e-8),
        "sandwich": (gap >= lo_c * tau * (1.0 - 1e-9)) & (gap <= hi_c * tau * (1.0 + 1e-9)),
        "curvature": curv >= -1e-12,
        "step_ratio": step <= eta + 1e-8,
    }
    worst = {
        "positivity": float(pos.min()) if rows else math.inf,
        "neighborhood": float(xi.max()) if rows else 0.0,
        "sandwich_low": float(np.min(gap / (lo_c * tau))) if rows else math.inf,
        "sandwich_high": float(np.max(gap / (hi_c * tau))) if rows else 0.0,
        "curvature": float(curv.min()) if rows else 0.0,
        "step_ratio": float(step.max()) if rows else 0.0,
    }
    if algorithm == "approx":
        checks["ratio_band"] = band <= 1.0 + 1e-12
        checks["rank1_budget"] = r1 <= bound
        worst["ratio_band"] = float(band.max()) if rows else 0.0
        worst["rank1_budget"] = float(r1[-1] / bound) if rows and bound else 0.0
    return AuditReport(
        algorithm=algorithm, n=n, iterations=sol.iterations_run,
        rank1_total=sol.rank1_used, rank1_bound=bound, checks=checks, worst=worst,
    )


TRACE_HEADER = ["experiment", "n", "epsilon", "k", "tau", "gap",
                "rank1_cum", "n_iter_bound", "rank1_bound"]
TIMING_HEADER = ["n", "algo", "median_seconds"]


def trace_experiment(ns=(100, 200), epsilons=(1e-6, 1e-8), seed: int = 0,
                     alpha: float = 0.3, delta: float = 0.15) -> list[list]:
    """Per-iteration gap/rank-1 traces for each (n, eps) cell, as CSV rows."""
    rows: list[list] = []
    for n in ns:
        p = random_boxqp(n, seed)
        for eps in epsilons:
            consts = alg2_constants(n, alpha, delta)
            n_bound = iteration_count(n, eps, consts)
            r_bound = rank1_count_bound(n, n_bound, consts)
            sol = solve_approx(p, SolverOptions(epsilon=eps, alpha=alpha,
                                                delta=delta, trace=True))
            for t in sol.trace:
                rows.append(["gap_trace", n, eps, t.k, t.tau, t.gap,
                             t.rank1_cum, n_bound, r_bound])
    return rows


def timing_experiment(ns=(50, 100, 200, 500), reps: int = 5, seed: int = 0,
                      epsilon: float = 1e-6) -> list[list]:
    """Median wall times of both solvers on identical problems.

    One warmup solve per (n, algo) is excluded; kernels are pinned to a
    single thread when threadpoolctl is available so the comparison is
    apples-to-apples.
    """
    rows: list[list] = []

    def run() -> None:
        for n in ns:
            p = random_boxqp(n, seed)
            for algo, fn in (("exact", solve_exact), ("approx", solve_approx)):
                fn(p, SolverOptions())  # warmup
                times = []
                for _ in range(reps):
                    t0 = time.perf_counter()
                    fn(p, SolverOptions(epsilon=epsilon))
                    times.append(time.perf_counter() - t0)
                rows.append([n, algo, float(np.median(times))])

    if threadpool_limits is not None:
        with threadpool_limits(limits=1):
            run()
    else:
        run()
    return rows


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    """Serialize rows deterministically (17-significant-digit floats, LF only)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()
