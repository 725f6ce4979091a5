"""Data-independent iteration and rank-1-update counts for both solvers.

Every quantity here depends only on (n, epsilon, alpha, delta), never on
problem data, so the counts can be computed before the solve and used as
an execution-time certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParameter

__all__ = [
    "Alg1Constants",
    "Alg2Constants",
    "Certificate",
    "alg1_constants",
    "alg2_constants",
    "iteration_count",
    "rank1_count_bound",
    "certify",
    "DEFAULT_ALPHA",
    "DEFAULT_DELTA",
    "DEFAULT_EPSILON",
]

DEFAULT_ALPHA = 0.3
DEFAULT_DELTA = 0.15
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class Alg1Constants:
    """Neighborhood/step constants for the exact-Newton solver."""

    alpha: float
    sigma: float
    beta: float
    mu: float
    n: int

    @property
    def eta(self) -> float:
        # step-contraction bound ||dx/x|| <= eta; equals mu here
        return self.mu


@dataclass(frozen=True)
class Alg2Constants:
    """Constants for the approximated-Newton solver (delta = lag band width)."""

    alpha: float
    delta: float
    sigma: float
    beta: float
    mu: float
    eta: float
    n: int


@dataclass(frozen=True)
class Certificate:
    """Pre-solve guarantee: exact iteration count and rank-1 budget."""

    n: int
    epsilon: float
    algorithm: str  # "exact" | "approx"
    n_iter: int
    n_rank1_bound: int
    constants: Alg1Constants | Alg2Constants
    flops_estimate: float


def _ceil_guarded(x: float) -> int:
    # nudge one ulp down first so an exactly-integer x is not bumped by
    # float rounding in the upstream arithmetic
    return math.ceil(math.nextafter(x, -math.inf))


def alg1_constants(n: int, alpha: float = DEFAULT_ALPHA) -> Alg1Constants:
    """Constants for the exact-Newton solver; requires 0 < alpha < 0.5."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 0.5:
        raise InvalidParameter(f"alpha must lie in (0, 0.5), got {alpha}")
    sigma = alpha * alpha / (2.0 * (1.0 - alpha))
    beta = (alpha - sigma) / (1.0 + alpha / math.sqrt(2.0 * n))
    mu = alpha / (1.0 - alpha)
    return Alg1Constants(alpha=alpha, sigma=sigma, beta=beta, mu=mu, n=n)


def alg2_constants(
    n: int, alpha: float = DEFAULT_ALPHA, delta: float = DEFAULT_DELTA
) -> Alg2Constants:
    """Constants for the approximated-Newton solver.

    delta = 0 reduces field-for-field to alg1_constants. Raises
    InvalidParameter when (alpha, delta) give mu >= 1 or beta <= 0.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    if delta < 0.0:
        raise InvalidParameter(f"delta must be >= 0, got {delta}")
    opd = 1.0 + delta
    sigma = (
        math.sqrt(2.0) * delta * opd**2 * alpha * math.sqrt((1.0 + alpha) / (1.0 - alpha))
        + opd**2 * alpha**2 / (2.0 * (1.0 - alpha))
    )
    mu = opd**3 * alpha / (1.0 - alpha)
    beta = (alpha - sigma) / (1.0 + alpha / math.sqrt(2.0 * n))
    if mu >= 1.0:
        raise InvalidParameter(f"(alpha={alpha}, delta={delta}) give mu={mu:.4f} >= 1")
    if beta <= 0.0:
        raise InvalidParameter(
            f"(alpha={alpha}, delta={delta}) give sigma={sigma:.4f} >= alpha, beta <= 0"
        )
    return Alg2Constants(alpha=alpha, delta=delta, sigma=sigma, beta=beta, mu=mu, eta=mu, n=n)


def iteration_count(n: int, epsilon: float, c: Alg1Constants | Alg2Constants) -> int:
    """Exact number of iterations: ceil(log((2n + a*sqrt(2n))/eps) / -log(1 - b/sqrt(2n)))."""
    if epsilon <= 0.0:
        raise InvalidParameter(f"epsilon must be positive, got {epsilon}")
    root = math.sqrt(2.0 * n)
    num = math.log((2.0 * n + c.alpha * root) / epsilon)
    den = -math.log(1.0 - c.beta / root)
    return _ceil_guarded(num / den)


def rank1_count_bound(n: int, n_iter: int, c: Alg2Constants) -> int:
    """Upper bound on total rank-1 updates: ceil(4*eta*(N-1)*sqrt(n) / ((1-eta)*log(1+delta)))."""
    if n_iter < 1:
        raise InvalidParameter(f"n_iter must be >= 1, got {n_iter}")
    if n_iter == 1:
        return 0
    if c.delta <= 0.0:
        raise InvalidParameter("rank-1 bound needs delta > 0")
    val = 4.0 * c.eta * (n_iter - 1) * math.sqrt(n) / ((1.0 - c.eta) * math.log1p(c.delta))
    return _ceil_guarded(val)


def certify(
    n: int,
    epsilon: float = DEFAULT_EPSILON,
    algorithm: str = "approx",
    alpha: float = DEFAULT_ALPHA,
    delta: float | None = None,
) -> Certificate:
    """Build the full execution-time certificate for a dimension-n box QP.

    The flop figure is a coarse cost model (factor/solve per iteration for
    the exact solver; one inversion plus rank-1 and matvec work for the
    approximated one), intended for platform sizing rather than as a
    contract.
    """
    if algorithm not in ("exact", "approx"):
        raise InvalidParameter(f"algorithm must be 'exact' or 'approx', got {algorithm!r}")
    if algorithm == "exact":
        c1 = alg1_constants(n, alpha)
        n_iter = iteration_count(n, epsilon, c1)
        flops = n_iter * (n**3 / 3.0 + 9.0 * n**2)
        return Certificate(
            n=n, epsilon=epsilon, algorithm="exact", n_iter=n_iter,
            n_rank1_bound=0, constants=c1, flops_estimate=flops,
        )
    c2 = alg2_constants(n, alpha, DEFAULT_DELTA if delta is None else delta)
    n_iter = iteration_count(n, epsilon, c2)
    n_rank1 = rank1_count_bound(n, n_iter, c2)
    flops = float(n**3) + 2.0 * n**2 * n_rank1 + 8.0 * n**2 * n_iter
    return Certificate(
        n=n, epsilon=epsilon, algorithm="approx", n_iter=n_iter,
        n_rank1_bound=n_rank1, constants=c2, flops_estimate=flops,
    )
