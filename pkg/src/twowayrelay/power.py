"""Per-stream power allocation for one (precoder, relay target) pair.

Each pair solves

    minimize    sum_l 1 / (1 + c_l z_l w_l)
    subject to  sum_l z_l <= P_T,  sum_l w_l <= P_R,  z, w > 0

by alternating exact water-filling over ``z`` (``w`` fixed) and ``w``
(``z`` fixed). Each half-step is a convex problem with a one-multiplier
KKT solution, so the objective never increases.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractViolation, NumericFailure

__all__ = [
    "ScalarProblem",
    "PowerAllocation",
    "waterfill_inner",
    "solve_pair",
    "check_convexity_condition",
    "kkt_residual",
]


@dataclass(frozen=True)
class ScalarProblem:
    """Stream gains ``c_l = lambda_l^2 / sigma2_n`` and the two budgets."""

    gains: np.ndarray
    p_t: float
    p_r: float

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gains, dtype=np.float64))
        if g.ndim != 1 or g.size == 0:
            raise ContractViolation("gains must be a non-empty vector")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ContractViolation("gains must be finite and strictly positive")
        if self.p_t <= 0 or self.p_r <= 0:
            raise ContractViolation("budgets must be strictly positive")
        object.__setattr__(self, "gains", g)


@dataclass
class PowerAllocation:
    z: np.ndarray
    w: np.ndarray
    objective: float
    iterations: int = 0
    converged: bool = True
    history: np.ndarray = field(default_factory=lambda: np.empty(0))


def waterfill_inner(c, fixed, budget: float, max_iter: int = 200) -> np.ndarray:
    """Minimize ``sum 1/(1 + a_l x_l)`` with ``a = c * fixed`` over the
    simplex ``sum x <= budget, x >= 0``.

    The KKT point is ``x_l = max(0, 1/sqrt(mu a_l) - 1/a_l)``; the multiplier
    is located by bisection so that the budget binds. Entries may be zero.
    """
    a = np.asarray(c, dtype=np.float64) * np.asarray(fixed, dtype=np.float64)
    if budget <= 0:
        raise ContractViolation("budget must be positive")
    if np.any(a <= 0) or not np.all(np.isfinite(a)):
        raise ContractViolation("products c * fixed must be finite and positive")
    x, ok = kernels.waterfill_inner(a, float(budget), int(max_iter))
    if not ok:
        raise NumericFailure(f"water-filling bisection failed after {max_iter} iterations")
    return x


def solve_pair(prob: ScalarProblem, tol: float = 1e-10, max_iter: int = 500) -> PowerAllocation:
    """Alternating water-filling from the uniform allocation.

    Stops when both the relative objective change and the largest
    budget-relative move of any variable fall below `tol`. If `max_iter` is
    hit, the best iterate is returned with ``converged=False``.
    """
    z, w, obj, it, conv, hist, ok = kernels.solve_pair(
        prob.gains, float(prob.p_t), float(prob.p_r), float(tol), int(max_iter)
    )
    if not ok:
        raise NumericFailure("water-filling step failed inside the pair solver")
    return PowerAllocation(z=np.asarray(z), w=np.asarray(w), objective=float(obj),
                           iterations=int(it), converged=bool(conv), history=np.asarray(hist))


def check_convexity_condition(z, w, c, sigma2_n: float = 1.0) -> np.ndarray:
    """Per-stream test of ``z_l w_l >= sigma2_n / (3 lambda_l^2)``.

    `c` holds the *squared singular values* ``lambda_l^2``; with
    ``sigma2_n = 1`` it may equally be the normalized gains.
    """
    z, w, c = (np.asarray(v, dtype=np.float64) for v in (z, w, c))
    # written as a product to keep the boundary case exact
    return 3.0 * c * z * w >= sigma2_n


def kkt_residual(prob: ScalarProblem, alloc: PowerAllocation) -> float:
    """Norm of the objective gradient projected onto both budget hyperplanes."""
    c, z, w = prob.gains, alloc.z, alloc.w
    den = (1.0 + c * z * w) ** 2
    gz = -c * w / den
    gw = -c * z / den
    return float(np.hypot(np.linalg.norm(gz - gz.mean()), np.linalg.norm(gw - gw.mean())))
