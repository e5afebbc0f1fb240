"""Fast invariant checks behind ``twr selftest``."""
from __future__ import annotations

import time
from typing import Callable

import numpy as np

from . import linalg
from .channel import SystemConfig, draw_channels, stream
from .design import design
from .harness import transmit
from .power import ScalarProblem, solve_pair

__all__ = ["CHECKS", "run_selftest", "grid_pair_objective"]


def _rand(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def check_svd_order():
    rng = np.random.default_rng(11)
    for shape in ((8, 2), (4, 4), (3, 6)):
        s = linalg.svd_ascending(_rand(rng, shape)).sigma
        if np.any(np.diff(s) < 0):
            raise AssertionError(f"singular values not ascending for shape {shape}: {s}")


def check_svd_reconstruction():
    rng = np.random.default_rng(12)
    for shape in ((8, 2), (4, 4), (3, 6)):
        M = _rand(rng, shape)
        svd = linalg.svd_ascending(M)
        err = np.linalg.norm(svd.reconstruct() - M) / np.linalg.norm(M)
        if err > 1e-10:
            raise AssertionError(f"SVD reconstruction error {err:.2e}")


def check_evd():
    rng = np.random.default_rng(13)
    X = _rand(rng, (5, 5))
    A = X @ X.conj().T
    U, lam = linalg.evd_hermitian_ascending(A)
    if np.any(np.diff(lam) < 0):
        raise AssertionError("eigenvalues not ascending")
    if np.linalg.norm(U @ np.diag(lam) @ U.conj().T - A) > 1e-10 * np.linalg.norm(A):
        raise AssertionError("EVD reconstruction failed")


def check_pinv():
    rng = np.random.default_rng(14)
    M = _rand(rng, (4, 8))
    X = linalg.pinv(M)
    if np.linalg.norm(M @ X - np.eye(4)) > 1e-9:
        raise AssertionError("M pinv(M) != I for full-row-rank M")
    if np.linalg.norm(X @ M @ X - X) > 1e-9:
        raise AssertionError("pinv(M) M pinv(M) != pinv(M)")


def grid_pair_objective(c, p_t, p_r, step=1e-3):
    """Two-stream grid search over both (binding) budget simplices."""
    t = np.arange(step, 1.0, step)
    z1 = (t * p_t)[:, None]
    w1 = (t * p_r)[None, :]
    f = 1.0 / (1.0 + c[0] * z1 * w1) + 1.0 / (1.0 + c[1] * (p_t - z1) * (p_r - w1))
    return float(f.min())


def check_allocation_oracle():
    for c, pt, pr in (((1.0, 4.0), 2.0, 1.0), ((0.7, 9.0), 3.0, 5.0), ((12.0, 30.0), 1.0, 0.5)):
        c = np.array(c)
        alloc = solve_pair(ScalarProblem(c, pt, pr))
        ref = grid_pair_objective(c, pt, pr)
        if alloc.objective > ref + 1e-4:
            raise AssertionError(f"allocation {alloc.objective:.6f} worse than grid {ref:.6f} for c={c}")


def check_noiseless_recovery():
    cfg = SystemConfig(sigma2_w=1e-12, sigma2_n1=1e-12, sigma2_n2=1e-12)
    ch = draw_channels(cfg, stream(5, 0, "H"), stream(5, 0, "G"))
    sol = design(ch, cfg)
    errors = transmit(ch, sol, cfg, 5, 0, 1000)
    if errors:
        raise AssertionError(f"{errors} bit errors without noise")


CHECKS: list[tuple[str, Callable[[], None]]] = [
    ("svd-ascending-order", check_svd_order),
    ("svd-reconstruction", check_svd_reconstruction),
    ("evd-hermitian", check_evd),
    ("pinv-identities", check_pinv),
    ("allocation-grid-oracle", check_allocation_oracle),
    ("noiseless-recovery", check_noiseless_recovery),
]


def run_selftest(report: Callable[[str], None] = print) -> list[str]:
    """Run all checks; return the names of those that failed."""
    failed = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        try:
            fn()
        except Exception as exc:  # any failure is reported by name
            failed.append(name)
            report(f"FAIL {name}: {exc}")
        else:
            report(f"ok   {name} ({time.perf_counter() - t0:.2f}s)")
    return failed
