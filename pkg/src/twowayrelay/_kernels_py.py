"""Pure-Python/numpy kernels; reference semantics for ``_kernels.pyx``.

Status codes instead of exceptions so both backends share one wrapper:
``waterfill_inner`` returns ``(x, ok)``; ``solve_pair`` returns
``(z, w, objective, iterations, converged, history, ok)`` where ``ok`` is
false if an inner water-filling step failed.
"""
import math

import numpy as np

BACKEND = "python"

_CLAMP = 1e-12


def _waterfill(a, budget, max_iter):
    n = a.shape[0]
    inv_sqrt = [1.0 / math.sqrt(a[k]) for k in range(n)]
    inv_a = [1.0 / a[k] for k in range(n)]
    lo = 0.0
    hi = (budget + sum(inv_a)) / sum(inv_sqrt)
    ok = False
    t = hi
    for _ in range(max_iter):
        t = 0.5 * (lo + hi)
        if t <= lo or t >= hi:
            # interval exhausted at machine precision
            ok = True
            break
        s = 0.0
        for k in range(n):
            if t > inv_sqrt[k]:
                s += inv_sqrt[k] * (t - inv_sqrt[k])
        if abs(s - budget) <= 1e-13 * budget:
            ok = True
            break
        if s < budget:
            lo = t
        else:
            hi = t
    # Exact solution on the active set S. With
    #   g_k(S) = budget + sum_{j in S} r_j (r_j - r_k),  r = 1/sqrt(a),
    # x_k = r_k g_k / sum_S r_j, and k belongs to S iff g_k(S) > 0. The
    # bisection level seeds S; the fixed point is then found exactly, free
    # of the level*r - 1/a cancellation.
    r = inv_sqrt
    kmin = min(range(n), key=lambda k: r[k])
    active = [t > r[k] or k == kmin for k in range(n)]

    def g_all(act):
        return [budget + sum(r[j] * (r[j] - r[k]) for j in range(n) if act[j]) for k in range(n)]

    stable = False
    for _ in range(n + 1):
        g = g_all(active)
        new = [g[k] > 0.0 for k in range(n)]
        new[kmin] = True
        if new == active:
            stable = True
            break
        active = new
    if not stable:
        # prefix scan over streams sorted by r: the largest valid prefix
        order = sorted(range(n), key=lambda k: r[k])
        for m in range(n, 0, -1):
            active = [False] * n
            for k in order[:m]:
                active[k] = True
            g = g_all(active)
            if g[order[m - 1]] > 0.0:
                break
    den = sum(r[k] for k in range(n) if active[k])
    g = g_all(active)
    x = np.array([r[k] * g[k] / den if active[k] else 0.0 for k in range(n)])
    x[x < 0.0] = 0.0
    tot = x.sum()
    if tot <= 0.0 or abs(tot - budget) > 1e-10 * budget:
        return x, False
    x *= budget / tot
    return x, ok


def waterfill_inner(a, budget, max_iter=200):
    a = np.ascontiguousarray(a, dtype=np.float64)
    return _waterfill(a, float(budget), int(max_iter))


def _clamp(x, budget):
    eps = _CLAMP * budget
    if (x <= eps).any():
        x = np.where(x <= eps, eps, x)
        x *= budget / x.sum()
    return x


def pair_objective(c, z, w):
    return float(np.sum(1.0 / (1.0 + c * z * w)))


def solve_pair(c, p_t, p_r, tol=1e-10, max_iter=500):
    c = np.ascontiguousarray(c, dtype=np.float64)
    n = c.shape[0]
    z = np.full(n, p_t / n)
    w = np.full(n, p_r / n)
    obj = pair_objective(c, z, w)
    history = [obj]
    best = (z.copy(), w.copy(), obj)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        z_old = z
        w_old = w
        z_new, ok1 = _waterfill(c * w, p_t, 200)
        if not ok1:
            return best[0], best[1], best[2], it, False, np.array(history), False
        z = _clamp(z_new, p_t)
        w_new, ok2 = _waterfill(c * z, p_r, 200)
        if not ok2:
            return best[0], best[1], best[2], it, False, np.array(history), False
        w = _clamp(w_new, p_r)
        new = pair_objective(c, z, w)
        history.append(new)
        if new <= best[2]:
            best = (z.copy(), w.copy(), new)
        step = max(np.max(np.abs(z - z_old)) / p_t, np.max(np.abs(w - w_old)) / p_r)
        if abs(obj - new) <= tol * max(abs(obj), 1e-300) and step <= tol:
            converged = True
            obj = new
            break
        obj = new
    return best[0], best[1], best[2], it, converged, np.array(history), True


def count_bit_errors(est, bits):
    """Hard-decide QPSK soft estimates and count mismatches with `bits`.

    `est` is any complex array; `bits` has the same shape plus a trailing 2.
    """
    est = np.asarray(est)
    errs = np.count_nonzero((est.real < 0) != bits[..., 0].astype(bool))
    errs += np.count_nonzero((est.imag < 0) != bits[..., 1].astype(bool))
    return int(errs)
