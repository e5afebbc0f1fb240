# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

BACKEND = "cython"

cdef double _CLAMP = 1e-12


cdef int _waterfill(const double[::1] a, double budget, int max_iter,
                    double[::1] x, double[::1] inv_sqrt, double[::1] act) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], k, j, rep, kmin, m, cnt
    cdef double lo = 0.0, hi, t, s, den, acc, tot, flag, sum_is = 0.0, sum_ia = 0.0
    cdef int it, ok = 0, stable, changed, last_ok
    for k in range(n):
        inv_sqrt[k] = 1.0 / sqrt(a[k])
        sum_is += inv_sqrt[k]
        sum_ia += 1.0 / a[k]
    hi = (budget + sum_ia) / sum_is
    t = hi
    for it in range(max_iter):
        t = 0.5 * (lo + hi)
        if t <= lo or t >= hi:
            ok = 1
            break
        s = 0.0
        for k in range(n):
            if t > inv_sqrt[k]:
                s += inv_sqrt[k] * (t - inv_sqrt[k])
        if fabs(s - budget) <= 1e-13 * budget:
            ok = 1
            break
        if s < budget:
            lo = t
        else:
            hi = t
    # exact active set: k active iff g_k(S) = budget + sum_S r_j (r_j - r_k) > 0
    kmin = 0
    for k in range(n):
        if inv_sqrt[k] < inv_sqrt[kmin]:
            kmin = k
    for k in range(n):
        act[k] = 1.0 if (t > inv_sqrt[k] or k == kmin) else 0.0
    stable = 0
    for rep in range(n + 1):
        changed = 0
        for k in range(n):
            acc = budget
            for j in range(n):
                if act[j] != 0.0:
                    acc += inv_sqrt[j] * (inv_sqrt[j] - inv_sqrt[k])
            x[k] = acc
        for k in range(n):
            flag = 1.0 if (x[k] > 0.0 or k == kmin) else 0.0
            if flag != act[k]:
                changed = 1
            act[k] = flag
        if not changed:
            stable = 1
            break
    if not stable:
        # largest prefix (by increasing r) whose last member stays positive
        for m in range(n, 0, -1):
            for k in range(n):
                cnt = 0
                for j in range(n):
                    if inv_sqrt[j] < inv_sqrt[k] or (inv_sqrt[j] == inv_sqrt[k] and j < k):
                        cnt += 1
                act[k] = 1.0 if cnt < m else 0.0
            last_ok = 1
            for k in range(n):
                if act[k] != 0.0:
                    acc = budget
                    for j in range(n):
                        if act[j] != 0.0:
                            acc += inv_sqrt[j] * (inv_sqrt[j] - inv_sqrt[k])
                    if acc <= 0.0 and k != kmin:
                        last_ok = 0
            if last_ok:
                break
    den = 0.0
    for k in range(n):
        if act[k] != 0.0:
            den += inv_sqrt[k]
    for k in range(n):
        if act[k] == 0.0:
            x[k] = 0.0
        else:
            acc = budget
            for j in range(n):
                if act[j] != 0.0:
                    acc += inv_sqrt[j] * (inv_sqrt[j] - inv_sqrt[k])
            x[k] = inv_sqrt[k] * acc / den
    tot = 0.0
    for k in range(n):
        if x[k] < 0.0:
            x[k] = 0.0
        tot += x[k]
    if tot <= 0.0 or fabs(tot - budget) > 1e-10 * budget:
        return 0
    for k in range(n):
        x[k] *= budget / tot
    return ok


cdef void _clamp(double[::1] x, double budget) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], k
    cdef double eps = _CLAMP * budget, tot = 0.0
    cdef int hit = 0
    for k in range(n):
        if x[k] <= eps:
            x[k] = eps
            hit = 1
        tot += x[k]
    if hit:
        for k in range(n):
            x[k] *= budget / tot


cdef double _objective(const double[::1] c, const double[::1] z, const double[::1] w) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0
    for k in range(c.shape[0]):
        s += 1.0 / (1.0 + c[k] * z[k] * w[k])
    return s


def waterfill_inner(a, double budget, int max_iter=200):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0]
    x = np.empty(n)
    cdef double[::1] xv = x
    cdef double[::1] s1 = np.empty(n)
    cdef double[::1] s2 = np.empty(n)
    ok = _waterfill(av, budget, max_iter, xv, s1, s2)
    return x, bool(ok)


def pair_objective(c, z, w):
    return float(_objective(np.ascontiguousarray(c, dtype=np.float64),
                            np.ascontiguousarray(z, dtype=np.float64),
                            np.ascontiguousarray(w, dtype=np.float64)))


def solve_pair(c, double p_t, double p_r, double tol=1e-10, int max_iter=500):
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef Py_ssize_t n = cv.shape[0], k
    z = np.full(n, p_t / n)
    w = np.full(n, p_r / n)
    bz = z.copy()
    bw = w.copy()
    cdef double[::1] zv = z, wv = w, bzv = bz, bwv = bw
    cdef double[::1] a = np.empty(n), s1 = np.empty(n), s2 = np.empty(n)
    cdef double[::1] zo = np.empty(n), wo = np.empty(n)
    cdef double step
    history = np.empty(max_iter + 1)
    cdef double[::1] hv = history
    cdef double obj = _objective(cv, zv, wv), new, best
    cdef int it = 0, converged = 0, ok = 1
    best = obj
    hv[0] = obj
    with nogil:
        for it in range(1, max_iter + 1):
            for k in range(n):
                zo[k] = zv[k]
                wo[k] = wv[k]
                a[k] = cv[k] * wv[k]
            if not _waterfill(a, p_t, 200, zv, s1, s2):
                ok = 0
                break
            _clamp(zv, p_t)
            for k in range(n):
                a[k] = cv[k] * zv[k]
            if not _waterfill(a, p_r, 200, wv, s1, s2):
                ok = 0
                break
            _clamp(wv, p_r)
            new = _objective(cv, zv, wv)
            hv[it] = new
            if new <= best:
                best = new
                for k in range(n):
                    bzv[k] = zv[k]
                    bwv[k] = wv[k]
            step = 0.0
            for k in range(n):
                if fabs(zv[k] - zo[k]) / p_t > step:
                    step = fabs(zv[k] - zo[k]) / p_t
                if fabs(wv[k] - wo[k]) / p_r > step:
                    step = fabs(wv[k] - wo[k]) / p_r
            if fabs(obj - new) <= tol * (obj if obj > 1e-300 else 1e-300) and step <= tol:
                converged = 1
                obj = new
                break
            obj = new
    if not ok:
        return bz, bw, best, it, False, history[:it].copy(), False
    return bz, bw, best, it, bool(converged), history[:it + 1].copy(), True


def count_bit_errors(est, bits):
    cdef const double complex[::1] e = np.ascontiguousarray(est, dtype=np.complex128).ravel()
    cdef const cnp.uint8_t[::1] b = np.ascontiguousarray(bits, dtype=np.uint8).ravel()
    cdef Py_ssize_t k, n = e.shape[0]
    cdef long long errs = 0
    if b.shape[0] != 2 * n:
        raise ValueError("bits must hold two bits per symbol")
    with nogil:
        for k in range(n):
            if (e[k].real < 0) != (b[2 * k] != 0):
                errs += 1
            if (e[k].imag < 0) != (b[2 * k + 1] != 0):
                errs += 1
    return int(errs)
