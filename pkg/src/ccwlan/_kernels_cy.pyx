# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef double _top_sum(const double[::1] grad, const cnp.int32_t[::1] users,
                     Py_ssize_t lo, Py_ssize_t hi, int cap, double* buf) noexcept nogil:
    cdef Py_ssize_t n = hi - lo, i, j
    cdef double s = 0.0, best, v
    if cap >= n:
        for i in range(lo, hi):
            s += grad[users[i]]
        return s
    if cap == 1:
        best = grad[users[lo]]
        for i in range(lo + 1, hi):
            v = grad[users[i]]
            if v > best:
                best = v
        return best
    # partial insertion sort, descending, keeping the first `cap`
    for i in range(n):
        v = grad[users[lo + i]]
        j = i
        while j > 0 and buf[j - 1] < v:
            buf[j] = buf[j - 1]
            j -= 1
        buf[j] = v
    for i in range(cap):
        s += buf[i]
    return s


def family_scores(grad, fam_ptr, grp_ptr, grp_rate, grp_cap, users):
    cdef const double[::1] g = np.ascontiguousarray(grad, dtype=np.float64)
    cdef const cnp.int64_t[::1] fp = np.ascontiguousarray(fam_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] gp = np.ascontiguousarray(grp_ptr, dtype=np.int64)
    cdef const double[::1] rate = np.ascontiguousarray(grp_rate, dtype=np.float64)
    cdef const cnp.int32_t[::1] cap = np.ascontiguousarray(grp_cap, dtype=np.int32)
    cdef const cnp.int32_t[::1] us = np.ascontiguousarray(users, dtype=np.int32)
    cdef Py_ssize_t n_fam = fp.shape[0] - 1, f, k, max_size = 1
    for k in range(gp.shape[0] - 1):
        if gp[k + 1] - gp[k] > max_size:
            max_size = gp[k + 1] - gp[k]
    out = np.zeros(n_fam, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] buf = np.empty(max_size, dtype=np.float64)
    cdef double s
    with nogil:
        for f in range(n_fam):
            s = 0.0
            for k in range(fp[f], fp[f + 1]):
                s += rate[k] * _top_sum(g, us, gp[k], gp[k + 1], cap[k], &buf[0])
            o[f] = s
    return out


def pareto_mask(vectors):
    V_arr = np.ascontiguousarray(vectors, dtype=np.float64)
    cdef Py_ssize_t n = V_arr.shape[0]
    keep_arr = np.zeros(n, dtype=bool)
    if n == 0:
        return keep_arr
    cdef Py_ssize_t d = V_arr.shape[1]
    order_arr = np.lexsort(tuple(-V_arr[:, j] for j in range(d - 1, -1, -1)) + (-V_arr.sum(axis=1),))
    cdef const double[:, ::1] V = V_arr
    cdef const cnp.int64_t[::1] order = np.ascontiguousarray(order_arr, dtype=np.int64)
    cdef cnp.int64_t[::1] kept = np.empty(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] keep = keep_arr.view(np.uint8)
    cdef Py_ssize_t nk = 0, a, b, j, idx, kidx
    cdef bint dominated, ge
    with nogil:
        for a in range(n):
            idx = order[a]
            dominated = False
            for b in range(nk):
                kidx = kept[b]
                ge = True
                for j in range(d):
                    if V[kidx, j] < V[idx, j]:
                        ge = False
                        break
                if ge:
                    dominated = True
                    break
            if not dominated:
                kept[nk] = idx
                nk += 1
                keep[idx] = 1
    return keep_arr
