# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels.

Semantics (update order, tie-breaks, summation order) mirror
``hydrasense._kernels._numpy`` exactly; see that module for the readable
reference.
"""

from libc.stdlib cimport free, malloc, qsort
from libc.math cimport fabs, log, NAN

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double _EPS = 1e-4


cdef struct ValIdx:
    double v
    Py_ssize_t i


cdef int _cmp_validx(const void* pa, const void* pb) noexcept nogil:
    cdef const ValIdx* a = <const ValIdx*> pa
    cdef const ValIdx* b = <const ValIdx*> pb
    if a.v < b.v:
        return -1
    if a.v > b.v:
        return 1
    if a.i < b.i:
        return -1
    if a.i > b.i:
        return 1
    return 0


def knn_predict(train_x, train_y, query_x, k):
    """See _numpy.knn_predict: (distance, index) order, nearest tie-break."""
    cdef double[:, ::1] tx = np.ascontiguousarray(train_x, dtype=np.float64)
    cdef double[:, ::1] qx = np.ascontiguousarray(query_x, dtype=np.float64)
    cdef long[::1] ty = np.ascontiguousarray(train_y, dtype=np.int64)
    cdef Py_ssize_t n = tx.shape[0], d = tx.shape[1], nq = qx.shape[0]
    cdef Py_ssize_t kk = k
    out_arr = np.empty(nq, dtype=np.int64)
    cdef long[::1] out = out_arr
    cdef ValIdx* buf = <ValIdx*> malloc(n * sizeof(ValIdx))
    if buf == NULL:
        raise MemoryError()
    cdef Py_ssize_t q, i, j
    cdef double acc, diff
    cdef long pos_votes
    try:
        for q in range(nq):
            for i in range(n):
                acc = 0.0
                for j in range(d):
                    diff = qx[q, j] - tx[i, j]
                    acc += diff * diff
                buf[i].v = acc
                buf[i].i = i
            qsort(buf, n, sizeof(ValIdx), _cmp_validx)
            pos_votes = 0
            for i in range(kk):
                pos_votes += ty[buf[i].i]
            if 2 * pos_votes > kk:
                out[q] = 1
            elif 2 * pos_votes < kk:
                out[q] = 0
            else:
                out[q] = ty[buf[0].i]
    finally:
        free(buf)
    return out_arr


cdef double _objective(double[:, ::1] K, double[::1] y, double[::1] alpha):
    cdef Py_ssize_t n = alpha.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, row
    for i in range(n):
        if alpha[i] == 0.0:
            continue
        row = 0.0
        for j in range(n):
            row += alpha[j] * y[j] * K[i, j]
        acc += alpha[i] * y[i] * row
    cdef double s = 0.0
    for i in range(n):
        s += alpha[i]
    return 0.5 * acc - s


cdef bint _take_step(
    double[:, ::1] K, double[::1] y, double[::1] alpha, double[::1] E,
    double* b, double C, Py_ssize_t i1, Py_ssize_t i2,
) noexcept:
    cdef double a1, a2, y1, y2, E1, E2, s, L, H
    cdef double k11, k12, k22, eta, a2new, a1new
    cdef double f1, f2, L1, H1, obj_l, obj_h
    cdef double b1, b2, bnew, s1, s2, db
    cdef Py_ssize_t n = alpha.shape[0], t
    if i1 == i2:
        return False
    a1 = alpha[i1]; a2 = alpha[i2]
    y1 = y[i1]; y2 = y[i2]
    E1 = E[i1]; E2 = E[i2]
    s = y1 * y2
    if s > 0:
        L = a1 + a2 - C
        if L < 0.0:
            L = 0.0
        H = a1 + a2
        if H > C:
            H = C
    else:
        L = a2 - a1
        if L < 0.0:
            L = 0.0
        H = C + a2 - a1
        if H > C:
            H = C
    if L == H:
        return False
    k11 = K[i1, i1]; k12 = K[i1, i2]; k22 = K[i2, i2]
    eta = k11 + k22 - 2.0 * k12
    if eta > 0.0:
        a2new = a2 + y2 * (E1 - E2) / eta
        if a2new < L:
            a2new = L
        elif a2new > H:
            a2new = H
    else:
        f1 = y1 * (E1 + b[0]) - a1 * k11 - s * a2 * k12
        f2 = y2 * (E2 + b[0]) - s * a1 * k12 - a2 * k22
        L1 = a1 + s * (a2 - L)
        H1 = a1 + s * (a2 - H)
        obj_l = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
        obj_h = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
        if obj_l < obj_h - 1e-12:
            a2new = L
        elif obj_l > obj_h + 1e-12:
            a2new = H
        else:
            return False
    if fabs(a2new - a2) < _EPS * (a2new + a2 + _EPS):
        return False
    a1new = a1 + s * (a2 - a2new)
    b1 = E1 + y1 * (a1new - a1) * k11 + y2 * (a2new - a2) * k12 + b[0]
    b2 = E2 + y1 * (a1new - a1) * k12 + y2 * (a2new - a2) * k22 + b[0]
    if 0.0 < a1new < C:
        bnew = b1
    elif 0.0 < a2new < C:
        bnew = b2
    else:
        bnew = 0.5 * (b1 + b2)
    s1 = y1 * (a1new - a1)
    s2 = y2 * (a2new - a2)
    db = bnew - b[0]
    for t in range(n):
        E[t] = E[t] + (s1 * K[i1, t] + s2 * K[i2, t] + db)
    alpha[i1] = a1new
    alpha[i2] = a2new
    b[0] = bnew
    return True


cdef bint _examine(
    double[:, ::1] K, double[::1] y, double[::1] alpha, double[::1] E,
    double* b, double C, double tol, Py_ssize_t i2, Py_ssize_t* scratch,
) noexcept:
    cdef Py_ssize_t n = alpha.shape[0]
    cdef double y2 = y[i2], a2 = alpha[i2], E2 = E[i2]
    cdef double r2 = E2 * y2
    cdef Py_ssize_t n_nb = 0, i, i1, best
    cdef double gap, best_gap
    if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
        return False
    for i in range(n):
        if 0.0 < alpha[i] < C:
            scratch[n_nb] = i
            n_nb += 1
    if n_nb > 1:
        best = scratch[0]
        best_gap = fabs(E[scratch[0]] - E2)
        for i in range(1, n_nb):
            gap = fabs(E[scratch[i]] - E2)
            if gap > best_gap:
                best_gap = gap
                best = scratch[i]
        if _take_step(K, y, alpha, E, b, C, best, i2):
            return True
    cdef Py_ssize_t start = (i2 + 1) % n
    for i in range(n_nb):
        if scratch[i] >= start:
            if _take_step(K, y, alpha, E, b, C, scratch[i], i2):
                return True
    for i in range(n_nb):
        if scratch[i] < start:
            if _take_step(K, y, alpha, E, b, C, scratch[i], i2):
                return True
    for i in range(n):
        if _take_step(K, y, alpha, E, b, C, (start + i) % n, i2):
            return True
    return False


def smo_solve(K, y, C, tol, max_sweeps=1000, record_objective=False):
    """See _numpy.smo_solve."""
    cdef double[:, ::1] Km = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] ym = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = ym.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    E_arr = -np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] E = E_arr
    cdef double b = 0.0
    cdef double Cc = C, tolc = tol
    cdef Py_ssize_t sweeps = 0, max_s = max_sweeps
    cdef bint examine_all = True
    cdef Py_ssize_t num_changed = 1
    cdef Py_ssize_t i
    cdef bint record = bool(record_objective)
    objective = []
    cdef Py_ssize_t* scratch = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t* sweep_buf = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t n_nb, j
    if scratch == NULL or sweep_buf == NULL:
        free(scratch)
        free(sweep_buf)
        raise MemoryError()
    try:
        while (num_changed > 0 or examine_all) and sweeps < max_s:
            num_changed = 0
            if examine_all:
                for i in range(n):
                    num_changed += _examine(Km, ym, alpha, E, &b, Cc, tolc, i, scratch)
            else:
                # Freeze the non-bound set for the whole sweep (the
                # reference backend iterates over a snapshot).
                n_nb = 0
                for i in range(n):
                    if 0.0 < alpha[i] < Cc:
                        sweep_buf[n_nb] = i
                        n_nb += 1
                for j in range(n_nb):
                    num_changed += _examine(Km, ym, alpha, E, &b, Cc, tolc, sweep_buf[j], scratch)
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True
            sweeps += 1
            if record:
                objective.append(_objective(Km, ym, alpha))
    finally:
        free(scratch)
        free(sweep_buf)
    return alpha_arr, b, int(sweeps), np.asarray(objective)


def best_split(X, y, w):
    """See _numpy.best_split: identical scan order and tie-breaks."""
    cdef double[:, ::1] Xm = np.ascontiguousarray(X, dtype=np.float64)
    cdef long[::1] ym = np.ascontiguousarray(y, dtype=np.int64)
    cdef double[::1] wm = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = Xm.shape[0], d = Xm.shape[1]
    cdef double W = 0.0, Wp = 0.0
    cdef Py_ssize_t i, f
    for i in range(n):
        W += wm[i]
    for i in range(n):
        Wp += wm[i] * ym[i]
    if W <= 0.0:
        return -1, float("nan"), 0.0
    cdef double parent = 1.0 - (Wp / W) ** 2 - ((W - Wp) / W) ** 2
    cdef Py_ssize_t best_f = -1
    cdef double best_thr = NAN, best_dec = 0.0
    cdef ValIdx* buf = <ValIdx*> malloc(n * sizeof(ValIdx))
    if buf == NULL:
        raise MemoryError()
    cdef double run_w, run_wp, WL, WpL, WR, WpR, gl, gr, dec
    cdef double feat_best_dec, feat_best_thr
    cdef bint has_cut
    cdef Py_ssize_t pos, idx
    try:
        for f in range(d):
            for i in range(n):
                buf[i].v = Xm[i, f]
                buf[i].i = i
            qsort(buf, n, sizeof(ValIdx), _cmp_validx)
            run_w = 0.0
            run_wp = 0.0
            feat_best_dec = 0.0
            feat_best_thr = 0.0
            has_cut = False
            for pos in range(n - 1):
                idx = buf[pos].i
                run_w += wm[idx]
                run_wp += wm[idx] * ym[idx]
                if buf[pos].v < buf[pos + 1].v:
                    WL = run_w
                    WpL = run_wp
                    WR = W - WL
                    WpR = Wp - WpL
                    gl = 1.0 - (WpL / WL) ** 2 - ((WL - WpL) / WL) ** 2
                    gr = 1.0 - (WpR / WR) ** 2 - ((WR - WpR) / WR) ** 2
                    dec = parent - (WL * gl + WR * gr) / W
                    if (not has_cut) or dec > feat_best_dec:
                        feat_best_dec = dec
                        feat_best_thr = 0.5 * (buf[pos].v + buf[pos + 1].v)
                        has_cut = True
            if has_cut and feat_best_dec > best_dec:
                best_f = f
                best_thr = feat_best_thr
                best_dec = feat_best_dec
    finally:
        free(buf)
    return int(best_f), float(best_thr), float(best_dec)
