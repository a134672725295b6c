# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Euler kernel.

One tight loop per path: run the coefficient tape on the current state,
accumulate the matrix-vector product column by column, update, and track
explosion, ball exit, running sup, and requested snapshots.  Operation
order matches the numpy fallback so both backends agree to rounding
noise.  The path loop releases the GIL, so chunked calls can run on a
thread pool.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, isfinite, sin, sqrt

cnp.import_array()

DEF OP_CONST = 0
DEF OP_COORD = 1
DEF OP_SIN = 2
DEF OP_COS = 3
DEF OP_EXPDECAY = 4
DEF OP_MUL = 5
DEF OP_CLAMP = 6
DEF OP_SCALEADD = 7


def eval_tape(const int[:, ::1] ops, const double[:, ::1] consts, int n_reg,
              const int[::1] out_regs, pts_in):
    """Evaluate a tape at a batch of points; returns (B, n_out)."""
    pts_arr = np.ascontiguousarray(pts_in, dtype=np.float64)
    cdef const double[:, ::1] pts = pts_arr
    cdef Py_ssize_t B = pts.shape[0], n_out = out_regs.shape[0]
    out_arr = np.empty((B, n_out))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] regs = np.empty(n_reg)
    cdef Py_ssize_t b, i
    with nogil:
        for b in range(B):
            _tape(ops, consts, &regs[0], &pts[b, 0])
            for i in range(n_out):
                out[b, i] = regs[out_regs[i]]
    return out_arr


cdef inline void _tape(const int[:, ::1] ops, const double[:, ::1] consts,
                       double* regs, const double* pt) noexcept nogil:
    cdef Py_ssize_t t
    cdef int op
    cdef double u
    for t in range(ops.shape[0]):
        op = ops[t, 0]
        if op == OP_CONST:
            regs[ops[t, 1]] = consts[t, 0]
        elif op == OP_COORD:
            regs[ops[t, 1]] = pt[ops[t, 2]]
        elif op == OP_SIN:
            regs[ops[t, 1]] = sin(regs[ops[t, 2]])
        elif op == OP_COS:
            regs[ops[t, 1]] = cos(regs[ops[t, 2]])
        elif op == OP_EXPDECAY:
            u = regs[ops[t, 2]]
            regs[ops[t, 1]] = exp(-(u * u))
        elif op == OP_MUL:
            regs[ops[t, 1]] = regs[ops[t, 2]] * regs[ops[t, 3]]
        elif op == OP_CLAMP:
            u = regs[ops[t, 2]]
            if u < consts[t, 0]:
                u = consts[t, 0]
            if u > consts[t, 1]:
                u = consts[t, 1]
            regs[ops[t, 1]] = u
        elif op == OP_SCALEADD:
            regs[ops[t, 1]] = regs[ops[t, 2]] + consts[t, 0] * regs[ops[t, 3]]


def run_paths(const int[:, ::1] ops, const double[:, ::1] consts, int n_reg,
              const int[::1] out_regs, int rows, int cols,
              const double[:, ::1] v0, const double[:, :, ::1] inc,
              const long long[::1] snaps, const double[::1] center, double radius,
              int sup_dims,
              double[:, :, ::1] out_states, double[:, ::1] out_sup,
              long long[::1] out_exit, long long[::1] out_expl):
    cdef Py_ssize_t B = v0.shape[0], p = v0.shape[1]
    cdef Py_ssize_t n_steps = inc.shape[1], n_snaps = snaps.shape[0]
    cdef Py_ssize_t b, k, i, j, si
    cdef double[::1] regs = np.empty(n_reg)
    cdef double[::1] v = np.empty(p)
    cdef double[::1] vnew = np.empty(p)
    cdef double acc, dev, d2, cur_sup
    cdef double r2 = radius * radius
    cdef bint active, ok
    with nogil:
        for b in range(B):
            for i in range(p):
                v[i] = v0[b, i]
            active = True
            si = 0
            cur_sup = 0.0
            if si < n_snaps and snaps[si] == 0:
                for i in range(p):
                    out_states[b, si, i] = v[i]
                if sup_dims > 0:
                    out_sup[b, si] = cur_sup
                si += 1
            for k in range(1, n_steps + 1):
                if active:
                    _tape(ops, consts, &regs[0], &v[0])
                    ok = True
                    for i in range(rows):
                        acc = regs[out_regs[i * cols + 0]] * inc[b, k - 1, 0]
                        for j in range(1, cols):
                            acc = acc + regs[out_regs[i * cols + j]] * inc[b, k - 1, j]
                        vnew[i] = v[i] + acc
                        if not isfinite(vnew[i]):
                            ok = False
                    if not ok:
                        out_expl[b] = k
                        active = False
                    else:
                        for i in range(p):
                            v[i] = vnew[i]
                        if radius > 0.0:
                            d2 = 0.0
                            for i in range(p):
                                d2 += (v[i] - center[i]) * (v[i] - center[i])
                            if d2 > r2:
                                out_exit[b] = k
                                active = False
                if sup_dims > 0:
                    d2 = 0.0
                    for i in range(sup_dims):
                        d2 += (v[i] - v0[b, i]) * (v[i] - v0[b, i])
                    dev = sqrt(d2)
                    if dev > cur_sup:
                        cur_sup = dev
                if si < n_snaps and snaps[si] == k:
                    for i in range(p):
                        out_states[b, si, i] = v[i]
                    if sup_dims > 0:
                        out_sup[b, si] = cur_sup
                    si += 1
