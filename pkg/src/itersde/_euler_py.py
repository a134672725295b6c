"""Pure-numpy Euler kernel, the fallback when the C extension is absent.

Mirrors the compiled kernel's operation order exactly: the tape runs
opcode by opcode and the state update accumulates the matrix-vector
product column by column, so both backends agree to rounding noise.
"""

import numpy as np

from .expressions import (OP_CLAMP, OP_CONST, OP_COORD, OP_COS, OP_EXPDECAY,
                          OP_MUL, OP_SCALEADD, OP_SIN)


def eval_tape(ops, consts, n_reg, out_regs, pts):
    """Evaluate a tape at a batch of points; returns (B, n_out)."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    regs = np.empty((n_reg, pts.shape[0]))
    _run_tape(ops, consts, regs, pts)
    return regs[out_regs].T.copy()


def _run_tape(ops, consts, regs, pts):
    for t in range(ops.shape[0]):
        op, dst, s1, s2 = ops[t]
        c1, c2 = consts[t]
        if op == OP_CONST:
            regs[dst] = c1
        elif op == OP_COORD:
            regs[dst] = pts[:, s1]
        elif op == OP_SIN:
            np.sin(regs[s1], out=regs[dst])
        elif op == OP_COS:
            np.cos(regs[s1], out=regs[dst])
        elif op == OP_EXPDECAY:
            np.exp(-(regs[s1] ** 2), out=regs[dst])
        elif op == OP_MUL:
            np.multiply(regs[s1], regs[s2], out=regs[dst])
        elif op == OP_CLAMP:
            np.clip(regs[s1], c1, c2, out=regs[dst])
        elif op == OP_SCALEADD:
            regs[dst] = regs[s1] + c1 * regs[s2]
        else:
            raise ValueError(f"bad opcode {op}")


def run_paths(ops, consts, n_reg, out_regs, rows, cols, v0, inc, snaps,
              center, radius, sup_dims, out_states, out_sup, out_exit, out_expl):
    with np.errstate(over="ignore", invalid="ignore"):
        _run_paths(ops, consts, n_reg, out_regs, rows, cols, v0, inc, snaps,
                   center, radius, sup_dims, out_states, out_sup, out_exit,
                   out_expl)


def _run_paths(ops, consts, n_reg, out_regs, rows, cols, v0, inc, snaps,
               center, radius, sup_dims, out_states, out_sup, out_exit, out_expl):
    # overflow to inf is the explosion signal, so FP warnings stay off
    # (the compiled kernel is silent the same way)
    B, p = v0.shape
    n_steps = inc.shape[1]
    n_snaps = snaps.shape[0]
    v = v0.copy()
    active = np.ones(B, dtype=bool)
    regs = np.empty((n_reg, B))
    acc = np.empty((B, rows))
    cur_sup = np.zeros(B)
    r2 = radius * radius
    si = 0
    if si < n_snaps and snaps[si] == 0:
        out_states[:, si, :] = v
        if sup_dims > 0:
            out_sup[:, si] = cur_sup
        si += 1
    for k in range(1, n_steps + 1):
        if active.any():
            _run_tape(ops, consts, regs, v)
            dz = inc[:, k - 1, :]
            for i in range(rows):
                a = regs[out_regs[i * cols + 0]] * dz[:, 0]
                for j in range(1, cols):
                    a = a + regs[out_regs[i * cols + j]] * dz[:, j]
                acc[:, i] = a
            vnew = v + acc
            ok = np.isfinite(vnew).all(axis=1)
            out_expl[active & ~ok] = k
            moved = active & ok
            v[moved] = vnew[moved]
            active = moved
            if radius > 0.0:
                d2 = ((v - center[None, :]) ** 2).sum(axis=1)
                exited = active & (d2 > r2)
                out_exit[exited] = k
                active &= ~exited
        if sup_dims > 0:
            dev = np.sqrt(((v[:, :sup_dims] - v0[:, :sup_dims]) ** 2).sum(axis=1))
            np.maximum(cur_sup, dev, out=cur_sup)
        if si < n_snaps and snaps[si] == k:
            out_states[:, si, :] = v
            if sup_dims > 0:
                out_sup[:, si] = cur_sup
            si += 1
