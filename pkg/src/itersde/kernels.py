"""Euler kernel backend selection.

The compiled extension is preferred when importable; setting the
environment variable ``ITERSDE_PURE_PY=1`` forces the numpy fallback.
Both backends implement the same two entry points (``eval_tape``,
``run_paths``) with identical operation order.
"""

import os

import numpy as np

from . import _euler_py
from .errors import ItersdeError, ShapeError

_env = os.environ.get("ITERSDE_PURE_PY", "").strip().lower()
_force_py = _env not in ("", "0", "false", "no")

_compiled = None
if not _force_py:
    try:
        from . import _euler_c as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    _impl = _compiled
    KERNEL_BACKEND = "compiled"
else:
    _impl = _euler_py
    KERNEL_BACKEND = "python"


def _module_for(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _euler_py
    if backend == "compiled":
        if _compiled is None:
            raise ItersdeError("compiled kernel is not available")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")


def available_backends():
    return ("python",) if _compiled is None else ("python", "compiled")


def eval_tape(tape, pts, backend=None):
    """Evaluate a coefficient tape at a batch of points (B, in_dim)."""
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != tape.in_dim:
        raise ShapeError(f"points shape {pts.shape} does not match tape input "
                         f"dimension {tape.in_dim}")
    mod = _module_for(backend)
    return mod.eval_tape(tape.ops, tape.consts, tape.n_reg, tape.out_regs, pts)


def run_paths(tape, rows, cols, v0, increments, snaps, center=None,
              radius=0.0, sup_dims=0, backend=None):
    """Drive a batch of Euler paths through one coefficient tape.

    v0: (B, p) starts; increments: (B, n_steps, cols) driver increments;
    snaps: strictly increasing grid indices in [0, n_steps] to record.
    States freeze at the first non-finite update (explosion) or, when
    ``radius > 0``, at the first grid point outside the ball around
    ``center`` (that first outside state is kept).

    Returns (states (B, n_snaps, p), sup (B, n_snaps), exit_step (B,),
    explosion_step (B,)); the step arrays hold -1 when the event never
    happened, and ``sup`` holds the running max deviation of the first
    ``sup_dims`` coordinates from the start, sampled at the snapshots.
    """
    v0 = np.ascontiguousarray(v0, dtype=np.float64)
    if v0.ndim != 2:
        raise ShapeError("v0 must be (n_paths, dim)")
    B, p = v0.shape
    inc = np.ascontiguousarray(increments, dtype=np.float64)
    if inc.ndim != 3 or inc.shape[0] != B:
        raise ShapeError(f"increments shape {inc.shape} does not match {B} paths")
    n_steps, m = inc.shape[1], inc.shape[2]
    if rows != p:
        raise ShapeError(f"field has {rows} rows but the state has {p} coordinates")
    if rows * m != tape.n_out or m != cols:
        raise ShapeError(f"field is {rows}x{cols} but increments have {m} columns")
    if tape.in_dim != p:
        raise ShapeError(f"field input dimension {tape.in_dim} != state dimension {p}")
    snaps = np.ascontiguousarray(snaps, dtype=np.int64)
    if snaps.ndim != 1:
        raise ShapeError("snapshot indices must be one-dimensional")
    if len(snaps) and (snaps[0] < 0 or snaps[-1] > n_steps
                       or np.any(np.diff(snaps) <= 0)):
        raise ShapeError("snapshot indices must be strictly increasing in "
                         f"[0, {n_steps}]")
    if center is None:
        center = v0[0]
    center = np.ascontiguousarray(center, dtype=np.float64)
    if center.shape != (p,):
        raise ShapeError(f"center shape {center.shape} != ({p},)")

    out_states = np.empty((B, len(snaps), p))
    out_sup = np.zeros((B, len(snaps)))
    out_exit = np.full(B, -1, dtype=np.int64)
    out_expl = np.full(B, -1, dtype=np.int64)
    mod = _module_for(backend)
    mod.run_paths(tape.ops, tape.consts, tape.n_reg, tape.out_regs,
                  rows, cols, v0, inc, snaps, center, float(radius),
                  int(sup_dims), out_states, out_sup, out_exit, out_expl)
    return out_states, out_sup, out_exit, out_expl
