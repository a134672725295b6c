"""Euler schemes for the inner, outer, and coupled systems.

The inner equation dY = psi(Y-) dZ is driven by exact Levy increments;
the outer equation dX = phi(X-) dY consumes the increments of a
simulated inner path; the coupled system advances the stacked state
V = (X, Y) with the combined coefficient in one pass.  Ensembles assign
every path its own counter-based stream, so results are byte-identical
under any chunking or thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .coefficients import CoefficientField, compose_M
from .drivers import LevyDriverSpec
from .errors import ShapeError
from .rng import RngStream


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of n_steps intervals on [t0, t_end]."""

    t0: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t0:
            raise ValueError(f"empty time interval [{self.t0}, {self.t_end}]")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def refined(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.t0, self.t_end, self.n_steps * factor)


@dataclass(frozen=True)
class SamplePath:
    grid: TimeGrid
    values: np.ndarray         # (n_snaps, dim)
    snap_indices: np.ndarray   # grid indices of the recorded states
    stream: RngStream = None
    exit_step: int = -1
    explosion_step: int = -1

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()[self.snap_indices]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def exploded(self) -> bool:
        return self.explosion_step >= 0

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class PathEnsemble:
    grid: TimeGrid
    values: np.ndarray         # (n_paths, n_snaps, dim)
    snap_indices: np.ndarray
    master_seed: int
    exit_step: np.ndarray      # (n_paths,) grid index of first ball exit, -1 if none
    explosion_step: np.ndarray  # (n_paths,) first non-finite update, -1 if none
    sup_deviation: np.ndarray = None  # (n_paths, n_snaps) running sup when requested
    stream_offset: int = 0

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i: int) -> SamplePath:
        return SamplePath(self.grid, self.values[i], self.snap_indices,
                          RngStream(self.master_seed, self.stream_offset + i),
                          int(self.exit_step[i]), int(self.explosion_step[i]))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times()[self.snap_indices]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def explosion_fraction(self) -> float:
        return float(np.mean(self.explosion_step >= 0))

    @property
    def exit_fraction(self) -> float:
        return float(np.mean(self.exit_step >= 0))


def _check_field(field: CoefficientField, state_dim: int, driver_dim: int, what: str):
    if field.rows != state_dim or field.in_dim != state_dim:
        raise ShapeError(f"{what} must be {state_dim}x? over R^{state_dim}, "
                         f"got {field.shape} over R^{field.in_dim}")
    if field.cols != driver_dim:
        raise ShapeError(f"{what} has {field.cols} columns but the driver "
                         f"has dimension {driver_dim}")


def euler_inner(psi: CoefficientField, driver: LevyDriverSpec, y0, grid: TimeGrid,
                stream: RngStream, backend=None) -> SamplePath:
    """One path of dY = psi(Y-) dZ on the full grid."""
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    _check_field(psi, y0.shape[0], driver.dimension, "psi")
    inc = driver.sample_increments(grid.dt, grid.n_steps, stream.generator())
    snaps = np.arange(grid.n_steps + 1, dtype=np.int64)
    states, _, exit_s, expl_s = kernels.run_paths(
        psi.tape, psi.rows, psi.cols, y0[None], inc[None], snaps, backend=backend)
    return SamplePath(grid, states[0], snaps, stream,
                      int(exit_s[0]), int(expl_s[0]))


def euler_outer(phi: CoefficientField, x0, y_path: SamplePath,
                backend=None) -> SamplePath:
    """One path of dX = phi(X-) dY driven by a simulated inner path."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n_steps = y_path.grid.n_steps
    if len(y_path) != n_steps + 1 or not np.array_equal(
            y_path.snap_indices, np.arange(n_steps + 1)):
        raise ShapeError("outer integration needs the inner path on the full grid")
    _check_field(phi, x0.shape[0], y_path.dim, "phi")
    inc = np.diff(y_path.values, axis=0)
    snaps = np.arange(n_steps + 1, dtype=np.int64)
    states, _, exit_s, expl_s = kernels.run_paths(
        phi.tape, phi.rows, phi.cols, x0[None], inc[None], snaps, backend=backend)
    return SamplePath(y_path.grid, states[0], snaps, y_path.stream,
                      int(exit_s[0]), int(expl_s[0]))


def euler_coupled(phi: CoefficientField, psi: CoefficientField,
                  driver: LevyDriverSpec, x0, y0, grid: TimeGrid,
                  stream: RngStream, backend=None) -> SamplePath:
    """One path of the stacked system dV = M(V-) dZ, V = (X, Y).

    Uses the same stream as ``euler_inner`` would, so the Y block sees
    identical driver increments.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    M = compose_M(phi, psi)
    v0 = np.concatenate([x0, y0])
    _check_field(M, v0.shape[0], driver.dimension, "the coupled field")
    inc = driver.sample_increments(grid.dt, grid.n_steps, stream.generator())
    snaps = np.arange(grid.n_steps + 1, dtype=np.int64)
    states, _, exit_s, expl_s = kernels.run_paths(
        M.tape, M.rows, M.cols, v0[None], inc[None], snaps, backend=backend)
    return SamplePath(grid, states[0], snaps, stream,
                      int(exit_s[0]), int(expl_s[0]))


_CHUNK_ELEMS = 1 << 22
_CHUNK_CAP = 16384


def ensemble(field: CoefficientField, driver: LevyDriverSpec, v0, grid: TimeGrid,
             n_paths: int, master_seed: int, snapshots=None, radius: float = 0.0,
             center=None, sup_dims: int = 0, threads: int = 1,
             stream_offset: int = 0, backend=None) -> PathEnsemble:
    """Simulate dV = field(V-) dZ for n_paths independent paths.

    Path i draws from the stream (master_seed, stream_offset + i), so
    the result does not depend on chunk size or thread count.  When
    ``radius > 0`` paths freeze at their first grid state outside the
    ball around ``center`` (default: the start), and ``sup_dims > 0``
    tracks the running sup deviation of the leading coordinates.
    """
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    p = v0.shape[0]
    m = driver.dimension
    _check_field(field, p, m, "the coefficient field")
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    n_steps = grid.n_steps
    if snapshots is None:
        snaps = np.arange(n_steps + 1, dtype=np.int64)
    else:
        snaps = np.asarray(sorted(int(s) for s in snapshots), dtype=np.int64)
    if center is None:
        center = v0
    center = np.asarray(center, dtype=float)

    n_snaps = len(snaps)
    values = np.empty((n_paths, n_snaps, p))
    exit_step = np.empty(n_paths, dtype=np.int64)
    expl_step = np.empty(n_paths, dtype=np.int64)
    sup = np.zeros((n_paths, n_snaps)) if sup_dims > 0 else None

    per_path = n_steps * m + n_snaps * p + 4
    chunk = int(np.clip(_CHUNK_ELEMS // per_path, 1, _CHUNK_CAP))
    spans = [(lo, min(lo + chunk, n_paths)) for lo in range(0, n_paths, chunk)]

    def work(span):
        lo, hi = span
        inc = np.empty((hi - lo, n_steps, m))
        for i in range(lo, hi):
            gen = RngStream(master_seed, stream_offset + i).generator()
            inc[i - lo] = driver.sample_increments(grid.dt, n_steps, gen)
        starts = np.broadcast_to(v0, (hi - lo, p))
        st, su, ex, bl = kernels.run_paths(
            field.tape, field.rows, field.cols, starts, inc, snaps,
            center=center, radius=radius, sup_dims=sup_dims, backend=backend)
        values[lo:hi] = st
        exit_step[lo:hi] = ex
        expl_step[lo:hi] = bl
        if sup is not None:
            sup[lo:hi] = su

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)

    return PathEnsemble(grid, values, snaps, master_seed, exit_step, expl_step,
                        sup_deviation=sup, stream_offset=stream_offset)


def coupled_ensemble(phi, psi, driver, x0, y0, grid, n_paths, master_seed,
                     **kw) -> PathEnsemble:
    """Ensemble of the stacked system V = (X, Y)."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    M = compose_M(phi, psi)
    return ensemble(M, driver, np.concatenate([x0, y0]), grid, n_paths,
                    master_seed, **kw)


def coarsen_increments(inc: np.ndarray, factor: int) -> np.ndarray:
    """Aggregate consecutive increments into blocks of ``factor``."""
    B, n, m = inc.shape
    if n % factor:
        raise ShapeError(f"{n} steps do not split into blocks of {factor}")
    return inc.reshape(B, n // factor, factor, m).sum(axis=2)
