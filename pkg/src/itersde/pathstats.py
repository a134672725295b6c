"""Path statistics tied to the symbol's growth.

The upper growth index of a symbol is estimated from log |q| sampled on
frequency shells of exploding radius, maximized over directions and
over a shrinking state ball (radius 2/r around the base point); the
index is the median local slope of log max|q| against log r over the
outermost shells, which is exact for power laws and invariant under
constant rescaling of q.  The true gamma-variation is a supremum over
all partitions and is not computable; dyadic refinements give a
monotone lower bound whose stabilization or divergence stands in for
finiteness.  The index also controls the small-time sup scaling of the
outer component, measured here on simulated ensembles.
"""

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientField, check_bijective_multiplier
from .drivers import LevyDriverSpec
from .errors import DegenerateSymbolError, PreconditionError, ShapeError
from .integrator import TimeGrid, coupled_ensemble
from .symbols import symbol_coupled

_DIR_SEED = 0x51DE
_SHELLS = (1e2, 1e3, 1e4, 1e5, 1e6)


@dataclass(frozen=True)
class IndexEstimate:
    """Growth exponent beta with its shell diagnostics.

    ``shells`` pairs each radius r with log max|q| / log r; ``slopes``
    holds the local slopes between consecutive shells.
    """

    beta: float
    shells: tuple
    slopes: tuple
    n_directions: int


def _unit_dirs(dim: int, n: int, seed: int, include_axes: bool = True) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed))
    raw = gen.standard_normal((n, dim))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    if include_axes:
        eye = np.eye(dim)
        raw = np.vstack([raw, eye, -eye])
    return raw


def upper_index_from_symbol(symbol_fn, x, freq_dim: int, shell_radii=_SHELLS,
                            n_directions: int = 64, n_ball: int = 8,
                            seed: int = _DIR_SEED) -> IndexEstimate:
    """Upper growth index of a symbol evaluator.

    ``symbol_fn(w, eta)`` must accept a state point ``w`` and a batch of
    frequency rows ``eta`` of width ``freq_dim``.  On each shell of
    radius r the magnitude is maximized over sampled directions and
    over a ball of radius 2/r around ``x`` (skipped when ``x`` is None,
    for state-free symbols).
    """
    radii = tuple(float(r) for r in shell_radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("shell radii must be strictly increasing")
    if len(radii) < 2 or radii[-1] < 1e4:
        raise ValueError("need at least two shells reaching radius 1e4")
    if n_directions < 64:
        raise ValueError("need at least 64 directions per shell")
    dirs = _unit_dirs(freq_dim, n_directions, seed)
    if x is not None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        ball = _unit_dirs(x.shape[0], n_ball, seed + 1, include_axes=False)
    best = []
    for r in radii:
        eta = r * dirs
        pts = [None] if x is None else [x] + [x + (2.0 / r) * z for z in ball]
        top = 0.0
        for w in pts:
            vals = np.abs(symbol_fn(w, eta))
            top = max(top, float(np.max(vals)))
        if not (top > 0.0 and math.isfinite(top)):
            raise DegenerateSymbolError(
                f"symbol magnitude is degenerate on the shell of radius {r:g}")
        best.append(top)
    log_r = np.log(np.asarray(radii))
    log_b = np.log(np.asarray(best))
    slopes = np.diff(log_b) / np.diff(log_r)
    beta = float(np.median(slopes[-3:]))
    return IndexEstimate(beta, tuple(zip(radii, log_b / log_r)), tuple(slopes),
                         n_directions=len(dirs))


def upper_index_of_driver(driver: LevyDriverSpec, **kw) -> IndexEstimate:
    """Upper growth index of the driver's own exponent."""
    m = driver.dimension

    def q(_, eta):
        return driver.exponent(eta[:, 0] if m == 1 else eta)

    return upper_index_from_symbol(q, None, m, **kw)


def upper_index_coupled(phi: CoefficientField, psi: CoefficientField,
                        driver: LevyDriverSpec, x, y, **kw) -> IndexEstimate:
    """Upper growth index of the coupled symbol at v = (x, y)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = x.shape[0]

    def q(w, eta):
        return symbol_coupled(phi, psi, driver, w[:d], w[d:], eta)

    return upper_index_from_symbol(q, np.concatenate([x, y]), d + y.shape[0], **kw)


@dataclass(frozen=True)
class InheritanceReport:
    ok: bool
    driver_beta: float
    point_betas: tuple
    margin: float

    def __bool__(self):
        return self.ok


def verify_index_inheritance(phi: CoefficientField, psi: CoefficientField,
                             driver: LevyDriverSpec, points, margin: float = 0.1,
                             **kw) -> InheritanceReport:
    """Check that the coupled symbol's index never exceeds the driver's.

    ``points`` is an iterable of (x, y) base points.  The hypotheses
    (square bounded coefficients with nonvanishing multiplier) are
    verified first and the offending one is named.
    """
    if not (phi.rows == phi.cols == psi.rows == psi.cols == driver.dimension):
        raise PreconditionError(
            "index inheritance is stated for square coefficients matching the "
            f"driver dimension; got phi {phi.shape}, psi {psi.shape}, "
            f"driver dimension {driver.dimension}")
    for role, f in (("phi", phi), ("psi", psi)):
        if not f.is_bounded:
            raise PreconditionError(
                f"index inheritance requires bounded coefficients, but {role} "
                "has an infinite structural bound")
        chk = check_bijective_multiplier(f)
        if not chk:
            raise PreconditionError(
                f"index inheritance requires a bijective multiplier, but {role} "
                f"has |det| = {chk.min_abs_det:.3e} near {chk.worst_point}")
    base = upper_index_of_driver(driver, **kw)
    betas = []
    for x, y in points:
        betas.append(upper_index_coupled(phi, psi, driver, x, y, **kw).beta)
    ok = all(b <= base.beta + margin for b in betas)
    return InheritanceReport(ok, base.beta, tuple(betas), margin)


# ---------------------------------------------------------------------------
# gamma-variation

@dataclass(frozen=True)
class VariationReport:
    gamma: float
    level_sums: tuple     # dyadic refinement levels, coarse to fine
    ratios: tuple         # successive level ratios V_l / V_{l-1}
    verdict: str          # "stabilizing" | "diverging" | "inconclusive"
    n_levels: int
    n_used: int
    truncated: bool = False


def gamma_variation(values, gamma: float, n_levels: int = None) -> VariationReport:
    """Dyadic gamma-variation sums of one path or a batch of paths.

    ``values`` may be a path or ensemble object, an (n+1, dim) array, or
    an (n_paths, n+1, dim) array; batch level sums are averaged
    pathwise.  Level l uses stride 2^(L-l), so the last level is the
    full grid.  Verdict from the finest refinements: stabilizing when
    the last ratio falls below 1.05, diverging when it stays at or
    above 1.05 and growth persists across the last two levels (factor
    above 1.2), inconclusive otherwise.  Explosion-frozen paths
    contribute zero increments past their truncation point and are
    flagged.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    truncated = bool(getattr(values, "exploded", False)) or \
        float(getattr(values, "explosion_fraction", 0.0)) > 0.0
    vals = np.asarray(getattr(values, "values", values), dtype=float)
    if vals.ndim == 2:
        vals = vals[None]
    if vals.ndim != 3:
        raise ShapeError("values must be (n+1, dim) or (n_paths, n+1, dim)")
    n = vals.shape[1] - 1
    if n_levels is None:
        n_levels = max(2, min(10, int(math.log2(max(n // 8, 1)))))
    L = int(n_levels)
    if n >> L == 0:
        raise ShapeError(f"{n} increments cannot support {L} dyadic levels")
    n_use = (n >> L) << L
    sums = []
    for lvl in range(L + 1):
        stride = 1 << (L - lvl)
        pts = vals[:, 0:n_use + 1:stride, :]
        incs = np.linalg.norm(np.diff(pts, axis=1), axis=2)
        sums.append(float((incs ** gamma).sum(axis=1).mean()))
    ratios = tuple(sums[i] / sums[i - 1] for i in range(1, L + 1))
    last = ratios[-1]
    if last < 1.05:
        verdict = "stabilizing"
    elif L >= 2 and sums[-1] / sums[-3] > 1.2:
        verdict = "diverging"
    else:
        verdict = "inconclusive"
    return VariationReport(gamma, tuple(sums), ratios, verdict, L, n_use,
                           truncated)


# ---------------------------------------------------------------------------
# small-time scaling

@dataclass(frozen=True)
class ScalingReport:
    lam: float
    times: tuple
    statistic: tuple      # median of t^(-1/lam) * sup_{s<=t} |X_s - x0|
    monotone: bool        # nondecreasing in t up to 5% slack
    ratio: float          # statistic at the smallest t over the largest
    consistent: bool


def smalltime_scaling(phi: CoefficientField, psi: CoefficientField,
                      driver: LevyDriverSpec, x0, y0, lam: float, times,
                      n_paths: int = 2000, master_seed: int = 0,
                      dt_factor: int = 10, threads: int = 1,
                      backend=None) -> ScalingReport:
    """Measure t^(-1/lam) times the running sup of |X - x0| at several t.

    When lam exceeds the symbol's upper index the normalized sup tends
    to zero along t -> 0, so the statistic should vanish towards the
    small end of ``times``: read in increasing t it is nondecreasing,
    and its value at the smallest time is a fixed factor below the
    value at the largest.
    """
    times = sorted(float(t) for t in times)
    if not times or times[0] <= 0:
        raise ValueError("times must be positive")
    if lam <= 0:
        raise ValueError("lam must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.shape[0]
    dt = times[0] / dt_factor
    n_steps = int(math.ceil(times[-1] / dt - 1e-9))
    grid = TimeGrid(0.0, n_steps * dt, n_steps)
    idx = sorted({max(1, int(round(t / dt))) for t in times})
    ens = coupled_ensemble(phi, psi, driver, x0, y0, grid, n_paths, master_seed,
                           snapshots=idx, sup_dims=d, threads=threads,
                           backend=backend)
    actual = [i * dt for i in idx]
    stats = []
    for j, t in enumerate(actual):
        stats.append(float(np.median(t ** (-1.0 / lam) * ens.sup_deviation[:, j])))
    monotone = all(stats[j] <= stats[j + 1] * 1.05 for j in range(len(stats) - 1))
    if stats[-1] > 0:
        ratio = stats[0] / stats[-1]
    else:
        ratio = 0.0 if max(stats) == 0.0 else float("inf")
    return ScalingReport(lam, tuple(actual), tuple(stats), monotone, ratio,
                         consistent=bool(monotone and ratio < 0.8))
