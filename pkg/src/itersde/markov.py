"""Two-sample diagnostic for the loss of the Markov property.

The outer component X alone is generally not Markov: conditionally on
X_t, its future still depends on the hidden inner state Y_t.  The
diagnostic simulates the coupled system, restricts to paths whose X_t
lies in a thin quantile window (so X_t is effectively fixed), splits
them by the median of Y_t, and compares the two groups' forward
increments X_{t+s} - X_t with a two-sample KS test.  A small p-value
certifies the dependence.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .errors import ShapeError
from .integrator import TimeGrid, coupled_ensemble


@dataclass(frozen=True)
class MarkovDiagnostic:
    statistic: float      # KS distance between the two groups
    pvalue: float
    n_low: int            # paths with Y_t below the group median
    n_high: int
    n_dropped: int        # exploded paths excluded from the test
    inconclusive: bool    # too few paths landed in the window
    window: tuple


def markov_diagnostic(phi, psi, driver, x0, y0, t: float = 1.0, s: float = 0.25,
                      n_paths: int = 20_000, master_seed: int = 0,
                      window=(0.45, 0.55), n_steps_after: int = 128,
                      min_group: int = 50, threads: int = 1,
                      backend=None) -> MarkovDiagnostic:
    """KS test of X_{t+s} - X_t between low-Y_t and high-Y_t paths.

    ``t`` is snapped to the simulation grid, whose step is s / n_steps_after.
    """
    if not (0 < window[0] < window[1] < 1):
        raise ValueError(f"bad quantile window {window}")
    dt = s / n_steps_after
    n1 = int(round(t / dt))
    if n1 < 1:
        raise ValueError("t is too small relative to the grid step s / n_steps_after")
    n_steps = n1 + n_steps_after
    grid = TimeGrid(0.0, n_steps * dt, n_steps)
    ens = coupled_ensemble(phi, psi, driver, x0, y0, grid, n_paths, master_seed,
                           snapshots=[n1, n_steps], threads=threads,
                           backend=backend)
    d = np.atleast_1d(np.asarray(x0, dtype=float)).shape[0]

    ok = ens.explosion_step < 0
    x_t = ens.values[ok, 0, 0]
    y_t = ens.values[ok, 0, d]
    x_fwd = ens.values[ok, 1, 0] - x_t

    lo_q, hi_q = np.quantile(x_t, window)
    sel = (x_t >= lo_q) & (x_t <= hi_q)
    if sel.sum() < 2 * min_group:
        return MarkovDiagnostic(float("nan"), float("nan"), 0, 0,
                                int((~ok).sum()), True, tuple(window))
    y_sel = y_t[sel]
    fwd_sel = x_fwd[sel]
    med = np.median(y_sel)
    low = fwd_sel[y_sel <= med]
    high = fwd_sel[y_sel > med]
    inconclusive = min(len(low), len(high)) < min_group
    res = ks_2samp(low, high)
    return MarkovDiagnostic(float(res.statistic), float(res.pvalue),
                            int(len(low)), int(len(high)),
                            int((~ok).sum()), inconclusive, tuple(window))
