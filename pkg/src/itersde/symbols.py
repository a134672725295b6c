"""Symbols, characteristics, and the generator of the coupled system.

For the stacked process V = (X, Y) with frozen coefficients the symbol
is q(v, xi) = psi_Z(M(v)' xi), where M(v) stacks phi(x) psi(y) over
psi(y).  The analytic route through (phi' xi_1 + xi_2) and the direct
route through M' xi are both evaluated and cross-checked on every call.
The Monte Carlo estimator reproduces q from stopped sample paths, and
the characteristics expose drift, diffusion, and the pushforward jump
measure with per-axis cutoff corrections.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientField, compose_M
from .drivers import LevyDriverSpec, triplet_of
from .errors import (ItersdeError, QuadratureError, ShapeError,
                     UnboundedCoefficientError)
from .integrator import TimeGrid, ensemble
from .quadrature import _q, lk_jump_integral

_ROUTE_TOL = 1e-12


def _require_bounded(field: CoefficientField, role: str):
    if not field.is_bounded:
        raise UnboundedCoefficientError(
            f"{role} must be bounded for symbol evaluation; "
            f"its structural bound is infinite")


def _maybe_scalar(arr):
    arr = np.asarray(arr)
    return complex(arr[()]) if arr.ndim == 0 else arr


def _driver_exponent(driver: LevyDriverSpec, zeta: np.ndarray):
    # zeta has shape (..., m); scalar drivers take the frequency elementwise
    if driver.dimension == 1:
        return driver.exponent(zeta[..., 0])
    return driver.exponent(zeta)


def symbol_inner(psi: CoefficientField, driver: LevyDriverSpec, y, eta):
    """Symbol of the inner equation: q_Y(y, eta) = psi_Z(psi(y)' eta).

    ``eta`` may carry leading batch axes; for a one-dimensional inner
    state a plain array of frequencies is taken elementwise.
    """
    _require_bounded(psi, "psi")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = y.shape[0]
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        eta = eta.reshape(1)
    if eta.shape[-1] != n:
        if n == 1:
            eta = eta[..., None]
        else:
            raise ShapeError(f"eta must have last dimension {n}, got {eta.shape}")
    Psi = psi.eval(y)                       # (n, m)
    zeta = eta @ Psi                        # (..., m)
    return _maybe_scalar(_driver_exponent(driver, zeta))


def symbol_coupled(phi: CoefficientField, psi: CoefficientField,
                   driver: LevyDriverSpec, x, y, xi):
    """Symbol of the stacked system at v = (x, y).

    Evaluates psi_Z(psi(y)'(phi(x)' xi_1 + xi_2)) and cross-checks it
    against psi_Z(M(v)' xi); the two must agree to rounding.
    """
    _require_bounded(psi, "psi")
    _require_bounded(phi, "phi")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d, n = x.shape[0], y.shape[0]
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != d + n:
        raise ShapeError(f"xi must have last dimension {d + n}, got {xi.shape}")
    Phi = phi.eval(x)                       # (d, n)
    Psi = psi.eval(y)                       # (n, m)
    xi1, xi2 = xi[..., :d], xi[..., d:]
    zeta_a = (xi1 @ Phi + xi2) @ Psi
    q_a = _driver_exponent(driver, zeta_a)

    M = np.vstack([Phi @ Psi, Psi])         # (d+n, m)
    zeta_b = xi @ M
    q_b = _driver_exponent(driver, zeta_b)

    gap = np.max(np.abs(np.asarray(q_a) - np.asarray(q_b)))
    scale = 1.0 + np.max(np.abs(np.asarray(q_a)))
    if gap > _ROUTE_TOL * scale:
        raise ItersdeError(
            f"the two symbol routes disagree by {gap:.3e}; "
            "the frozen-coefficient identity is violated")
    return _maybe_scalar(q_a)


# ---------------------------------------------------------------------------
# Monte Carlo symbol

@dataclass(frozen=True)
class McSymbolEstimate:
    value: complex
    stderr: tuple           # (re, im) standard errors of the mean
    n_paths: int
    n_steps: int
    t: float
    radius: float
    exit_fraction: float
    explosion_fraction: float

    def margin(self, z: float = 3.0) -> float:
        return z * math.hypot(self.stderr[0], self.stderr[1])


def mc_symbol(phi: CoefficientField, psi: CoefficientField,
              driver: LevyDriverSpec, x, y, xi, t: float = 0.01,
              radius: float = 5.0, n_paths: int = 100_000,
              master_seed: int = 0, dt_target: float = 1e-4,
              threads: int = 1, backend=None) -> McSymbolEstimate:
    """Estimate the symbol from stopped paths.

    Simulates the coupled system from v = (x, y), freezes each path at
    its first grid state outside the ball of ``radius`` around v, and
    averages -(exp(i (V_t - v)' xi) - 1) / t.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    xi = np.asarray(xi, dtype=float)
    v0 = np.concatenate([x, y])
    n_steps = max(100, int(math.ceil(t / dt_target)))
    grid = TimeGrid(0.0, t, n_steps)
    M = compose_M(phi, psi)
    ens = ensemble(M, driver, v0, grid, n_paths, master_seed,
                   snapshots=[n_steps], radius=radius, center=v0,
                   threads=threads, backend=backend)
    delta = ens.values[:, 0, :] - v0
    phase = np.exp(1j * (delta @ xi))
    draws = -(phase - 1.0) / t
    value = complex(draws.mean())
    se_re = float(draws.real.std(ddof=1) / math.sqrt(n_paths))
    se_im = float(draws.imag.std(ddof=1) / math.sqrt(n_paths))
    if ens.explosion_fraction > 0.01:
        warnings.warn(f"{100 * ens.explosion_fraction:.1f}% of paths exploded "
                      "before the horizon; the estimate may be biased")
    return McSymbolEstimate(value, (se_re, se_im), n_paths, n_steps, t, radius,
                            ens.exit_fraction, ens.explosion_fraction)


# ---------------------------------------------------------------------------
# characteristics

@dataclass(frozen=True)
class PushforwardAxis:
    """Jumps of V along the fixed direction w -> direction * w."""

    direction: np.ndarray   # (d+n,)
    density: object         # scalar JumpDensity in w
    cutoff_radius: float    # 1 / |direction|


@dataclass(frozen=True)
class CharTriplet:
    """Frozen-coefficient semimartingale characteristics of V = (X, Y)."""

    drift: np.ndarray       # (d+n,)
    diffusion: np.ndarray   # (d+n, d+n)
    jumps: tuple            # of PushforwardAxis
    x_dim: int
    y_dim: int

    @property
    def dimension(self) -> int:
        return self.x_dim + self.y_dim

    def lk_reconstruct(self, xi) -> complex:
        """Rebuild the symbol from the characteristics by quadrature."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        val = complex(-1j * float(self.drift @ xi)
                      + 0.5 * float(xi @ self.diffusion @ xi))
        for ax in self.jumps:
            c = float(ax.direction @ xi)
            val += lk_jump_integral(ax.density, c, ax.cutoff_radius)
        return val

    def jump_integral(self, g, kinks=()) -> float:
        """integral of g(w_tilde) against the jump measure of V.

        ``g`` maps R^(d+n) -> R and must vanish quadratically at 0;
        ``kinks`` lists radii |w_tilde| where g changes analytic form.
        """
        from .quadrature import jump_functional
        total = 0.0
        for ax in self.jumps:
            norm = float(np.linalg.norm(ax.direction))
            pts = tuple(k / norm for k in kinks)
            total += jump_functional(
                ax.density, lambda w, a=ax.direction: g(a * w), points=pts)
        return total


def characteristics_at(phi: CoefficientField, psi: CoefficientField,
                       driver: LevyDriverSpec, x, y) -> CharTriplet:
    """Characteristics of V under coefficients frozen at v = (x, y).

    Drift picks up a per-axis correction because the pushforward
    stretches the jump cutoff: axis j with direction a_j uses the
    cutoff |w| <= 1/|a_j| in V-space.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    Phi = phi.eval(x)
    Psi = psi.eval(y)
    M = np.vstack([Phi @ Psi, Psi])          # (d+n, m)
    trip = triplet_of(driver)

    drift = M @ trip.drift
    diffusion = M @ trip.diffusion @ M.T
    diffusion = 0.5 * (diffusion + diffusion.T)

    axes = []
    for jump in trip.jumps:
        a = np.ascontiguousarray(M[:, jump.axis])
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            continue                         # jumps are crushed to the origin
        r = 1.0 / norm
        dens = jump.density
        drift = drift + a * (dens.mean_upto(r) - dens.mean_upto(1.0))
        axes.append(PushforwardAxis(a, dens, r))
    return CharTriplet(drift, diffusion, tuple(axes), x.shape[0], y.shape[0])


# ---------------------------------------------------------------------------
# test functions and the generator

@dataclass(frozen=True)
class TestFunction:
    """C^2 function with explicit gradient and Hessian callables."""

    value: object
    gradient: object
    hessian: object
    wave: tuple = None   # (freq, phase) when value is cos(freq'v + phase)


def gaussian_bump(center, width: float = 1.0) -> TestFunction:
    c = np.asarray(center, dtype=float)
    w2 = float(width) ** 2

    def val(v):
        d = np.asarray(v) - c
        return float(np.exp(-(d @ d) / (2 * w2)))

    def grad(v):
        d = np.asarray(v) - c
        return -val(v) * d / w2

    def hess(v):
        d = np.asarray(v) - c
        return val(v) * (np.outer(d, d) / w2 ** 2 - np.eye(len(c)) / w2)

    return TestFunction(val, grad, hess)


def plane_wave(freq, phase: float = 0.0) -> TestFunction:
    f = np.asarray(freq, dtype=float)

    def val(v):
        return math.cos(float(f @ v) + phase)

    def grad(v):
        return -math.sin(float(f @ v) + phase) * f

    def hess(v):
        return -math.cos(float(f @ v) + phase) * np.outer(f, f)

    return TestFunction(val, grad, hess, wave=(f, phase))


def linear(slope, offset: float = 0.0) -> TestFunction:
    a = np.asarray(slope, dtype=float)
    return TestFunction(lambda v: float(a @ v) + offset,
                        lambda v: a,
                        lambda v: np.zeros((len(a), len(a))))


def quadratic(matrix) -> TestFunction:
    A = np.asarray(matrix, dtype=float)
    S = A + A.T
    return TestFunction(lambda v: float(np.asarray(v) @ A @ v),
                        lambda v: S @ np.asarray(v),
                        lambda v: S.copy())


def _jump_term_generic(u: TestFunction, v0, a, density, r) -> float:
    """integral of u(v0 + a w) - u(v0) - w a'grad u(v0) 1_{|w| <= r} n(w) dw."""
    eps = min(1e-5, r)
    half = 0.5 if density.symmetric else 1.0
    u0 = u.value(v0)
    g0 = u.gradient(v0)
    H0 = u.hessian(v0)
    total = 0.0
    errs = []
    sides = (a, -a) if density.symmetric else (a,)
    for b in sides:
        bHb = float(b @ H0 @ b)
        bg = float(b @ g0)
        inner = 0.5 * bHb * half * density.second_moment_upto(eps)
        errs.append(abs(inner) * 10 * eps)
        total += inner
        if r > eps:
            fn = lambda w: (u.value(v0 + b * w) - u0 - w * bg) * density(w)
            v, err = _q(fn, eps, r)
            total += v
            errs.append(err)
        fn = lambda w: (u.value(v0 + b * w) - u0) * density(w)
        v, err = _q(fn, r, np.inf)
        total += v
        errs.append(err)
    residual = float(sum(errs))
    if residual > max(1e-8, 1e-6 * abs(total)):
        raise QuadratureError("generator jump integral did not converge", residual)
    return total


def generator_apply(phi: CoefficientField, psi: CoefficientField,
                    driver: LevyDriverSpec, x, y, u: TestFunction) -> float:
    """Extended generator applied to a test function at v = (x, y):

    A u = drift . grad u + (1/2) tr(C Hess u) + jump part,
    with the jump part compensated under the pushforward cutoffs.
    """
    char = characteristics_at(phi, psi, driver, x, y)
    v0 = np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)),
                         np.atleast_1d(np.asarray(y, dtype=float))])
    grad = np.asarray(u.gradient(v0), dtype=float)
    hess = np.asarray(u.hessian(v0), dtype=float)
    val = float(char.drift @ grad) + 0.5 * float(np.trace(char.diffusion @ hess))
    for ax in char.jumps:
        if u.wave is not None:
            freq, phase = u.wave
            theta = float(freq @ v0) + phase
            c = float(ax.direction @ freq)
            J = lk_jump_integral(ax.density, c, ax.cutoff_radius)
            val += (-np.exp(1j * theta) * J).real
        else:
            val += _jump_term_generic(u, v0, ax.direction, ax.density,
                                      ax.cutoff_radius)
    return val
