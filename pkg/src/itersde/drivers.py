"""Levy driver specifications.

A driver is described by its family (Brownian, Cauchy, symmetric stable,
Gamma subordinator, deterministic drift, or an independent composite of
those) plus a time scale.  The spec knows three things: its characteristic
exponent in closed form, how to sample exact increments, and its
generating triplet (drift, diffusion, jump measure) under the cutoff
``|w| <= 1``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import exp1, gamma as gamma_fn

from .errors import ShapeError

_TOL_PSD = 1e-10


# ---------------------------------------------------------------------------
# families

@dataclass(frozen=True)
class Brownian:
    volatility: float = 1.0

    def __post_init__(self):
        if not self.volatility > 0:
            raise ValueError("volatility must be positive")


@dataclass(frozen=True)
class Cauchy:
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class SymmetricStable:
    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be positive")


@dataclass(frozen=True)
class DriftOnly:
    slope: float = 1.0


_SCALAR_FAMILIES = (Brownian, Cauchy, SymmetricStable, Gamma, DriftOnly)


@dataclass(frozen=True)
class Composite:
    """Independent scalar drivers, one per coordinate axis."""

    components: tuple  # of LevyDriverSpec, each one-dimensional

    def __post_init__(self):
        if not self.components:
            raise ValueError("composite driver needs at least one component")
        for comp in self.components:
            if not isinstance(comp, LevyDriverSpec):
                raise TypeError("composite components must be LevyDriverSpec")
            if comp.dimension != 1:
                raise ValueError("composite components must be one-dimensional")


@dataclass(frozen=True)
class LevyDriverSpec:
    """A driver family together with a deterministic time change t -> c*t."""

    family: object
    time_scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.family, _SCALAR_FAMILIES + (Composite,)):
            raise TypeError(f"unknown driver family {type(self.family).__name__}")
        if not self.time_scale > 0:
            raise ValueError("time_scale must be positive")

    @property
    def dimension(self) -> int:
        if isinstance(self.family, Composite):
            return len(self.family.components)
        return 1

    # -- characteristic exponent -------------------------------------------

    def exponent(self, xi):
        """psi(xi) with E exp(i Z_t xi) = exp(-t psi(xi)).

        For one-dimensional drivers ``xi`` is applied elementwise; for a
        composite driver the last axis of ``xi`` indexes components.
        """
        xi = np.asarray(xi, dtype=float)
        fam = self.family
        if isinstance(fam, Composite):
            if xi.ndim == 0 or xi.shape[-1] != self.dimension:
                raise ShapeError(
                    f"driver has dimension {self.dimension}, got xi shape {xi.shape}")
            total = np.zeros(xi.shape[:-1], dtype=complex)
            for j, comp in enumerate(fam.components):
                total = total + comp.exponent(xi[..., j])
            return self.time_scale * total
        return self.time_scale * _scalar_exponent(fam, xi)

    # -- sampling ------------------------------------------------------------

    def sample_increments(self, dt: float, n_steps: int, gen) -> np.ndarray:
        """Exact increments over ``n_steps`` intervals of width ``dt``.

        Returns shape (n_steps, dimension).  Draw order is fixed
        (component by component, one vectorized block each) so a given
        stream always yields the same increments.
        """
        s = dt * self.time_scale
        fam = self.family
        if isinstance(fam, Composite):
            cols = [comp.sample_increments(s, n_steps, gen) for comp in fam.components]
            return np.concatenate(cols, axis=1)
        return _scalar_increments(fam, s, n_steps, gen).reshape(n_steps, 1)

    def sample_increment(self, dt: float, gen) -> np.ndarray:
        return self.sample_increments(dt, 1, gen)[0]


def _scalar_exponent(fam, xi):
    if isinstance(fam, Brownian):
        return 0.5 * (fam.volatility ** 2) * xi * xi + 0j
    if isinstance(fam, Cauchy):
        return fam.scale * np.abs(xi) + 0j
    if isinstance(fam, SymmetricStable):
        return (fam.scale * np.abs(xi)) ** fam.alpha + 0j
    if isinstance(fam, Gamma):
        return fam.shape * np.log(1.0 - 1j * xi / fam.rate)
    if isinstance(fam, DriftOnly):
        return -1j * fam.slope * xi
    raise TypeError(type(fam).__name__)


def _stable_standard(alpha: float, n: int, gen) -> np.ndarray:
    # Chambers-Mallows-Stuck; covers alpha = 1 (Cauchy) and alpha = 2
    # (Gaussian, variance 2) without special cases.
    u = gen.uniform(-math.pi / 2, math.pi / 2, size=n)
    w = gen.standard_exponential(n)
    cu = np.cos(u)
    out = np.sin(alpha * u) / cu ** (1.0 / alpha)
    out *= (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha)
    return out


def _scalar_increments(fam, s, n, gen):
    if isinstance(fam, Brownian):
        return fam.volatility * math.sqrt(s) * gen.standard_normal(n)
    if isinstance(fam, Cauchy):
        return fam.scale * s * gen.standard_cauchy(n)
    if isinstance(fam, SymmetricStable):
        return fam.scale * s ** (1.0 / fam.alpha) * _stable_standard(fam.alpha, n, gen)
    if isinstance(fam, Gamma):
        return gen.standard_gamma(fam.shape * s, size=n) / fam.rate
    if isinstance(fam, DriftOnly):
        return np.full(n, fam.slope * s)
    raise TypeError(type(fam).__name__)


# ---------------------------------------------------------------------------
# generating triplets

@dataclass(frozen=True)
class JumpDensity:
    """Closed-form scalar Levy density with analytic small-jump moments.

    ``kind`` is one of "cauchy" (scale c: c / (pi w^2)), "stable"
    (alpha, K: K |w|^(-1-alpha)), "gamma" (shape b, rate a:
    b exp(-a w)/w on w > 0); ``weight`` is an overall multiplier.
    """

    kind: str
    params: tuple
    weight: float = 1.0

    @property
    def symmetric(self) -> bool:
        return self.kind in ("cauchy", "stable")

    @property
    def support(self):
        if self.kind == "gamma":
            return (0.0, math.inf)
        return (-math.inf, math.inf)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        if self.kind == "cauchy":
            (c,) = self.params
            return self.weight * c / (math.pi * w * w)
        if self.kind == "stable":
            alpha, K = self.params
            return self.weight * K * np.abs(w) ** (-1.0 - alpha)
        if self.kind == "gamma":
            b, a = self.params
            return self.weight * b * np.exp(-a * w) / w
        raise ValueError(self.kind)

    def second_moment_upto(self, eps: float) -> float:
        """integral of w^2 n(w) dw over support intersected with |w| <= eps."""
        if self.kind == "cauchy":
            (c,) = self.params
            return self.weight * 2.0 * c * eps / math.pi
        if self.kind == "stable":
            alpha, K = self.params
            return self.weight * 2.0 * K * eps ** (2.0 - alpha) / (2.0 - alpha)
        if self.kind == "gamma":
            b, a = self.params
            return self.weight * b * (1.0 - math.exp(-a * eps) * (1.0 + a * eps)) / a ** 2
        raise ValueError(self.kind)

    def third_abs_moment_upto(self, eps: float) -> float:
        """integral of w^3 n(w) dw over (0, eps] (0 by symmetry otherwise)."""
        if self.symmetric:
            return 0.0
        b, a = self.params
        val = 2.0 - math.exp(-a * eps) * (2.0 + 2.0 * a * eps + (a * eps) ** 2)
        return self.weight * b * val / a ** 3

    def mean_upto(self, eps: float) -> float:
        """integral of w n(w) dw over support intersected with |w| <= eps."""
        if self.symmetric:
            return 0.0
        b, a = self.params
        return self.weight * (b / a) * (1.0 - math.exp(-a * eps))

    def tail_mass(self, r: float) -> float:
        """integral of n(w) dw over |w| > r."""
        if self.kind == "cauchy":
            (c,) = self.params
            return self.weight * 2.0 * c / (math.pi * r)
        if self.kind == "stable":
            alpha, K = self.params
            return self.weight * 2.0 * K * r ** (-alpha) / alpha
        if self.kind == "gamma":
            b, a = self.params
            return self.weight * b * exp1(a * r)
        raise ValueError(self.kind)

    def scaled(self, factor: float) -> "JumpDensity":
        return JumpDensity(self.kind, self.params, self.weight * factor)


@dataclass(frozen=True)
class JumpAxis:
    """One-dimensional jump component along a coordinate axis."""

    axis: int
    density: JumpDensity


@dataclass(frozen=True)
class LevyTriplet:
    """(drift, diffusion, jump measure) under the cutoff |w| <= 1.

    The jump measure is a sum of one-dimensional densities along
    coordinate axes, which is exact for all supported families.
    """

    drift: np.ndarray      # (m,)
    diffusion: np.ndarray  # (m, m)
    jumps: tuple           # of JumpAxis

    def __post_init__(self):
        drift = np.atleast_1d(np.asarray(self.drift, dtype=float))
        diff = np.asarray(self.diffusion, dtype=float)
        if diff.ndim == 0:
            diff = diff.reshape(1, 1)
        m = drift.shape[0]
        if diff.shape != (m, m):
            raise ShapeError(f"diffusion shape {diff.shape} does not match drift ({m},)")
        if not np.allclose(diff, diff.T, atol=_TOL_PSD):
            raise ValueError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(diff).min() < -_TOL_PSD:
            raise ValueError("diffusion matrix must be positive semidefinite")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diff)

    @property
    def dimension(self) -> int:
        return self.drift.shape[0]


def _stable_intensity(alpha: float, scale: float) -> float:
    # K with n(w) = K |w|^(-1-alpha) giving exponent (scale |xi|)^alpha
    return scale ** alpha * gamma_fn(1.0 + alpha) * math.sin(math.pi * alpha / 2.0) / math.pi


def _scalar_triplet(fam, ts):
    """(drift, q, density-or-None) for a one-dimensional family at time scale ts."""
    if isinstance(fam, Brownian):
        return 0.0, ts * fam.volatility ** 2, None
    if isinstance(fam, Cauchy):
        return 0.0, 0.0, JumpDensity("cauchy", (fam.scale,), ts)
    if isinstance(fam, SymmetricStable):
        if fam.alpha == 2.0:
            # the exponent (c|xi|)^2 is purely Gaussian
            return 0.0, ts * 2.0 * fam.scale ** 2, None
        return 0.0, 0.0, JumpDensity(
            "stable", (fam.alpha, _stable_intensity(fam.alpha, fam.scale)), ts)
    if isinstance(fam, Gamma):
        b, a = fam.shape, fam.rate
        # drift under the |w| <= 1 cutoff: integral of w n(w) dw over (0, 1]
        return ts * (b / a) * (1.0 - math.exp(-a)), 0.0, JumpDensity("gamma", (b, a), ts)
    if isinstance(fam, DriftOnly):
        return ts * fam.slope, 0.0, None
    raise TypeError(type(fam).__name__)


@lru_cache(maxsize=None)
def triplet_of(spec: LevyDriverSpec) -> LevyTriplet:
    """Generating triplet of the driver under the cutoff |w| <= 1."""
    fam = spec.family
    if isinstance(fam, Composite):
        m = spec.dimension
        drift = np.zeros(m)
        diff = np.zeros((m, m))
        jumps = []
        for j, comp in enumerate(fam.components):
            ell, q, dens = _scalar_triplet(comp.family, spec.time_scale * comp.time_scale)
            drift[j] = ell
            diff[j, j] = q
            if dens is not None:
                jumps.append(JumpAxis(j, dens))
        return LevyTriplet(drift, diff, tuple(jumps))
    ell, q, dens = _scalar_triplet(fam, spec.time_scale)
    jumps = (JumpAxis(0, dens),) if dens is not None else ()
    return LevyTriplet(np.array([ell]), np.array([[q]]), jumps)
