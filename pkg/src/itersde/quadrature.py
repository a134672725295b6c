"""Numerical integration against Levy jump densities.

The densities are singular at the origin, so every integral is split:
below a small radius ``eps`` the integrand is replaced by its Taylor
expansion and integrated in closed form against the density's exact
small-jump moments; the oscillatory middle and tail pieces go through
adaptive quadrature with explicit cos/sin weights (QAWO on the finite
part, QAWF on the infinite part).  Every routine tracks the accumulated
error estimate and raises ``QuadratureError`` if it exceeds its budget.
"""

import math

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureError

_EPS_SMALL = 1e-4    # below this radius the integrand expansion is used
_QUAD_ABS = 1e-12
_QUAD_REL = 1e-10
_LIMIT = 300


def _q(f, a, b, weight=None, wvar=None):
    """quad with warnings folded into the returned error estimate."""
    kw = dict(epsabs=_QUAD_ABS, limit=_LIMIT, full_output=1)
    if weight is not None:
        kw.update(weight=weight, wvar=wvar)
        if not math.isinf(b):
            kw.update(epsrel=_QUAD_REL)
    else:
        kw.update(epsrel=_QUAD_REL)
    res = quad(f, a, b, **kw)
    return res[0], res[1]


def _side_factor(density) -> float:
    # two-sided moments of symmetric densities split evenly per side
    return 0.5 if density.symmetric else 1.0


def lk_jump_integral(density, c: float, cutoff_radius: float = 1.0,
                     eps: float = _EPS_SMALL, atol: float = 1e-9,
                     rtol: float = 1e-7) -> complex:
    """integral of (1 - exp(icw) + icw 1_{|w| <= cutoff_radius}) n(w) dw.

    ``density`` is a JumpDensity; symmetry is exploited, so the result
    has exactly zero imaginary part for symmetric densities.
    """
    c = float(c)
    if c == 0.0:
        return 0j
    if c < 0.0:
        return lk_jump_integral(density, -c, cutoff_radius, eps, atol, rtol).conjugate()

    r = float(cutoff_radius)
    if not r > 0.0:
        raise ValueError("cutoff_radius must be positive")
    # shrink the expansion radius with frequency so the dropped c^4 w^4
    # term stays below the relative budget
    e = min(eps, r, 4e-4 / c)
    half = _side_factor(density)
    sym = density.symmetric

    errs = []

    # (0, e]: 1 - cos(cw) ~ c^2 w^2 / 2,  cw - sin(cw) ~ c^3 w^3 / 6
    m2 = half * density.second_moment_upto(e)
    re = 0.5 * c * c * m2
    errs.append(c ** 4 * e * e * m2 / 24.0)
    if sym:
        im = 0.0
    else:
        m3 = density.third_abs_moment_upto(e)
        im = c ** 3 * m3 / 6.0
        errs.append(c ** 5 * e * e * m3 / 120.0)

    # (e, w*]: slow oscillation; integrate the compensated integrand
    # directly, which kills the cancellation against the singular mass
    w_star = min(r, max(e, 10.0 / c))
    if w_star > e:
        v, err = _q(lambda w: (1.0 - math.cos(c * w)) * density(w), e, w_star)
        re += v
        errs.append(err)
        if not sym:
            v, err = _q(lambda w: (c * w - math.sin(c * w)) * density(w), e, w_star)
            im += v
            errs.append(err)

    # (w*, r]: fast oscillation; explicit cos/sin weights (the mass term
    # no longer dwarfs the result out here)
    if r > w_star:
        mass_mid = half * (density.tail_mass(w_star) - density.tail_mass(r))
        cos_mid, err = _q(density, w_star, r, weight="cos", wvar=c)
        errs.append(err)
        re += mass_mid - cos_mid
        if not sym:
            mean_mid = density.mean_upto(r) - density.mean_upto(w_star)
            sin_mid, err = _q(density, w_star, r, weight="sin", wvar=c)
            errs.append(err)
            im += c * mean_mid - sin_mid

    # (r, inf): uncompensated tail
    mass_tail = half * density.tail_mass(r)
    cos_tail, err = _q(density, r, np.inf, weight="cos", wvar=c)
    errs.append(err)
    re += mass_tail - cos_tail
    if not sym:
        sin_tail, err = _q(density, r, np.inf, weight="sin", wvar=c)
        errs.append(err)
        im -= sin_tail

    if sym:
        val = complex(2.0 * re, 0.0)
    else:
        val = complex(re, im)

    residual = float(sum(errs))
    if residual > max(atol, rtol * abs(val)):
        raise QuadratureError(
            f"jump integral at frequency {c:g} did not converge", residual)
    return val


def lk_exponent(triplet, xi, cutoff_radius: float = 1.0) -> complex:
    """Reconstruct the characteristic exponent from a generating triplet.

    psi(xi) = -i l'xi + xi'Q xi / 2 + sum over jump axes of the
    one-dimensional compensated integral at frequency xi[axis].
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (triplet.dimension,):
        from .errors import ShapeError
        raise ShapeError(
            f"xi shape {xi.shape} does not match triplet dimension {triplet.dimension}")
    val = complex(-1j * float(triplet.drift @ xi)
                  + 0.5 * float(xi @ triplet.diffusion @ xi))
    for jump in triplet.jumps:
        val += lk_jump_integral(jump.density, xi[jump.axis], cutoff_radius)
    return val


def jump_functional(density, g, points=(), eps: float = 1e-6,
                    atol: float = 1e-9, rtol: float = 1e-7) -> float:
    """integral of g(w) n(w) dw for g vanishing quadratically at 0.

    ``points`` marks locations where g changes analytic form (kinks),
    so the adaptive quadrature can split there.
    """
    half = _side_factor(density)
    errs = []

    # below eps: g(w) ~ g(eps)/eps^2 * w^2 (per side)
    m2_half = half * density.second_moment_upto(eps)
    val = (g(eps) / eps ** 2) * m2_half
    if density.symmetric:
        val += (g(-eps) / eps ** 2) * m2_half
    errs.append(abs(val) * 1e-6)  # expansion error, O(eps) relative

    pts = sorted(p for p in points if p > eps)

    def one_side(fn):
        total = 0.0
        prev = eps
        for p in pts:
            v, err = _q(fn, prev, p)
            total += v
            errs.append(err)
            prev = p
        v, err = _q(fn, prev, np.inf)
        errs.append(err)
        return total + v

    val += one_side(lambda w: g(w) * density(w))
    if density.symmetric:
        val += one_side(lambda w: g(-w) * density(w))

    residual = float(sum(errs))
    if residual > max(atol, rtol * abs(val)):
        raise QuadratureError("jump functional did not converge", residual)
    return float(val)
