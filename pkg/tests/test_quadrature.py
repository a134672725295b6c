import math

import numpy as np
import pytest

from itersde import (Cauchy, Gamma, LevyDriverSpec, QuadratureError,
                     SymmetricStable, jump_functional, lk_jump_integral,
                     triplet_of)


def _density(spec):
    trip = triplet_of(spec)
    assert len(trip.jumps) == 1
    return trip.jumps[0].density


def test_cauchy_integral_matches_exponent():
    # for the Cauchy density the compensated integral IS the exponent
    dens = _density(LevyDriverSpec(Cauchy(1.0)))
    for c in (0.3, 1.0, 17.0, -4.2):
        val = lk_jump_integral(dens, c)
        assert val.imag == 0.0
        assert val.real == pytest.approx(abs(c), rel=1e-8)


def test_stable_integral_matches_exponent():
    for alpha in (0.5, 1.2, 1.8):
        dens = _density(LevyDriverSpec(SymmetricStable(alpha, 1.0)))
        for c in (0.9, 5.0, -28.0):
            val = lk_jump_integral(dens, c)
            assert val.imag == 0.0
            assert val.real == pytest.approx(abs(c) ** alpha, rel=1e-7)


def test_gamma_integral_matches_exponent():
    # Gamma(b, a): full exponent = b log(1 - ic/a); the jump part differs
    # from it by the triplet drift term i c * drift
    b, a = 2.0, 1.0
    spec = LevyDriverSpec(Gamma(b, a))
    trip = triplet_of(spec)
    dens = trip.jumps[0].density
    for c in (0.5, 3.0, -7.0):
        want = b * complex(np.log(1.0 - 1j * c / a)) + 1j * c * trip.drift[0]
        got = lk_jump_integral(dens, c)
        assert got == pytest.approx(want, rel=1e-7)


def test_symmetric_integral_exactly_real():
    dens = _density(LevyDriverSpec(SymmetricStable(1.5, 1.0)))
    assert lk_jump_integral(dens, 12.345).imag == 0.0


def test_cutoff_shift_identity():
    # J_{r1} - J_{r2} = i c (mean_upto(r1) - mean_upto(r2)), asymmetric case
    dens = _density(LevyDriverSpec(Gamma(2.0, 1.0)))
    c = 2.5
    j1 = lk_jump_integral(dens, c, cutoff_radius=1.0)
    j2 = lk_jump_integral(dens, c, cutoff_radius=0.3)
    shift = 1j * c * (dens.mean_upto(1.0) - dens.mean_upto(0.3))
    assert j1 - j2 == pytest.approx(shift, rel=1e-7)


def test_unmeetable_budget_raises():
    dens = _density(LevyDriverSpec(SymmetricStable(1.5, 1.0)))
    with pytest.raises(QuadratureError) as exc:
        lk_jump_integral(dens, 3.0, atol=1e-16, rtol=1e-16)
    assert exc.value.residual > 0.0


def test_jump_functional_closed_form():
    # Cauchy density n(w) = 1/(pi w^2); g = min(w^2, 1):
    # 2 [ int_0^1 w^2 n dw + int_1^inf n dw ] = 2 [1/pi + 1/pi] = 4/pi
    dens = _density(LevyDriverSpec(Cauchy(1.0)))
    got = jump_functional(dens, lambda w: min(w * w, 1.0), points=(1.0,))
    assert got == pytest.approx(4.0 / math.pi, rel=1e-9)


def test_jump_functional_gamma_quadratic():
    # one-sided Gamma density b e^{-aw}/w: integral of w^2 n(dw) = b / a^2
    b, a = 2.0, 3.0
    dens = _density(LevyDriverSpec(Gamma(b, a)))
    got = jump_functional(dens, lambda w: w * w)
    assert got == pytest.approx(b / a ** 2, rel=1e-9)


def test_density_moment_helpers():
    # closed forms for the stable density K |w|^{-1-alpha}
    alpha = 1.5
    dens = _density(LevyDriverSpec(SymmetricStable(alpha, 1.0)))
    # m2(eps) = C eps^{2-alpha}: check the ratio between two radii
    r = dens.second_moment_upto(0.5) / dens.second_moment_upto(0.25)
    assert r == pytest.approx(2.0 ** (2 - alpha), rel=1e-12)
    # symmetric: mean vanishes
    assert dens.mean_upto(0.7) == 0.0
    # tail mass scaling: N(|w|>r) = C r^{-alpha}
    t = dens.tail_mass(2.0) / dens.tail_mass(4.0)
    assert t == pytest.approx(2.0 ** alpha, rel=1e-12)
