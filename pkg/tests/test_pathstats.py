import math

import numpy as np
import pytest

from itersde import (Brownian, Cauchy, DegenerateSymbolError, DriftOnly, Gamma,
                     LevyDriverSpec, PreconditionError, SymmetricStable,
                     field_from_text, gamma_variation, smalltime_scaling,
                     upper_index_coupled, upper_index_from_symbol,
                     upper_index_of_driver, verify_index_inheritance)


def test_index_recovers_power_laws():
    cases = [(LevyDriverSpec(Brownian(1.0)), 2.0),
             (LevyDriverSpec(Cauchy(1.0)), 1.0),
             (LevyDriverSpec(SymmetricStable(1.5, 1.0)), 1.5),
             (LevyDriverSpec(SymmetricStable(0.5, 1.0)), 0.5)]
    for drv, expect in cases:
        est = upper_index_of_driver(drv)
        assert abs(est.beta - expect) <= 0.05, drv


def test_index_gamma_is_logarithmic():
    est = upper_index_of_driver(LevyDriverSpec(Gamma(2.0, 1.0)))
    assert est.beta <= 0.15


def test_index_invariant_under_rescaling():
    a = upper_index_of_driver(LevyDriverSpec(Cauchy(1.0)))
    b = upper_index_of_driver(LevyDriverSpec(Cauchy(1.0), time_scale=250.0))
    assert abs(a.beta - b.beta) <= 1e-9
    np.testing.assert_allclose(a.slopes, b.slopes, atol=1e-9)


def test_index_coupled_at_point(bounded_pair):
    phi, psi = bounded_pair
    drv = LevyDriverSpec(SymmetricStable(1.5, 1.0))
    est = upper_index_coupled(phi, psi, drv, [0.3], [-0.7])
    assert abs(est.beta - 1.5) <= 0.05
    assert est.n_directions >= 64 + 4   # sampled directions plus the axes


def test_index_parameter_validation():
    drv = LevyDriverSpec(Brownian(1.0))
    with pytest.raises(ValueError):
        upper_index_of_driver(drv, shell_radii=(1e3, 1e2))
    with pytest.raises(ValueError):
        upper_index_of_driver(drv, shell_radii=(1e2, 1e3))
    with pytest.raises(ValueError):
        upper_index_of_driver(drv, n_directions=16)


def test_index_degenerate_symbol():
    def dead(_, eta):
        return np.zeros(eta.shape[0])
    with pytest.raises(DegenerateSymbolError):
        upper_index_from_symbol(dead, None, 2)


def test_inheritance_identity_fields():
    phi = field_from_text("[[1]]", in_dim=1)
    psi = field_from_text("[[1]]", in_dim=1)
    drv = LevyDriverSpec(SymmetricStable(1.5, 1.0))
    rep = verify_index_inheritance(phi, psi, drv, [([0.0], [0.0]), ([1.0], [2.0])])
    assert rep
    assert abs(rep.driver_beta - 1.5) <= 0.05
    for b in rep.point_betas:
        assert b <= rep.driver_beta + rep.margin


def test_inheritance_bounded_nonconstant(bounded_pair):
    phi, psi = bounded_pair
    drv = LevyDriverSpec(Cauchy(1.0))
    pts = [([x], [y]) for x, y in [(0.0, 0.0), (1.2, -0.4), (-2.0, 3.0)]]
    rep = verify_index_inheritance(phi, psi, drv, pts)
    assert rep.ok and len(rep.point_betas) == 3


def test_inheritance_names_failed_hypothesis():
    drv = LevyDriverSpec(Brownian(1.0))
    good = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    with pytest.raises(PreconditionError, match="bijective"):
        verify_index_inheritance(good, field_from_text("[[sin(y1)]]", in_dim=1),
                                 drv, [([0.0], [0.0])])
    with pytest.raises(PreconditionError, match="bounded"):
        verify_index_inheritance(good, field_from_text("[[2 + y1]]", in_dim=1),
                                 drv, [([0.0], [0.0])])
    with pytest.raises(PreconditionError, match="square"):
        verify_index_inheritance(field_from_text("[[1, 0]]", in_dim=1), good,
                                 drv, [([0.0], [0.0])])


def test_variation_linear_path():
    # g(t) = t has 1-variation exactly 1 at every dyadic level
    t = np.linspace(0.0, 1.0, 1025)[:, None]
    rep = gamma_variation(t, gamma=1.0)
    assert all(s == pytest.approx(1.0, rel=1e-12) for s in rep.level_sums)
    assert rep.verdict == "stabilizing"
    assert not rep.truncated


def test_variation_single_jump():
    # a unit step contributes one increment of size 1 at every level
    v = np.zeros((257, 1))
    v[129:] = 1.0
    for g in (0.5, 1.0, 2.0):
        rep = gamma_variation(v, gamma=g, n_levels=5)
        assert all(s == 1.0 for s in rep.level_sums)
        assert rep.verdict == "stabilizing"


def test_variation_monotone_in_level_for_small_gamma():
    # subadditivity of w -> w^gamma for gamma <= 1 makes refinements grow
    gen = np.random.default_rng(8)
    v = np.cumsum(gen.normal(size=(2049, 1)), axis=0)
    rep = gamma_variation(v, gamma=0.7)
    assert all(r >= 1.0 - 1e-12 for r in rep.ratios)


def test_variation_monotone_in_gamma():
    gen = np.random.default_rng(9)
    # steps small enough that even 16-step aggregates stay below 1 in
    # norm, so w -> w^gamma is pointwise nonincreasing in gamma
    v = np.cumsum(gen.uniform(-0.03, 0.03, size=(1025, 1)), axis=0)
    reps = [gamma_variation(v, gamma=g, n_levels=4) for g in (0.5, 1.0, 1.8)]
    for a, b in zip(reps, reps[1:]):
        assert all(x >= y for x, y in zip(a.level_sums, b.level_sums))


def test_variation_brownian_verdicts():
    # quadratic variation of Brownian motion stabilizes; 1.5-variation diverges
    gen = np.random.default_rng(10)
    dt = 1.0 / (1 << 14)
    w = np.cumsum(gen.normal(0.0, math.sqrt(dt), size=(8, (1 << 14), 1)), axis=1)
    w = np.concatenate([np.zeros((8, 1, 1)), w], axis=1)
    assert gamma_variation(w, gamma=2.5).verdict == "stabilizing"
    assert gamma_variation(w, gamma=1.5).verdict == "diverging"


def test_variation_input_validation():
    v = np.zeros((65, 1))
    with pytest.raises(ValueError):
        gamma_variation(v, gamma=0.0)
    with pytest.raises(Exception):
        gamma_variation(np.zeros(65), gamma=1.0)
    with pytest.raises(Exception):
        gamma_variation(np.zeros((5, 1)), gamma=1.0, n_levels=6)


def test_variation_flags_truncated_ensembles():
    class Fake:
        values = np.cumsum(np.ones((2, 129, 1)), axis=1)
        explosion_fraction = 0.5
    rep = gamma_variation(Fake(), gamma=1.0, n_levels=3)
    assert rep.truncated


def test_smalltime_frozen_outer_is_consistent():
    phi = field_from_text("[[0]]", in_dim=1)
    psi = field_from_text("[[1]]", in_dim=1)
    drv = LevyDriverSpec(Brownian(1.0))
    rep = smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=3.0,
                            times=(0.01, 0.1), n_paths=50)
    assert rep.statistic == (0.0, 0.0)
    assert rep.ratio == 0.0 and rep.consistent


def test_smalltime_direction_of_evidence(bounded_pair):
    phi, psi = bounded_pair
    drv = LevyDriverSpec(Brownian(1.0))
    times = (1e-3, 1e-2, 1e-1)
    above = smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=4.0,
                              times=times, n_paths=600, master_seed=3)
    below = smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=1.0,
                              times=times, n_paths=600, master_seed=3)
    # sup scales like t^(1/2): normalizing by t^(1/4) keeps the statistic
    # growing in t, normalizing by t^(-1) reverses it
    assert above.consistent
    assert not below.consistent
    assert below.ratio > 1.0


def test_smalltime_validation(bounded_pair):
    phi, psi = bounded_pair
    drv = LevyDriverSpec(Brownian(1.0))
    with pytest.raises(ValueError):
        smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=0.0, times=(0.1,))
    with pytest.raises(ValueError):
        smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=1.0, times=())
    with pytest.raises(ValueError):
        smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=1.0, times=(0.0, 0.1))
