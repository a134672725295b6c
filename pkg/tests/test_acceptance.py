"""End-to-end acceptance gates.

Each test is one pass/fail line covering one advertised guarantee of the
package, with the tolerance pinned next to the check.  These are the
slow, integration-level checks; the per-module test files carry the
fine-grained oracles.
"""

import json
import math
import os

import numpy as np
import pytest

from itersde import (Brownian, Cauchy, Gamma, LevyDriverSpec, RngStream,
                     SymmetricStable, TimeGrid, characteristics_at, euler_coupled,
                     euler_inner, euler_outer, field_from_text, gamma_variation,
                     gaussian_bump, generator_apply, markov_diagnostic, mc_symbol,
                     plane_wave, smalltime_scaling, symbol_coupled,
                     upper_index_of_driver, verify_index_inheritance)
from itersde.cli import main


def _rand_entry(gen, prefix, dim):
    k = int(gen.integers(1, dim + 1))
    a = float(gen.uniform(0.5, 2.0))
    b = float(gen.uniform(-1.5, 1.5))
    forms = (f"{a:.4f}",
             f"{a:.4f} + {b:.4f}*sin({prefix}{k})",
             f"{a:.4f}*cos({prefix}{k})",
             f"clamp({b:.4f}*{prefix}{k}, -2, 2)",
             f"{a:.4f} + {b:.4f}*expdecay({prefix}{k})")
    return forms[int(gen.integers(len(forms)))]


def _rand_system(gen):
    d = int(gen.integers(1, 3))
    n = int(gen.integers(1, 3))
    psi = field_from_text([[_rand_entry(gen, "y", n)] for _ in range(n)],
                          in_dim=n)
    phi = field_from_text([[_rand_entry(gen, "x", d) for _ in range(n)]
                           for _ in range(d)], in_dim=d)
    x0 = gen.normal(size=d)
    y0 = gen.normal(size=n)
    return phi, psi, x0, y0


def test_coupled_and_iterated_schemes_agree():
    # 100 random systems x 3 driver families, every grid point within
    # 1e-12 relative
    gen = np.random.default_rng(2024)
    grid = TimeGrid(0.0, 0.5, 256)
    families = (LevyDriverSpec(Brownian(1.0)), LevyDriverSpec(Cauchy(0.8)),
                LevyDriverSpec(Gamma(2.0, 1.0)))
    worst = 0.0
    for cfg in range(100):
        phi, psi, x0, y0 = _rand_system(gen)
        for fam, drv in enumerate(families):
            seed = 1000 * cfg + fam
            v = euler_coupled(phi, psi, drv, x0, y0, grid, RngStream(seed))
            y = euler_inner(psi, drv, y0, grid, RngStream(seed))
            x = euler_outer(phi, x0, y)
            d = len(x0)
            np.testing.assert_array_equal(v.values[:, d:], y.values)
            ref = np.concatenate([x.values, y.values], axis=1)
            gap = np.max(np.abs(v.values - ref) / (1.0 + np.abs(ref)))
            worst = max(worst, gap)
    assert worst <= 1e-12, worst


def test_symbol_routes_and_reconstruction_agree():
    # 200 random queries per family: direct substitution within 1e-12,
    # quadrature reconstruction within 1e-4 relative
    phi = field_from_text("[[2 + cos(x1)]]", in_dim=1)
    psi = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    families = (LevyDriverSpec(Brownian(1.2)), LevyDriverSpec(Cauchy(0.9)),
                LevyDriverSpec(SymmetricStable(1.5, 1.0)),
                LevyDriverSpec(SymmetricStable(0.5, 0.8)),
                LevyDriverSpec(Gamma(2.0, 1.5)))
    gen = np.random.default_rng(7)
    for drv in families:
        for _ in range(200):
            x, y = gen.normal(size=1), gen.normal(size=1)
            xi = gen.normal(0.0, 3.0, size=2)
            q = symbol_coupled(phi, psi, drv, x, y, xi)
            M = np.vstack([phi.eval(x) @ psi.eval(y), psi.eval(y)])
            q_sub = complex(np.asarray(drv.exponent(float(M[:, 0] @ xi)))[()])
            assert abs(q - q_sub) <= 1e-12 * (1.0 + abs(q))
        char = characteristics_at(phi, psi, drv, [0.3], [-0.7])
        for _ in range(20):
            xi = gen.normal(0.0, 3.0, size=2)
            q = symbol_coupled(phi, psi, drv, [0.3], [-0.7], xi)
            r = char.lk_reconstruct(xi)
            assert abs(q - r) <= 1e-4 * (1.0 + abs(q)), (drv, xi)


def test_mc_symbol_limit_and_radius_insensitivity():
    # Brownian, unit coefficients, xi = (1, 1): q = 2; the estimate must
    # land within 10% and 3 stderr, and moving the stopping radius from
    # 5 to 10 (fresh seed) must stay within 2 combined stderr
    phi = field_from_text("[[1]]", in_dim=1)
    psi = field_from_text("[[1]]", in_dim=1)
    drv = LevyDriverSpec(Brownian(1.0))
    est5 = mc_symbol(phi, psi, drv, [0.0], [0.0], [1.0, 1.0], t=1e-3,
                     radius=5.0, n_paths=100_000, master_seed=0)
    est10 = mc_symbol(phi, psi, drv, [0.0], [0.0], [1.0, 1.0], t=1e-3,
                      radius=10.0, n_paths=100_000, master_seed=1)
    assert abs(est5.value.real - 2.0) <= 0.1 * 2.0
    assert abs(est5.value.real - 2.0) <= 3.0 * est5.stderr[0]
    assert abs(est5.value.imag) <= 3.0 * est5.stderr[1]
    gap_re = abs(est5.value.real - est10.value.real)
    gap_im = abs(est5.value.imag - est10.value.imag)
    assert gap_re <= 2.0 * math.hypot(est5.stderr[0], est10.stderr[0])
    assert gap_im <= 2.0 * math.hypot(est5.stderr[1], est10.stderr[1])


def test_index_recovery_and_inheritance():
    targets = [(LevyDriverSpec(Brownian(1.0)), 2.0, 0.05),
               (LevyDriverSpec(Cauchy(1.0)), 1.0, 0.05),
               (LevyDriverSpec(SymmetricStable(0.5, 1.0)), 0.5, 0.05),
               (LevyDriverSpec(SymmetricStable(1.5, 1.0)), 1.5, 0.05),
               (LevyDriverSpec(Gamma(2.0, 1.0)), 0.0, 0.15)]
    for drv, expect, tol in targets:
        est = upper_index_of_driver(drv)
        assert abs(est.beta - expect) <= tol, (drv, est.beta)

    pairs = [(field_from_text("[[2 + cos(x1)]]", in_dim=1),
              field_from_text("[[2 + sin(y1)]]", in_dim=1),
              LevyDriverSpec(Cauchy(1.0))),
             (field_from_text("[[2 + 0.5*sin(x1)]]", in_dim=1),
              field_from_text("[[3 + cos(y1)]]", in_dim=1),
              LevyDriverSpec(SymmetricStable(1.5, 1.0)))]
    gen = np.random.default_rng(41)
    for phi, psi, drv in pairs:
        pts = [(gen.normal(size=1), gen.normal(size=1)) for _ in range(5)]
        rep = verify_index_inheritance(phi, psi, drv, pts, margin=0.1)
        assert rep.ok
        for b in rep.point_betas:
            assert abs(b - rep.driver_beta) <= 0.1


def test_gamma_variation_verdicts_over_seeds():
    # Brownian-driven bounded system on 2^17 grid points: 2.5-variation
    # of X stabilizes and 1.5-variation diverges in at least 18/20 seeds
    phi = field_from_text("[[2 + cos(x1)]]", in_dim=1)
    psi = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    drv = LevyDriverSpec(Brownian(1.0))
    grid = TimeGrid(0.0, 1.0, 1 << 17)
    stab = div = 0
    for seed in range(20):
        path = euler_coupled(phi, psi, drv, [0.0], [0.0], grid, RngStream(seed))
        x = path.values[:, :1]
        stab += gamma_variation(x, gamma=2.5).verdict == "stabilizing"
        div += gamma_variation(x, gamma=1.5).verdict == "diverging"
    assert stab >= 18, stab
    assert div >= 18, div


def test_smalltime_scaling_above_the_index():
    # lambda = 3 above the Brownian index 2: the normalized sup median
    # decreases as t drops through 1e-1, 1e-2, 1e-3
    phi = field_from_text("[[2 + cos(x1)]]", in_dim=1)
    psi = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    drv = LevyDriverSpec(Brownian(1.0))
    rep = smalltime_scaling(phi, psi, drv, [0.0], [0.0], lam=3.0,
                            times=(1e-1, 1e-2, 1e-3), n_paths=10_000,
                            master_seed=0)
    by_decreasing_t = rep.statistic[::-1]
    assert by_decreasing_t[0] > by_decreasing_t[1] > by_decreasing_t[2]
    assert rep.consistent


def test_generator_matches_symbol_and_finite_differences():
    # oscillating test functions: A e^{i v.xi} = -q(v, xi) e^{i v.xi}
    # within 1e-3 relative for a continuous and a pure-jump driver
    phi = field_from_text("[[2 + cos(x1)]]", in_dim=1)
    psi = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    x, y = [0.3], [-0.7]
    v0 = np.array([0.3, -0.7])
    for drv in (LevyDriverSpec(Brownian(1.0)), LevyDriverSpec(Cauchy(1.0))):
        for xi in (np.array([0.9, -1.4]), np.array([-1.0, 0.5])):
            q = symbol_coupled(phi, psi, drv, x, y, xi)
            a_cos = generator_apply(phi, psi, drv, x, y, plane_wave(xi))
            a_sin = generator_apply(phi, psi, drv, x, y,
                                    plane_wave(xi, phase=-math.pi / 2))
            got = a_cos + 1j * a_sin
            expected = -q * np.exp(1j * float(xi @ v0))
            assert abs(got - expected) <= 1e-3 * (1.0 + abs(q)), (drv, xi)

    # Gaussian bump under constant coefficients and a Brownian driver:
    # A u = (1/2) (2 d/dx + d/dy)^2 u, checked against second differences
    phi_c = field_from_text("[[2]]", in_dim=1)
    psi_c = field_from_text("[[1]]", in_dim=1)
    drv = LevyDriverSpec(Brownian(1.0))
    u = gaussian_bump([0.0, 0.0], width=1.5)
    v = np.array([0.2, 0.5])
    a = np.array([2.0, 1.0])
    h = 1e-4
    fd = 0.5 * (u.value(v + h * a) - 2 * u.value(v) + u.value(v - h * a)) / h ** 2
    got = generator_apply(phi_c, psi_c, drv, [0.2], [0.5], u)
    assert abs(got - fd) <= 1e-6 * abs(fd)


def test_conditional_law_split_rates():
    # inner-state-dependent volatility is detected at the 1% level in at
    # least 18/20 seeds; with a constant inner coefficient the same test
    # retains the null at 5% in at least 18/20
    phi = field_from_text("[[1 + 0.5*cos(x1)]]", in_dim=1)
    psi_dep = field_from_text("[[2 + sin(y1)]]", in_dim=1)
    psi_null = field_from_text("[[1]]", in_dim=1)
    drv = LevyDriverSpec(Brownian(1.0))
    rej = ret = 0
    for seed in range(20):
        dep = markov_diagnostic(phi, psi_dep, drv, [0.0], [0.0], t=1.0,
                                n_paths=8000, master_seed=seed)
        null = markov_diagnostic(phi, psi_null, drv, [0.0], [0.0], t=1.0,
                                 n_paths=8000, master_seed=seed)
        assert not dep.inconclusive and not null.inconclusive
        rej += dep.pvalue < 0.01
        ret += null.pvalue > 0.05
    assert rej >= 18, rej
    assert ret >= 18, ret


def test_figure_pipeline_is_deterministic(tmp_path):
    out1, out2 = str(tmp_path / "f1"), str(tmp_path / "f2")
    assert main(["reproduce-figures", "--out", out1]) == 0
    assert main(["reproduce-figures", "--out", out2]) == 0
    meta = json.load(open(os.path.join(out1, "metadata.json")))
    names = ("brownian", "cauchy", "gamma")
    for name in names:
        flagged = meta["explosions"][name]["x_exploded"]
        for tag in ("z", "y1", "x"):
            fname = f"{name}_{tag}.csv"
            data = np.genfromtxt(os.path.join(out1, fname), delimiter=",",
                                 skip_header=1)
            assert data.shape[0] == 10_001
            assert np.isfinite(data).all() or flagged, fname
            assert open(os.path.join(out1, fname), "rb").read() == \
                open(os.path.join(out2, fname), "rb").read(), fname
    assert os.path.exists(os.path.join(out1, "plot_figures.gp"))
    assert open(os.path.join(out1, "plot_figures.gp"), "rb").read() == \
        open(os.path.join(out2, "plot_figures.gp"), "rb").read()
