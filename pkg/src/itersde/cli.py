"""Command line experiment runner.

Every subcommand reads a YAML config (see ``ExperimentConfig``), writes
CSV files with stable documented headers into the output directory,
and drops two sidecars next to them: ``resolved_config.yaml`` (the
exact configuration that ran) and ``metadata.json`` (seed, library
versions, kernel backend, explosion fractions, and per-command summary
results).  Outputs are byte-identical across reruns and thread counts
at a fixed master seed.  Failures print a one-line JSON error record to
stderr; exit status 2 flags a config problem, 1 a runtime one.
"""

import argparse
import json
import os
import sys

import numpy as np
import scipy
import yaml

from . import __version__
from .config import ExperimentConfig, build_field, driver_to_dict
from .coefficients import compose_M
from .drivers import (Brownian, Cauchy, Composite, DriftOnly, Gamma,
                      LevyDriverSpec)
from .errors import ConfigError, ItersdeError
from .integrator import TimeGrid, coupled_ensemble, euler_inner, euler_outer
from .kernels import KERNEL_BACKEND
from .markov import markov_diagnostic
from .pathstats import (gamma_variation, smalltime_scaling, upper_index_coupled,
                        upper_index_of_driver, verify_index_inheritance)
from .rng import RngStream
from .symbols import (characteristics_at, gaussian_bump, generator_apply,
                      mc_symbol, plane_wave, symbol_coupled)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _versions() -> dict:
    return {"python": sys.version.split()[0], "numpy": np.__version__,
            "scipy": scipy.__version__, "itersde": __version__}


def _write_sidecars(out_dir, command, resolved: dict, seed, threads, extra: dict):
    meta = {"command": command, "master_seed": seed, "threads": threads,
            "backend": KERNEL_BACKEND, "versions": _versions()}
    meta.update(extra)
    with open(os.path.join(out_dir, "resolved_config.yaml"), "w") as fh:
        yaml.safe_dump(resolved, fh, sort_keys=True)
    with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_plot_script(csv_paths, out_path, n_cols: int = 3,
                     image_name: str = "figures.png"):
    """Write a gnuplot script rendering one panel per CSV, n_cols wide."""
    names = []
    for p in csv_paths:
        if not os.path.exists(p):
            raise FileNotFoundError(p)
        names.append(os.path.basename(p))
    n = len(names)
    cols = min(n_cols, n)
    rows = (n + cols - 1) // cols
    lines = [
        "# render with: gnuplot <this file>",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set key off",
        f"set terminal pngcairo size {450 * cols},{320 * rows}",
        f"set output '{image_name}'",
        f"set multiplot layout {rows},{cols}",
    ]
    for name in names:
        stem = os.path.splitext(name)[0].replace("_", " ")
        lines.append(f"set title '{stem}'")
        lines.append(f"plot '{name}' using 1:2 with lines lw 1")
    lines.append("unset multiplot")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return out_path


# ---------------------------------------------------------------------------
# subcommand handlers; each returns the metadata extras dict

def _run_simulate(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    grid = cfg.build_grid()
    ens = coupled_ensemble(phi, psi, drv, cfg.x0, cfg.y0, grid, cfg.n_paths,
                           cfg.master_seed, threads=cfg.threads)
    d, n = len(cfg.x0), len(cfg.y0)
    header = (["path", "t"] + [f"x{i+1}" for i in range(d)]
              + [f"y{j+1}" for j in range(n)])
    times = ens.times

    def rows():
        for b in range(cfg.n_paths):
            for si in range(len(times)):
                yield [b, times[si]] + list(ens.values[b, si])

    write_csv(os.path.join(out_dir, "paths.csv"), header, rows())
    return {"explosion_fraction": ens.explosion_fraction,
            "files": ["paths.csv"]}


def _run_symbol_eval(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    xi = np.atleast_2d(cfg.param_vector("xi"))
    p = len(cfg.x0) + len(cfg.y0)
    if xi.shape[1] != p:
        raise ConfigError("params.xi", f"frequency vectors must have length {p}")
    q = np.atleast_1d(symbol_coupled(phi, psi, drv, cfg.x0, cfg.y0, xi))
    header = [f"xi{i+1}" for i in range(p)] + ["re_q", "im_q"]
    rows = [list(xi[k]) + [q[k].real, q[k].imag] for k in range(len(xi))]
    write_csv(os.path.join(out_dir, "symbol.csv"), header, rows)
    return {"files": ["symbol.csv"]}


def _run_mc_symbol(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    xi = cfg.param_vector("xi")
    if xi.shape != (len(cfg.x0) + len(cfg.y0),):
        raise ConfigError("params.xi", "must be a single frequency vector of "
                          f"length {len(cfg.x0) + len(cfg.y0)}")
    t = float(cfg.params.get("t", 0.01))
    radii = np.atleast_1d(np.asarray(cfg.params.get("radius", 5.0), dtype=float))
    dt_target = float(cfg.params.get("dt_target", 1e-4))
    header = ["t", "radius", "n_paths", "re_q", "im_q", "stderr_re", "stderr_im",
              "exit_fraction", "explosion_fraction"]
    rows, expl = [], 0.0
    for r in radii:
        est = mc_symbol(phi, psi, drv, cfg.x0, cfg.y0, xi, t=t, radius=float(r),
                        n_paths=cfg.n_paths, master_seed=cfg.master_seed,
                        dt_target=dt_target, threads=cfg.threads)
        rows.append([est.t, est.radius, est.n_paths, est.value.real,
                     est.value.imag, est.stderr[0], est.stderr[1],
                     est.exit_fraction, est.explosion_fraction])
        expl = max(expl, est.explosion_fraction)
    write_csv(os.path.join(out_dir, "mc_symbol.csv"), header, rows)
    return {"explosion_fraction": expl, "files": ["mc_symbol.csv"]}


def _run_characteristics(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    ct = characteristics_at(phi, psi, drv, cfg.x0, cfg.y0)
    rows = []
    for i, v in enumerate(ct.drift):
        rows.append(["drift", i, 0, v, ""])
    for i in range(ct.dimension):
        for j in range(ct.dimension):
            rows.append(["diffusion", i, j, ct.diffusion[i, j], ""])
    for k, ax in enumerate(ct.jumps):
        for j, v in enumerate(ax.direction):
            rows.append(["jump_direction", k, j, v, ax.density.kind])
        rows.append(["jump_cutoff", k, 0, ax.cutoff_radius, ax.density.kind])
        rows.append(["jump_weight", k, 0, ax.density.weight, ax.density.kind])
    write_csv(os.path.join(out_dir, "characteristics.csv"),
              ["block", "i", "j", "value", "note"], rows)
    return {"n_jump_axes": len(ct.jumps), "files": ["characteristics.csv"]}


def _run_generator(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    tf = cfg.params.get("test_function", {"kind": "plane_wave"})
    kind = tf.get("kind", "plane_wave")
    p = len(cfg.x0) + len(cfg.y0)
    if kind == "plane_wave":
        xi = np.atleast_2d(cfg.param_vector("xi"))
        if xi.shape[1] != p:
            raise ConfigError("params.xi", f"frequency vectors must have length {p}")
        phase = float(tf.get("phase", 0.0))
        header = [f"xi{i+1}" for i in range(p)] + ["value"]
        rows = []
        for row in xi:
            u = plane_wave(row, phase)
            rows.append(list(row) + [generator_apply(phi, psi, drv, cfg.x0,
                                                     cfg.y0, u)])
    elif kind == "gaussian_bump":
        center = np.asarray(tf.get("center",
                                   list(cfg.x0) + list(cfg.y0)), dtype=float)
        u = gaussian_bump(center, width=float(tf.get("width", 1.0)))
        header = ["value"]
        rows = [[generator_apply(phi, psi, drv, cfg.x0, cfg.y0, u)]]
    else:
        raise ConfigError("params.test_function.kind",
                          "must be 'plane_wave' or 'gaussian_bump'")
    write_csv(os.path.join(out_dir, "generator.csv"), header, rows)
    return {"files": ["generator.csv"]}


def _index_kwargs(cfg):
    kw = {}
    if "shell_radii" in cfg.params:
        kw["shell_radii"] = tuple(float(r) for r in cfg.params["shell_radii"])
    if "n_directions" in cfg.params:
        kw["n_directions"] = int(cfg.params["n_directions"])
    return kw


def _run_index(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    target = cfg.params.get("index_target", "coupled")
    if target == "driver":
        rep = upper_index_of_driver(drv, **_index_kwargs(cfg))
    elif target == "coupled":
        phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
        rep = upper_index_coupled(phi, psi, drv, cfg.x0, cfg.y0,
                                  **_index_kwargs(cfg))
    else:
        raise ConfigError("params.index_target", "must be 'driver' or 'coupled'")
    rows = []
    for k, (radius, val) in enumerate(rep.shells):
        slope = rep.slopes[k - 1] if k > 0 else ""
        rows.append([target, radius, val, slope, rep.beta])
    write_csv(os.path.join(out_dir, "index.csv"),
              ["target", "radius", "shell_value", "slope", "beta"], rows)
    return {"beta": rep.beta, "files": ["index.csv"]}


def _run_inheritance(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    d, n = len(cfg.x0), len(cfg.y0)
    if "points" in cfg.params:
        pts = [(np.asarray(p[0], dtype=float), np.asarray(p[1], dtype=float))
               for p in cfg.params["points"]]
    else:
        gen = RngStream(cfg.master_seed).generator()
        pts = [(gen.standard_normal(d), gen.standard_normal(n))
               for _ in range(int(cfg.params.get("n_points", 5)))]
    margin = float(cfg.params.get("margin", 0.1))
    rep = verify_index_inheritance(phi, psi, drv, pts, margin=margin,
                                   **_index_kwargs(cfg))
    header = (["point"] + [f"x{i+1}" for i in range(d)]
              + [f"y{j+1}" for j in range(n)] + ["beta"])
    rows = [[k] + list(x) + list(y) + [rep.point_betas[k]]
            for k, (x, y) in enumerate(pts)]
    write_csv(os.path.join(out_dir, "inheritance.csv"), header, rows)
    return {"ok": rep.ok, "driver_beta": rep.driver_beta, "margin": margin,
            "files": ["inheritance.csv"]}


def _run_variation(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    grid = cfg.build_grid()
    gammas = cfg.params.get("gammas", cfg.params.get("gamma"))
    if gammas is None:
        raise ConfigError("params.gammas", "is required for this command")
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    n_levels = cfg.params.get("n_levels")
    ens = coupled_ensemble(phi, psi, drv, cfg.x0, cfg.y0, grid, cfg.n_paths,
                           cfg.master_seed, threads=cfg.threads)
    rows, verdicts = [], {}
    for g in gammas:
        rep = gamma_variation(ens, float(g),
                              None if n_levels is None else int(n_levels))
        verdicts[f"{g:g}"] = rep.verdict
        for lvl, s in enumerate(rep.level_sums):
            ratio = rep.ratios[lvl - 1] if lvl > 0 else ""
            rows.append([g, lvl, 1 << (rep.n_levels - lvl), s, ratio,
                         rep.verdict])
    write_csv(os.path.join(out_dir, "variation.csv"),
              ["gamma", "level", "stride", "sum", "ratio", "verdict"], rows)
    return {"verdicts": verdicts, "explosion_fraction": ens.explosion_fraction,
            "files": ["variation.csv"]}


def _run_smalltime(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    lam = cfg.params.get("lam")
    if not isinstance(lam, (int, float)) or lam <= 0:
        raise ConfigError("params.lam", "must be a positive number")
    times = cfg.param_vector("times")
    rep = smalltime_scaling(phi, psi, drv, cfg.x0, cfg.y0, float(lam), times,
                            n_paths=cfg.n_paths, master_seed=cfg.master_seed,
                            dt_factor=int(cfg.params.get("dt_factor", 10)),
                            threads=cfg.threads)
    rows = [[t, s, rep.consistent] for t, s in zip(rep.times, rep.statistic)]
    write_csv(os.path.join(out_dir, "smalltime.csv"),
              ["t", "statistic", "consistent"], rows)
    return {"lam": rep.lam, "monotone": rep.monotone, "ratio": rep.ratio,
            "consistent": rep.consistent, "files": ["smalltime.csv"]}


def _run_markov_test(cfg: ExperimentConfig, out_dir, clamp):
    drv = cfg.build_driver()
    phi, psi = cfg.build_phi(clamp), cfg.build_psi(clamp)
    window = cfg.params.get("window", [0.45, 0.55])
    diag = markov_diagnostic(
        phi, psi, drv, cfg.x0, cfg.y0,
        t=float(cfg.params.get("t", 1.0)), s=float(cfg.params.get("s", 0.25)),
        n_paths=cfg.n_paths, master_seed=cfg.master_seed,
        window=(float(window[0]), float(window[1])),
        n_steps_after=int(cfg.params.get("n_steps_after", 128)),
        min_group=int(cfg.params.get("min_group", 50)), threads=cfg.threads)
    write_csv(os.path.join(out_dir, "markov.csv"),
              ["statistic", "pvalue", "n_low", "n_high", "n_dropped",
               "inconclusive"],
              [[diag.statistic, diag.pvalue, diag.n_low, diag.n_high,
                diag.n_dropped, diag.inconclusive]])
    return {"pvalue": diag.pvalue, "inconclusive": diag.inconclusive,
            "files": ["markov.csv"]}


_HANDLERS = {
    "simulate": _run_simulate,
    "symbol-eval": _run_symbol_eval,
    "mc-symbol": _run_mc_symbol,
    "characteristics": _run_characteristics,
    "generator": _run_generator,
    "index": _run_index,
    "inheritance": _run_inheritance,
    "variation": _run_variation,
    "smalltime": _run_smalltime,
    "markov-test": _run_markov_test,
}


# ---------------------------------------------------------------------------
# figure reproduction

_FIG_PSI = [["sin(y1)", "2*y1"], ["0", "1"]]
_FIG_PHI = [["cos(x1)", "x1"]]
_FIG_DRIVERS = (("brownian", Brownian(1.0), 1000.0),
                ("cauchy", Cauchy(1.0), 1000.0),
                ("gamma", Gamma(2.0, 1.0), 100.0))


def reproduce_figures(out_dir, master_seed: int = 0, n_steps: int = 10_000,
                      t_end: float = 1.0, clamp: float = None, backend=None):
    """Single sample paths of Z, Y1, and X for the three showcase systems.

    The inner system is driven by (Z_t, t)' where Z runs at a deterministic
    speed (1000t for Brownian and Cauchy, 100t for the Gamma(2) case);
    Y2 = t carries the dt term of the outer equation.  Writes nine CSVs
    (driver x {z, y1, x}) plus a gnuplot script with one panel each.
    """
    phi = build_field(_FIG_PHI, 1, "phi", clamp=clamp)
    psi = build_field(_FIG_PSI, 2, "psi", clamp=clamp)
    grid = TimeGrid(0.0, t_end, n_steps)
    times = grid.times()
    files, explosions = [], {}
    for name, fam, speed in _FIG_DRIVERS:
        drv = LevyDriverSpec(Composite((
            LevyDriverSpec(fam, time_scale=speed),
            LevyDriverSpec(DriftOnly(1.0)))))
        stream = RngStream(master_seed)
        inc = drv.sample_increments(grid.dt, n_steps, stream.generator())
        z = np.concatenate([[0.0], np.cumsum(inc[:, 0])])
        y_path = euler_inner(psi, drv, [0.0, 0.0], grid, stream, backend=backend)
        x_path = euler_outer(phi, [0.0], y_path, backend=backend)
        for tag, series in (("z", z), ("y1", y_path.values[:, 0]),
                            ("x", x_path.values[:, 0])):
            path = os.path.join(out_dir, f"{name}_{tag}.csv")
            write_csv(path, ["t", "value"],
                      ([times[k], series[k]] for k in range(len(times))))
            files.append(path)
        explosions[name] = {
            "y_exploded": bool(y_path.exploded), "x_exploded": bool(x_path.exploded),
            "x_explosion_step": int(x_path.explosion_step)}
    script = emit_plot_script(files, os.path.join(out_dir, "plot_figures.gp"))
    resolved = {"phi": _FIG_PHI, "psi": _FIG_PSI, "x0": [0.0], "y0": [0.0, 0.0],
                "grid": {"t0": 0.0, "t_end": t_end, "n_steps": n_steps},
                "master_seed": master_seed, "clamp": clamp,
                "drivers": [driver_to_dict(LevyDriverSpec(Composite((
                    LevyDriverSpec(fam, time_scale=speed),
                    LevyDriverSpec(DriftOnly(1.0))))))
                    for _, fam, speed in _FIG_DRIVERS]}
    return files + [script], resolved, {"explosions": explosions,
                                        "files": [os.path.basename(f)
                                                  for f in files + [script]]}


# ---------------------------------------------------------------------------
# entry point

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config master_seed")
    common.add_argument("--out", default=None, help="override the output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="override the config thread count")
    common.add_argument("--clamp", type=float, default=None, metavar="B",
                        help="wrap every coefficient entry in clamp(., -B, B)")
    parser = argparse.ArgumentParser(
        prog="itersde",
        description="iterated SDE simulation and symbol analysis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        sub.add_parser(name, parents=[common])
    fig = sub.add_parser("reproduce-figures", parents=[common])
    fig.add_argument("--n-steps", type=int, default=10_000)
    fig.add_argument("--t-end", type=float, default=1.0)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "reproduce-figures":
            seed = 0 if args.seed is None else args.seed
            out_dir = args.out or "figures"
            threads = args.threads or 1
            if args.config:
                cfg = ExperimentConfig.load(args.config)
                seed = args.seed if args.seed is not None else cfg.master_seed
                out_dir = args.out or cfg.out_dir
                threads = args.threads or cfg.threads
            os.makedirs(out_dir, exist_ok=True)
            _, resolved, extra = reproduce_figures(
                out_dir, master_seed=seed, n_steps=args.n_steps,
                t_end=args.t_end, clamp=args.clamp)
            _write_sidecars(out_dir, args.command, resolved, seed, threads, extra)
            return 0
        if not args.config:
            raise ConfigError("--config", "is required for this command")
        cfg = ExperimentConfig.load(args.config).override(
            master_seed=args.seed, out_dir=args.out, threads=args.threads)
        os.makedirs(cfg.out_dir, exist_ok=True)
        extra = _HANDLERS[args.command](cfg, cfg.out_dir, args.clamp)
        if args.clamp is not None:
            extra = dict(extra, clamp=args.clamp)
        _write_sidecars(cfg.out_dir, args.command, cfg.to_dict(),
                        cfg.master_seed, cfg.threads, extra)
        return 0
    except ConfigError as e:
        record = {"error": type(e).__name__, "field": e.field, "message": str(e)}
        print(json.dumps(record), file=sys.stderr)
        return 2
    except (ItersdeError, OSError, ValueError) as e:
        record = {"error": type(e).__name__, "message": str(e)}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
