"""Experiment configuration: a YAML file defines the system, the grid,
and the per-command parameters, and round-trips losslessly so every run
can write its resolved copy next to the outputs.
"""

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .coefficients import CoefficientField, field_from_text
from .drivers import (Brownian, Cauchy, Composite, DriftOnly, Gamma,
                      LevyDriverSpec, SymmetricStable)
from .errors import ConfigError, ExpressionError, ShapeError
from .integrator import TimeGrid

_FAMILY_FIELDS = {
    "brownian": (Brownian, ("volatility",)),
    "cauchy": (Cauchy, ("scale",)),
    "stable": (SymmetricStable, ("alpha", "scale")),
    "gamma": (Gamma, ("shape", "rate")),
    "drift": (DriftOnly, ("slope",)),
}


def driver_from_dict(spec, where: str = "driver") -> LevyDriverSpec:
    if not isinstance(spec, dict):
        raise ConfigError(where, "must be a mapping with a 'family' key")
    spec = dict(spec)
    family = spec.pop("family", None)
    ts = spec.pop("time_scale", 1.0)
    if not isinstance(ts, (int, float)) or not ts > 0:
        raise ConfigError(f"{where}.time_scale", "must be a positive number")
    if family == "composite":
        comps = spec.pop("components", None)
        if spec:
            raise ConfigError(where, f"unknown keys {sorted(spec)}")
        if not isinstance(comps, list) or not comps:
            raise ConfigError(f"{where}.components", "must be a non-empty list")
        parts = tuple(driver_from_dict(c, f"{where}.components[{i}]")
                      for i, c in enumerate(comps))
        try:
            return LevyDriverSpec(Composite(parts), time_scale=float(ts))
        except (TypeError, ValueError) as e:
            raise ConfigError(where, str(e)) from e
    if family not in _FAMILY_FIELDS:
        known = sorted(_FAMILY_FIELDS) + ["composite"]
        raise ConfigError(f"{where}.family", f"must be one of {known}, got {family!r}")
    cls, names = _FAMILY_FIELDS[family]
    kwargs = {}
    for name in names:
        if name in spec:
            val = spec.pop(name)
            if not isinstance(val, (int, float)):
                raise ConfigError(f"{where}.{name}", "must be a number")
            kwargs[name] = float(val)
    if spec:
        raise ConfigError(where, f"unknown keys {sorted(spec)} for family {family!r}")
    try:
        return LevyDriverSpec(cls(**kwargs), time_scale=float(ts))
    except (TypeError, ValueError) as e:
        raise ConfigError(where, str(e)) from e


def driver_to_dict(spec: LevyDriverSpec) -> dict:
    fam = spec.family
    if isinstance(fam, Composite):
        return {"family": "composite", "time_scale": spec.time_scale,
                "components": [driver_to_dict(c) for c in fam.components]}
    for name, (cls, names) in _FAMILY_FIELDS.items():
        if isinstance(fam, cls):
            out = {"family": name, "time_scale": spec.time_scale}
            out.update({n: getattr(fam, n) for n in names})
            return out
    raise TypeError(f"unknown driver family {type(fam).__name__}")


def _clamped(text, bound: float) -> str:
    return f"clamp({text}, {-abs(bound)!r}, {abs(bound)!r})"


def _matrix_rows(raw, where: str):
    # accepted shapes: "[[...]]" string, or list of rows of entry strings
    if isinstance(raw, str):
        return raw
    if isinstance(raw, list) and raw and all(isinstance(r, list) for r in raw):
        return [[str(e) for e in r] for r in raw]
    raise ConfigError(where, "must be a bracketed string or a list of rows")


def build_field(raw, in_dim: int, where: str, clamp: float = None) -> CoefficientField:
    rows = _matrix_rows(raw, where)
    if clamp is not None:
        if isinstance(rows, str):
            # reparse to entries first so the clamp wraps each one
            base = field_from_text(rows, in_dim=in_dim)
            rows = [[_clamped(e.text(), clamp) for e in r] for r in base.entries]
        else:
            rows = [[_clamped(e, clamp) for e in r] for r in rows]
    try:
        return field_from_text(rows, in_dim=in_dim, label=where)
    except (ExpressionError, ShapeError, ValueError) as e:
        raise ConfigError(where, str(e)) from e


def _vector(raw, where: str) -> tuple:
    if isinstance(raw, (int, float)):
        raw = [raw]
    if not isinstance(raw, list) or not raw or \
            not all(isinstance(v, (int, float)) for v in raw):
        raise ConfigError(where, "must be a number or a list of numbers")
    return tuple(float(v) for v in raw)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: system, grid, ensemble, and command parameters."""

    driver: dict
    phi: object            # entry-string matrix (or bracketed string)
    psi: object
    x0: tuple
    y0: tuple
    grid: dict             # t0, t_end, n_steps
    n_paths: int = 1
    master_seed: int = 0
    threads: int = 1
    out_dir: str = "out"
    params: dict = field(default_factory=dict)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be a mapping")
        raw = dict(raw)
        known = {"driver", "phi", "psi", "x0", "y0", "grid", "n_paths",
                 "master_seed", "threads", "out_dir", "params"}
        extra = set(raw) - known
        if extra:
            raise ConfigError("config", f"unknown keys {sorted(extra)}")
        for key in ("driver", "phi", "psi", "x0", "y0", "grid"):
            if key not in raw:
                raise ConfigError(key, "is required")
        x0 = _vector(raw["x0"], "x0")
        y0 = _vector(raw["y0"], "y0")
        grid = raw["grid"]
        if not isinstance(grid, dict):
            raise ConfigError("grid", "must be a mapping with t0, t_end, n_steps")
        gknown = {"t0", "t_end", "n_steps"}
        if set(grid) - gknown:
            raise ConfigError("grid", f"unknown keys {sorted(set(grid) - gknown)}")
        t0 = float(grid.get("t0", 0.0))
        t_end = grid.get("t_end")
        n_steps = grid.get("n_steps")
        if not isinstance(t_end, (int, float)) or not t_end > t0:
            raise ConfigError("grid.t_end", f"must be a number above t0={t0}")
        if not isinstance(n_steps, int) or n_steps < 1:
            raise ConfigError("grid.n_steps", "must be a positive integer")
        n_paths = raw.get("n_paths", 1)
        if not isinstance(n_paths, int) or n_paths < 1:
            raise ConfigError("n_paths", "must be a positive integer")
        seed = raw.get("master_seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("master_seed", "must be a nonnegative integer")
        threads = raw.get("threads", 1)
        if not isinstance(threads, int) or threads < 1:
            raise ConfigError("threads", "must be a positive integer")
        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params", "must be a mapping")
        out_dir = raw.get("out_dir", "out")
        if not isinstance(out_dir, str) or not out_dir:
            raise ConfigError("out_dir", "must be a non-empty string")

        cfg = cls(driver=raw["driver"],
                  phi=_matrix_rows(raw["phi"], "phi"),
                  psi=_matrix_rows(raw["psi"], "psi"),
                  x0=x0, y0=y0,
                  grid={"t0": t0, "t_end": float(t_end), "n_steps": n_steps},
                  n_paths=n_paths, master_seed=seed, threads=threads,
                  out_dir=out_dir, params=params)
        cfg.validate()
        return cfg

    def validate(self):
        drv = self.build_driver()
        psi = build_field(self.psi, len(self.y0), "psi")
        phi = build_field(self.phi, len(self.x0), "phi")
        n, m, d = len(self.y0), drv.dimension, len(self.x0)
        if psi.shape != (n, m):
            raise ConfigError("psi", f"state dimension {n} and driver dimension "
                              f"{m} need a {n}x{m} matrix, got {psi.shape}")
        if phi.shape != (d, n):
            raise ConfigError("phi", f"outer dimension {d} over a {n}-dimensional "
                              f"inner state needs a {d}x{n} matrix, got {phi.shape}")

    def to_dict(self) -> dict:
        return {"driver": self.driver, "phi": self.phi, "psi": self.psi,
                "x0": list(self.x0), "y0": list(self.y0), "grid": dict(self.grid),
                "n_paths": self.n_paths, "master_seed": self.master_seed,
                "threads": self.threads, "out_dir": self.out_dir,
                "params": self.params}

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                raw = yaml.safe_load(fh)
            except yaml.YAMLError as e:
                raise ConfigError("config", f"not parseable: {e}") from e
        return cls.from_dict(raw)

    def save(self, path):
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)

    def override(self, master_seed=None, out_dir=None, threads=None
                 ) -> "ExperimentConfig":
        kw = {}
        if master_seed is not None:
            kw["master_seed"] = int(master_seed)
        if out_dir is not None:
            kw["out_dir"] = str(out_dir)
        if threads is not None:
            kw["threads"] = int(threads)
        return replace(self, **kw) if kw else self

    # -- builders ----------------------------------------------------------

    def build_driver(self) -> LevyDriverSpec:
        return driver_from_dict(self.driver)

    def build_phi(self, clamp: float = None) -> CoefficientField:
        return build_field(self.phi, len(self.x0), "phi", clamp=clamp)

    def build_psi(self, clamp: float = None) -> CoefficientField:
        return build_field(self.psi, len(self.y0), "psi", clamp=clamp)

    def build_grid(self) -> TimeGrid:
        return TimeGrid(self.grid["t0"], self.grid["t_end"], self.grid["n_steps"])

    def param_vector(self, key: str, default=None) -> np.ndarray:
        val = self.params.get(key, default)
        if val is None:
            raise ConfigError(f"params.{key}", "is required for this command")
        return np.asarray(val, dtype=float)
