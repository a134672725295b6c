"""Matrix-valued coefficient fields and their composition.

A field is a rows x cols matrix of expression-tree entries over a state
of dimension ``in_dim``.  Construction derives a sup-norm bound from the
tree structure (within this grammar an entry is bounded exactly when
every coordinate passes through sin, cos, expdecay, or clamp), verifies
it on a fixed point cloud, and optionally sanity-checks a declared
Lipschitz constant by finite differences.
"""

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .errors import ShapeError, UnboundedCoefficientError
from .expressions import (Coord, Node, _combine_product, _combine_sum,
                          compile_tape, parse_matrix)

_CHECK_SEED = 0x5EED
_N_CHECK = 10_000
_CHECK_BOX = 100.0


def _check_cloud(in_dim: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=_CHECK_SEED))
    return gen.uniform(-_CHECK_BOX, _CHECK_BOX, size=(_N_CHECK, in_dim))


@dataclass(frozen=True)
class CoefficientField:
    """rows x cols matrix of scalar expressions over R^in_dim."""

    entries: tuple  # of row tuples of Node
    in_dim: int
    label: str = ""
    declared_bounded: bool = False
    declared_lipschitz: float = None
    declared_nonvanishing: bool = False

    def __post_init__(self):
        rows = self.entries
        if not rows or not rows[0] or len({len(r) for r in rows}) != 1:
            raise ShapeError("entries must form a non-empty rectangular matrix")
        for r in rows:
            for e in r:
                if not isinstance(e, Node):
                    raise TypeError(f"entry {e!r} is not an expression node")
                if e.max_coord() > self.in_dim:
                    raise ShapeError(
                        f"{self._name} entry {e.text()!r} uses coordinate "
                        f"x{e.max_coord()} beyond input dimension {self.in_dim}")
        if self.declared_bounded and not math.isfinite(self.bound):
            warnings.warn(
                f"{self._name} was declared bounded but its structure does not "
                "certify a bound; operations requiring boundedness will reject it",
                stacklevel=3)
        self._spot_check()

    @property
    def _name(self):
        return f"field {self.label!r}" if self.label else "field"

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self):
        return (self.rows, self.cols)

    @cached_property
    def bound(self) -> float:
        """Entrywise sup-norm bound derived from the tree structure."""
        return max(e.bound() for r in self.entries for e in r)

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.bound)

    @cached_property
    def lipschitz_bound(self) -> float:
        """Entrywise Lipschitz bound derived from the tree structure."""
        return max(e.lipschitz() for r in self.entries for e in r)

    @property
    def is_lipschitz(self) -> bool:
        return math.isfinite(self.lipschitz_bound)

    @cached_property
    def tape(self):
        return compile_tape([e for r in self.entries for e in r], self.in_dim)

    def _spot_check(self):
        pts = _check_cloud(self.in_dim)
        vals = kernels.eval_tape(self.tape, pts)
        if self.is_bounded:
            worst = np.abs(vals).max()
            if worst > self.bound * (1 + 1e-12):
                raise UnboundedCoefficientError(
                    f"{self._name}: derived bound {self.bound:g} is violated "
                    f"(saw {worst:g} on the check cloud)")
        if self.declared_lipschitz is not None:
            L = float(self.declared_lipschitz)
            a, b = pts[:-1], pts[1:]
            va, vb = vals[:-1], vals[1:]
            gaps = np.linalg.norm(a - b, axis=1)
            diffs = np.abs(va - vb).max(axis=1)
            ratio = (diffs / gaps).max()
            if ratio > 1.5 * L:
                warnings.warn(
                    f"{self._name}: declared Lipschitz constant {L:g} looks too "
                    f"small (finite differences reach {ratio:g})", stacklevel=4)

    # -- evaluation -----------------------------------------------------------

    def eval(self, point) -> np.ndarray:
        """Evaluate at one point via the trees; blames the offending
        subexpression if anything goes non-finite."""
        point = np.asarray(point, dtype=float)
        if point.shape != (self.in_dim,):
            raise ShapeError(f"point shape {point.shape} != ({self.in_dim},)")
        out = np.empty(self.shape)
        for i, r in enumerate(self.entries):
            for j, e in enumerate(r):
                out[i, j] = e.eval_checked(point)
        return out

    def eval_many(self, points) -> np.ndarray:
        """Evaluate at (B, in_dim) points; returns (B, rows, cols)."""
        vals = kernels.eval_tape(self.tape, points)
        return vals.reshape(len(vals), self.rows, self.cols)


def field_from_text(spec, in_dim=None, **kw) -> CoefficientField:
    """Build a field from matrix text / nested entry strings."""
    entries = parse_matrix(spec)
    need = max((e.max_coord() for r in entries for e in r), default=0)
    if in_dim is None:
        in_dim = max(need, 1)
    return CoefficientField(entries, in_dim, **kw)


def _shift_coords(node: Node, offset: int) -> Node:
    from .expressions import Affine, Clamp, Const, Cos, ExpDecay, Product, Sin
    if isinstance(node, Const):
        return node
    if isinstance(node, Coord):
        return Coord(node.index + offset)
    if isinstance(node, Sin):
        return Sin(_shift_coords(node.child, offset))
    if isinstance(node, Cos):
        return Cos(_shift_coords(node.child, offset))
    if isinstance(node, ExpDecay):
        return ExpDecay(_shift_coords(node.child, offset))
    if isinstance(node, Clamp):
        return Clamp(_shift_coords(node.child, offset), node.lo, node.hi)
    if isinstance(node, Product):
        return Product(_shift_coords(node.left, offset),
                       _shift_coords(node.right, offset))
    if isinstance(node, Affine):
        return Affine(node.intercept,
                      tuple((w, _shift_coords(ch, offset)) for w, ch in node.terms))
    raise TypeError(type(node).__name__)


def compose_M(phi: CoefficientField, psi: CoefficientField) -> CoefficientField:
    """Coefficient of the coupled system on the stacked state v = (x, y).

    With phi d x n over x and psi n x m over y, the result is the
    (d+n) x m field  [[phi(x) psi(y)], [psi(y)]]  expressed in v.
    """
    if phi.rows != phi.in_dim:
        raise ShapeError(f"outer field must be square in its state: "
                         f"{phi.shape} over R^{phi.in_dim}")
    if psi.rows != psi.in_dim:
        raise ShapeError(f"inner field must be square in its state: "
                         f"{psi.shape} over R^{psi.in_dim}")
    if phi.cols != psi.rows:
        raise ShapeError(f"phi is {phi.shape} but psi is {psi.shape}; "
                         "phi.cols must equal psi.rows")
    d, n, m = phi.in_dim, psi.in_dim, psi.cols
    shifted = [[_shift_coords(e, d) for e in r] for r in psi.entries]
    top = []
    for i in range(phi.rows):
        row = []
        for j in range(m):
            acc = None
            for k in range(n):
                term = _combine_product(phi.entries[i][k], shifted[k][j])
                acc = term if acc is None else _combine_sum(acc, term, 1.0)
            row.append(acc)
        top.append(tuple(row))
    entries = tuple(top) + tuple(tuple(r) for r in shifted)

    lip = None
    if (phi.declared_lipschitz is not None and psi.declared_lipschitz is not None
            and phi.is_bounded and psi.is_bounded):
        lip = max(phi.bound * psi.declared_lipschitz
                  + psi.bound * phi.declared_lipschitz,
                  psi.declared_lipschitz)
    return CoefficientField(
        entries, d + n,
        label=(f"[{phi.label}*{psi.label}; {psi.label}]"
               if phi.label or psi.label else ""),
        declared_bounded=phi.declared_bounded and psi.declared_bounded,
        declared_lipschitz=lip)


@dataclass(frozen=True)
class MultiplierCheck:
    """Outcome of a pointwise invertibility scan of a square field."""

    ok: bool
    min_abs_det: float
    worst_point: np.ndarray = None
    n_checked: int = 0

    def __bool__(self):
        return self.ok


def _lattice_points(in_dim: int) -> np.ndarray:
    # the origin and small axis multiples catch the common exact zeros
    # (sin at 0, coordinates at 0) that a random cloud only grazes
    axes = [np.zeros(in_dim)]
    for i in range(in_dim):
        for s in (1.0, -1.0, 2.0, -2.0, 0.5, -0.5):
            e = np.zeros(in_dim)
            e[i] = s
            axes.append(e)
    return np.array(axes)


def check_bijective_multiplier(field: CoefficientField, points=None,
                               tol: float = 1e-12) -> MultiplierCheck:
    """Scan |det field(y)| over a point cloud; fails on the first point
    where it drops to ``tol`` or below.  The default cloud mixes a small
    deterministic lattice around the origin with random points."""
    if field.rows != field.cols:
        raise ShapeError(f"{field.shape} field is not square")
    if points is None:
        points = np.vstack([_lattice_points(field.in_dim),
                            _check_cloud(field.in_dim)])
    points = np.asarray(points, dtype=float)
    mats = field.eval_many(points)
    dets = np.abs(np.linalg.det(mats))
    worst = int(np.argmin(dets))
    ok = bool(dets[worst] > tol)
    return MultiplierCheck(ok=ok, min_abs_det=float(dets[worst]),
                           worst_point=points[worst], n_checked=len(points))
