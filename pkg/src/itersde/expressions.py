"""Expression trees for matrix-valued coefficient fields.

A coefficient entry is a scalar function of the state built from a small
closed grammar: constants, coordinates, sin, cos, exp(-u^2), affine
combinations, products, and clamps.  Trees evaluate themselves, report a
sup-norm bound, print themselves for error messages, and compile to a
flat register tape that both the compiled and the numpy Euler kernels
execute with identical operation order.
"""

import ast
import math
from dataclasses import dataclass

import numpy as np

from .errors import ExpressionError

__all__ = [
    "Node", "Const", "Coord", "Sin", "Cos", "ExpDecay", "Affine",
    "Product", "Clamp", "parse_expression", "parse_matrix",
    "compile_tape", "Tape",
    "OP_CONST", "OP_COORD", "OP_SIN", "OP_COS", "OP_EXPDECAY",
    "OP_MUL", "OP_CLAMP", "OP_SCALEADD",
]


class Node:
    """Base class for expression-tree nodes."""

    def eval(self, point):
        raise NotImplementedError

    def eval_checked(self, point):
        """Evaluate and blame the deepest subexpression that went non-finite."""
        from .errors import EvaluationError
        val = self._eval_via(lambda ch: ch.eval_checked(point), point)
        if not math.isfinite(val):
            raise EvaluationError(self.text(), point)
        return val

    def _eval_via(self, child_eval, point):
        raise NotImplementedError

    def bound(self) -> float:
        """Upper bound for sup |value| over all finite inputs (may be inf)."""
        raise NotImplementedError

    def lipschitz(self) -> float:
        """Upper bound for the Lipschitz constant (may be inf)."""
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def max_coord(self) -> int:
        """Highest coordinate index used, plus one (0 if constant)."""
        raise NotImplementedError

    def __str__(self):
        return self.text()


def _fmt(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _safe_mul(a: float, b: float) -> float:
    # bound arithmetic: 0 * inf is 0 (a zero bound means the factor vanishes)
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


@dataclass(frozen=True)
class Const(Node):
    value: float

    def eval(self, point):
        return self.value

    def _eval_via(self, child_eval, point):
        return self.value

    def bound(self):
        return abs(self.value)

    def lipschitz(self):
        return 0.0

    def text(self):
        return _fmt(self.value)

    def max_coord(self):
        return 0


@dataclass(frozen=True)
class Coord(Node):
    index: int

    def eval(self, point):
        return float(point[self.index])

    def _eval_via(self, child_eval, point):
        return float(point[self.index])

    def bound(self):
        return math.inf

    def lipschitz(self):
        return 1.0

    def text(self):
        return f"x{self.index + 1}"

    def max_coord(self):
        return self.index + 1


@dataclass(frozen=True)
class Sin(Node):
    child: Node

    def eval(self, point):
        return math.sin(self.child.eval(point))

    def _eval_via(self, child_eval, point):
        return math.sin(child_eval(self.child))

    def bound(self):
        return 1.0

    def lipschitz(self):
        return self.child.lipschitz()

    def text(self):
        return f"sin({self.child.text()})"

    def max_coord(self):
        return self.child.max_coord()


@dataclass(frozen=True)
class Cos(Node):
    child: Node

    def eval(self, point):
        return math.cos(self.child.eval(point))

    def _eval_via(self, child_eval, point):
        return math.cos(child_eval(self.child))

    def bound(self):
        return 1.0

    def lipschitz(self):
        return self.child.lipschitz()

    def text(self):
        return f"cos({self.child.text()})"

    def max_coord(self):
        return self.child.max_coord()


@dataclass(frozen=True)
class ExpDecay(Node):
    """exp(-u^2): smooth, bounded by 1, decays at infinity."""

    child: Node

    def eval(self, point):
        u = self.child.eval(point)
        return math.exp(-u * u)

    def _eval_via(self, child_eval, point):
        u = child_eval(self.child)
        return math.exp(-u * u)

    def bound(self):
        return 1.0

    def lipschitz(self):
        # max |d/du exp(-u^2)| = sqrt(2) exp(-1/2)
        return 0.8577638849607068 * self.child.lipschitz()

    def text(self):
        return f"expdecay({self.child.text()})"

    def max_coord(self):
        return self.child.max_coord()


@dataclass(frozen=True)
class Affine(Node):
    """intercept + sum_i weight_i * term_i"""

    intercept: float
    terms: tuple  # of (weight, Node)

    def eval(self, point):
        acc = self.intercept
        for w, ch in self.terms:
            acc += w * ch.eval(point)
        return acc

    def _eval_via(self, child_eval, point):
        acc = self.intercept
        for w, ch in self.terms:
            acc += w * child_eval(ch)
        return acc

    def bound(self):
        acc = abs(self.intercept)
        for w, ch in self.terms:
            acc += _safe_mul(abs(w), ch.bound())
        return acc

    def lipschitz(self):
        acc = 0.0
        for w, ch in self.terms:
            acc += _safe_mul(abs(w), ch.lipschitz())
        return acc

    def text(self):
        parts = []
        if self.intercept != 0.0 or not self.terms:
            parts.append(_fmt(self.intercept))
        for w, ch in self.terms:
            body = f"({ch.text()})" if isinstance(ch, Affine) else ch.text()
            mag = body if abs(w) == 1.0 else f"{_fmt(abs(w))}*{body}"
            if not parts:
                parts.append(mag if w >= 0 else f"-{mag}")
            else:
                parts.append(f"+ {mag}" if w >= 0 else f"- {mag}")
        return " ".join(parts)

    def max_coord(self):
        return max((ch.max_coord() for _, ch in self.terms), default=0)


@dataclass(frozen=True)
class Product(Node):
    left: Node
    right: Node

    def eval(self, point):
        return self.left.eval(point) * self.right.eval(point)

    def _eval_via(self, child_eval, point):
        return child_eval(self.left) * child_eval(self.right)

    def bound(self):
        return _safe_mul(self.left.bound(), self.right.bound())

    def lipschitz(self):
        return (_safe_mul(self.left.bound(), self.right.lipschitz())
                + _safe_mul(self.right.bound(), self.left.lipschitz()))

    def text(self):
        def wrap(n):
            return f"({n.text()})" if isinstance(n, Affine) else n.text()
        return f"{wrap(self.left)} * {wrap(self.right)}"

    def max_coord(self):
        return max(self.left.max_coord(), self.right.max_coord())


@dataclass(frozen=True)
class Clamp(Node):
    """Pin the child's value into [lo, hi]."""

    child: Node
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ExpressionError(f"clamp bounds out of order: {self.lo} > {self.hi}")

    def eval(self, point):
        v = self.child.eval(point)
        if v < self.lo:
            v = self.lo
        if v > self.hi:
            v = self.hi
        return v

    def _eval_via(self, child_eval, point):
        v = child_eval(self.child)
        if v < self.lo:
            v = self.lo
        if v > self.hi:
            v = self.hi
        return v

    def bound(self):
        return max(abs(self.lo), abs(self.hi))

    def lipschitz(self):
        return self.child.lipschitz()

    def text(self):
        return f"clamp({self.child.text()}, {_fmt(self.lo)}, {_fmt(self.hi)})"

    def max_coord(self):
        return self.child.max_coord()


# ---------------------------------------------------------------------------
# parsing

_FUNCS = {"sin": Sin, "cos": Cos, "expdecay": ExpDecay}


def _combine_sum(a: Node, b: Node, sign: float) -> Node:
    intercept = 0.0
    terms = []
    for node, s in ((a, 1.0), (b, sign)):
        if isinstance(node, Const):
            intercept += s * node.value
        elif isinstance(node, Affine):
            intercept += s * node.intercept
            terms.extend((s * w, ch) for w, ch in node.terms)
        else:
            terms.append((s, node))
    if not terms:
        return Const(intercept)
    if intercept == 0.0 and len(terms) == 1 and terms[0][0] == 1.0:
        return terms[0][1]
    return Affine(intercept, tuple(terms))


def _scale(c: float, node: Node) -> Node:
    if isinstance(node, Const):
        return Const(c * node.value)
    if c == 0.0:
        return Const(0.0)
    if c == 1.0:
        return node
    if isinstance(node, Affine):
        return Affine(c * node.intercept, tuple((c * w, ch) for w, ch in node.terms))
    return Affine(0.0, ((c, node),))


def _combine_product(a: Node, b: Node) -> Node:
    if isinstance(a, Const):
        return _scale(a.value, b)
    if isinstance(b, Const):
        return _scale(b.value, a)
    return Product(a, b)


def _const_number(node: ast.expr, src: str) -> float:
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_const_number(node.operand, src)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    raise ExpressionError(f"expected a numeric literal, got {ast.unparse(node)!r} in {src!r}")


def _from_ast(node: ast.expr, src: str) -> Node:
    if isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"unsupported literal {node.value!r} in {src!r}")
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        name = node.id
        head = name.rstrip("0123456789")
        digits = name[len(head):]
        if not head.isalpha() or not digits:
            raise ExpressionError(f"unknown name {name!r} in {src!r} "
                                  "(coordinates look like x1, x2, ...)")
        index = int(digits)
        if index < 1:
            raise ExpressionError(f"coordinate index must start at 1: {name!r}")
        return Coord(index - 1)
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return _scale(-1.0, _from_ast(node.operand, src))
        if isinstance(node.op, ast.UAdd):
            return _from_ast(node.operand, src)
        raise ExpressionError(f"unsupported operator in {src!r}")
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Add):
            return _combine_sum(_from_ast(node.left, src), _from_ast(node.right, src), 1.0)
        if isinstance(node.op, ast.Sub):
            return _combine_sum(_from_ast(node.left, src), _from_ast(node.right, src), -1.0)
        if isinstance(node.op, ast.Mult):
            return _combine_product(_from_ast(node.left, src), _from_ast(node.right, src))
        raise ExpressionError(
            f"unsupported operator {type(node.op).__name__} in {src!r} "
            "(only +, -, * and the functions sin, cos, expdecay, clamp)")
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.keywords:
            raise ExpressionError(f"unsupported call {ast.unparse(node)!r} in {src!r}")
        fname = node.func.id
        if fname in _FUNCS:
            if len(node.args) != 1:
                raise ExpressionError(f"{fname}() takes one argument in {src!r}")
            return _FUNCS[fname](_from_ast(node.args[0], src))
        if fname == "clamp":
            if len(node.args) != 3:
                raise ExpressionError(f"clamp() takes (expr, lo, hi) in {src!r}")
            lo = _const_number(node.args[1], src)
            hi = _const_number(node.args[2], src)
            if lo > hi:
                raise ExpressionError(f"clamp bounds out of order in {src!r}: {lo} > {hi}")
            return Clamp(_from_ast(node.args[0], src), lo, hi)
        raise ExpressionError(f"unknown function {fname!r} in {src!r}")
    raise ExpressionError(f"unsupported syntax {ast.unparse(node)!r} in {src!r}")


def parse_expression(text: str) -> Node:
    """Parse one scalar entry, e.g. ``"1 + 0.5*cos(x1)"``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return Const(float(text))
    if not isinstance(text, str):
        raise ExpressionError(f"expected an expression string, got {type(text).__name__}")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    return _from_ast(tree.body, text)


def parse_matrix(spec):
    """Parse a matrix of entries.

    Accepts a nested list of entry strings/numbers (the config form), a
    flat list (one row), a single string with bracket syntax like
    ``"[[sin(x1), 0], [0, 1]]"``, or a bare entry string (1x1).
    Returns a tuple of row tuples of Nodes.
    """
    if isinstance(spec, str):
        stripped = spec.strip()
        if stripped.startswith("["):
            try:
                tree = ast.parse(stripped, mode="eval")
            except SyntaxError as exc:
                raise ExpressionError(f"cannot parse matrix {spec!r}: {exc.msg}") from None
            if not isinstance(tree.body, ast.List):
                raise ExpressionError(f"expected a bracketed matrix in {spec!r}")
            rows = []
            elts = tree.body.elts
            if elts and all(isinstance(e, ast.List) for e in elts):
                for row in elts:
                    rows.append(tuple(_from_ast(e, spec) for e in row.elts))
            else:
                rows.append(tuple(_from_ast(e, spec) for e in elts))
            widths = {len(r) for r in rows}
            if not rows or widths == {0} or len(widths) != 1:
                raise ExpressionError(f"ragged or empty matrix in {spec!r}")
            return tuple(rows)
        return ((parse_expression(spec),),)
    if isinstance(spec, (int, float)):
        return ((Const(float(spec)),),)
    rows = list(spec)
    if not rows:
        raise ExpressionError("empty matrix")
    if not isinstance(rows[0], (list, tuple)):
        rows = [rows]
    parsed = tuple(tuple(parse_expression(e) for e in row) for row in rows)
    if len({len(r) for r in parsed}) != 1 or not parsed[0]:
        raise ExpressionError("ragged or empty matrix")
    return parsed


# ---------------------------------------------------------------------------
# register tapes

OP_CONST = 0      # r[dst] = c1
OP_COORD = 1      # r[dst] = point[src1]
OP_SIN = 2        # r[dst] = sin(r[src1])
OP_COS = 3        # r[dst] = cos(r[src1])
OP_EXPDECAY = 4   # r[dst] = exp(-r[src1]^2)
OP_MUL = 5        # r[dst] = r[src1] * r[src2]
OP_CLAMP = 6      # r[dst] = r[src1] pinned into [c1, c2]
OP_SCALEADD = 7   # r[dst] = r[src1] + c1 * r[src2]


@dataclass(frozen=True)
class Tape:
    """Flat program evaluating all entries of a matrix field at a point.

    Entry k's final value lands in register ``out_regs[k]`` (row-major).
    """

    ops: np.ndarray      # (n_ops, 4) int32: opcode, dst, src1, src2
    consts: np.ndarray   # (n_ops, 2) float64
    out_regs: np.ndarray  # (n_out,) int32
    n_reg: int
    in_dim: int

    @property
    def n_out(self):
        return len(self.out_regs)


def compile_tape(entries, in_dim: int) -> Tape:
    """Compile a flat row-major sequence of Nodes to one register tape.

    Entry k occupies register k; scratch for entry k lives at slots > k
    that later entries have not written yet, so outputs survive.
    """
    entries = list(entries)
    if not entries:
        raise ExpressionError("cannot compile an empty entry list")
    ops, consts = [], []
    n_reg = len(entries)

    def emit(op, dst, s1=0, s2=0, c1=0.0, c2=0.0):
        ops.append((op, dst, s1, s2))
        consts.append((c1, c2))

    def rec(node, slot):
        nonlocal n_reg
        n_reg = max(n_reg, slot + 1)
        if isinstance(node, Const):
            emit(OP_CONST, slot, c1=node.value)
        elif isinstance(node, Coord):
            if node.index >= in_dim:
                raise ExpressionError(
                    f"{node.text()} exceeds the field's input dimension {in_dim}")
            emit(OP_COORD, slot, s1=node.index)
        elif isinstance(node, Sin):
            rec(node.child, slot)
            emit(OP_SIN, slot, s1=slot)
        elif isinstance(node, Cos):
            rec(node.child, slot)
            emit(OP_COS, slot, s1=slot)
        elif isinstance(node, ExpDecay):
            rec(node.child, slot)
            emit(OP_EXPDECAY, slot, s1=slot)
        elif isinstance(node, Clamp):
            rec(node.child, slot)
            emit(OP_CLAMP, slot, s1=slot, c1=node.lo, c2=node.hi)
        elif isinstance(node, Product):
            rec(node.left, slot)
            rec(node.right, slot + 1)
            emit(OP_MUL, slot, s1=slot, s2=slot + 1)
        elif isinstance(node, Affine):
            emit(OP_CONST, slot, c1=node.intercept)
            for w, ch in node.terms:
                rec(ch, slot + 1)
                emit(OP_SCALEADD, slot, s1=slot, s2=slot + 1, c1=w)
        else:
            raise ExpressionError(f"cannot compile node of type {type(node).__name__}")

    for k, entry in enumerate(entries):
        rec(entry, k)

    return Tape(
        ops=np.asarray(ops, dtype=np.int32).reshape(len(ops), 4),
        consts=np.asarray(consts, dtype=np.float64).reshape(len(consts), 2),
        out_regs=np.arange(len(entries), dtype=np.int32),
        n_reg=n_reg,
        in_dim=in_dim,
    )
