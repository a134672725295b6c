import math

import numpy as np
import pytest

from itersde import ExpressionError, EvaluationError, parse_expression, parse_matrix
from itersde.expressions import (Affine, Clamp, Const, Coord, Cos, ExpDecay,
                                 Product, Sin, compile_tape)
from itersde._euler_py import eval_tape as eval_tape_py


def test_parse_and_eval_basics():
    pt = np.array([0.3, -1.2])
    cases = {
        "2": 2.0,
        "x1": 0.3,
        "x2": -1.2,
        "sin(x1)": math.sin(0.3),
        "cos(x2)": math.cos(-1.2),
        "expdecay(x1)": math.exp(-0.09),
        "2*x1 + 3": 3.6,
        "x1*x2": 0.3 * -1.2,
        "clamp(x2, -1, 1)": -1.0,
        "1 - x1": 0.7,
        "-x1": -0.3,
        "0.5*sin(x1)*cos(x2) + 2": 0.5 * math.sin(0.3) * math.cos(-1.2) + 2,
    }
    for text, want in cases.items():
        got = parse_expression(text).eval(pt)
        assert got == pytest.approx(want, abs=1e-15), text


def test_parse_rejects_unsupported():
    for bad in ("x1 / 2", "x1 ** 2", "tan(x1)", "clamp(x1, 1, -1)",
                "clamp(x1, x2, 1)", "x0", "exp(x1)"):
        with pytest.raises(ExpressionError):
            parse_expression(bad)


def test_text_round_trip():
    pts = np.random.default_rng(1).normal(size=(20, 3))
    for text in ("2*x1 + 3*x2 - 1", "sin(x1)*cos(x2)*x3",
                 "clamp(2*x1 - 0.5, -2, 2)", "expdecay(x2 - 1)",
                 "-0.25*x1*x2 + sin(x3)"):
        e = parse_expression(text)
        e2 = parse_expression(e.text())
        for p in pts:
            assert e.eval(p) == pytest.approx(e2.eval(p), rel=1e-15)


def test_constant_folding():
    assert isinstance(parse_expression("2*3 + 1"), Const)
    assert parse_expression("2*3 + 1").value == 7.0
    assert isinstance(parse_expression("sin(0.5)*2"), Affine)


def test_structural_bounds():
    assert parse_expression("sin(x1)").bound() == 1.0
    assert parse_expression("3*cos(x1)").bound() == 3.0
    assert parse_expression("x1").bound() == math.inf
    assert parse_expression("clamp(x1, -2, 5)").bound() == 5.0
    assert parse_expression("2 + sin(x1)").bound() == 3.0
    assert parse_expression("sin(x1)*cos(x1)").bound() == 1.0
    # a zero factor kills an unbounded one
    assert parse_expression("0*x1").bound() == 0.0


def test_structural_lipschitz():
    assert parse_expression("sin(x1)").lipschitz() == 1.0
    assert parse_expression("3*x1 - 1").lipschitz() == 3.0
    assert parse_expression("clamp(x1, -2, 2)").lipschitz() == 1.0
    assert parse_expression("x1*x1").lipschitz() == math.inf
    # max slope of exp(-u^2) is sqrt(2) e^{-1/2}
    got = parse_expression("expdecay(x1)").lipschitz()
    assert got == pytest.approx(math.sqrt(2.0) * math.exp(-0.5), rel=1e-12)
    # product rule: B_l L_r + B_r L_l
    got = parse_expression("sin(x1)*cos(x1)").lipschitz()
    assert got == 2.0


def test_eval_checked_blames_deepest():
    e = parse_expression("2*x1 + sin(x2)")
    with pytest.raises(EvaluationError) as exc:
        e.eval_checked(np.array([math.inf, 0.0]))
    # the coordinate itself is the deepest non-finite node
    assert "x1" in str(exc.value)


def test_clamp_evaluates_like_clip():
    e = parse_expression("clamp(x1, -1.5, 2)")
    for v, want in ((-3.0, -1.5), (0.2, 0.2), (7.0, 2.0)):
        assert e.eval(np.array([v])) == want


def test_parse_matrix_shapes():
    rows = parse_matrix("[[sin(y1), 2*y1], [0, 1]]")
    assert len(rows) == 2 and len(rows[0]) == 2
    rows2 = parse_matrix([["sin(y1)", "2*y1"], ["0", "1"]])
    pt = np.array([0.4, 7.0])
    for r, r2 in zip(rows, rows2):
        for e, e2 in zip(r, r2):
            assert e.eval(pt) == e2.eval(pt)
    # a flat list is one row
    row = parse_matrix(["x1", "1"])
    assert len(row) == 1 and len(row[0]) == 2
    with pytest.raises(ExpressionError):
        parse_matrix("[[x1, 1], [x1]]")


def test_tape_matches_tree():
    gen = np.random.default_rng(3)
    entries = parse_matrix("[[sin(x1)*cos(x2), clamp(2*x1 - x2, -3, 3)],"
                           " [expdecay(x2), 0.5*x1 + 1]]")
    tape = compile_tape([e for row in entries for e in row], in_dim=2)
    pts = gen.normal(size=(50, 2))
    out = eval_tape_py(tape.ops, tape.consts, tape.n_reg, tape.out_regs, pts)
    flat = [e for row in entries for e in row]
    for k, e in enumerate(flat):
        want = np.array([e.eval(p) for p in pts])
        np.testing.assert_allclose(out[:, k], want, rtol=1e-15, atol=0.0)
