from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llg import symexpr as sx
from llg.symexpr import F, P, Var, diff, parse, subst, to_string


def test_parse_sum_of_two_copies():
    e = parse("x1 + y1", 3, copies=2)
    assert e.free_vars == {P(0, 1), P(1, 1)}


def test_parse_heisenberg_component_round_trips():
    e = parse("x3 + y3 + x1*y2", 3, copies=2)
    assert parse(to_string(e), 3, copies=2) is e


def test_parse_rejects_out_of_range_and_unknown_names():
    with pytest.raises(sx.ParseError):
        parse("x4", 3)
    with pytest.raises(sx.ExprError):
        parse("q1 + x1", 3)
    with pytest.raises(sx.ExprError):
        parse("z1", 2, copies=2)


def test_parse_reports_position():
    with pytest.raises(sx.ParseError, match="position"):
        parse("x1 + * y1", 2, copies=2)


def test_rational_literals_and_fiber_names():
    e = parse("3/4*xi2 - t", 2, slots=1)
    ev = sx.Evaluator({F(0, 2): 2, sx.T_PARAM: Fraction(1, 2)})
    assert ev(e) == Fraction(1)


def test_division_by_zero_is_domain_error():
    e = parse("1/x1", 2)
    with pytest.raises(sx.DomainError):
        sx.evaluate(e, {P(0, 1): 0, P(0, 2): 1})


def test_diff_product_and_quotient():
    x1, x2 = Var(P(0, 1)), Var(P(0, 2))
    e = parse("x1^2*x2/(1 + x1)", 2)
    d = diff(e, P(0, 1))
    expected = parse("(2*x1*x2*(1 + x1) - x1^2*x2)/(1 + x1)^2", 2)
    assert sx.equiv_random(d, expected, constraints=[parse("1 + x1", 2)]).equal
    assert diff(x1, P(0, 2)) is sx.ZERO
    assert diff(x2, P(0, 2)) is sx.ONE


def test_subst_is_simultaneous():
    e = parse("x1 - x2", 2)
    swapped = subst(e, {P(0, 1): Var(P(0, 2)), P(0, 2): Var(P(0, 1))})
    assert sx.equiv_random(swapped, parse("x2 - x1", 2)).equal


def test_equiv_random_finds_witness():
    v = sx.equiv_random(parse("(x1 + x2)^2", 2), parse("x1^2 + x2^2", 2), seed=4)
    assert not v.equal
    assert v.witness is not None
    d = v.to_dict()
    assert "witness" in d and d["lhs"] != d["rhs"]


def test_equiv_random_is_deterministic():
    a, b = parse("x1*x2 + 1", 2), parse("x1*x2", 2)
    assert sx.equiv_random(a, b, seed=9).to_dict() == sx.equiv_random(a, b, seed=9).to_dict()


def test_samples_respect_constraints():
    pts = list(sx.sample_points([P(0, 1)], 50, seed=1, constraints=[parse("x1", 1)]))
    assert all(p.values[P(0, 1)] != 0 for p in pts)


def test_transcendental_needs_float_mode():
    e = parse("exp(x1)*exp(-x1)", 1)
    with pytest.raises(sx.TranscendentalError):
        sx.equiv_random(e, sx.ONE)
    assert sx.equiv_random(e, sx.ONE, mode="float").equal


def test_float_mode_scales_tolerance_by_term_size():
    # the residual cancels large terms; an absolute comparison against zero would fail
    e = parse("exp(x1)^4*(1 + x2) - exp(4*x1) - x2*exp(4*x1)", 2)
    assert sx.is_zero_random(e, mode="float", trials=64).equal
    assert not sx.is_zero_random(parse("exp(x1) - exp(x1) + 1/1000000", 1), mode="float").equal


def test_directional_and_euler_residual():
    e = parse("y1*y2", 2, copies=2)
    d = sx.directional(e, 1, [Var(F(0, 1)), Var(F(0, 2))], 2)
    assert sx.equiv_random(d, parse("xi1*y2 + y1*xi2", 2, copies=2, slots=1)).equal
    lin = parse("x1*xi1 + xi2", 2, slots=1)
    assert sx.is_zero_random(sx.euler_residual(lin, 0, 2, 1)).equal


small = st.integers(min_value=-4, max_value=4)


@st.composite
def polynomials(draw):
    terms = draw(st.lists(st.tuples(small, st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=4))
    return " + ".join(f"({c})*x1^{a}*x2^{b}" for c, a, b in terms)


@settings(max_examples=40, deadline=None)
@given(polynomials(), polynomials())
def test_product_rule(p, q):
    f, g = parse(p, 2), parse(q, 2)
    lhs = diff(sx.mul(f, g), P(0, 1))
    rhs = sx.add(sx.mul(diff(f, P(0, 1)), g), sx.mul(f, diff(g, P(0, 1))))
    assert sx.equiv_random(lhs, rhs, trials=8).equal


@settings(max_examples=40, deadline=None)
@given(polynomials())
def test_printer_round_trip(p):
    e = parse(p, 2)
    assert sx.equiv_random(parse(to_string(e), 2), e, trials=8).equal


@settings(max_examples=30, deadline=None)
@given(polynomials(), st.integers(-5, 5), st.integers(-5, 5))
def test_evaluation_matches_substitution(p, a, b):
    e = parse(p, 2)
    vals = {P(0, 1): Fraction(a), P(0, 2): Fraction(b)}
    substituted = subst(e, {k: sx.Const(v) for k, v in vals.items()})
    assert sx.evaluate(substituted, {}) == sx.evaluate(e, vals)
