import random

import pytest

from llg import symexpr as sx
from llg.builtins import abelian, affine2, builtin, heisenberg3
from llg.forms import (
    CROSSED,
    MATCHED,
    COVECTOR,
    FormError,
    FormOnT,
    NonlinearForm,
    SeedForm,
    biinvariant_forms,
    delta,
    dhat,
    dtilde,
    exterior_derivative,
    extend_points,
    invariant_extension,
    is_invariant,
    linearize,
    random_form_T,
    random_nonlinear,
    random_seed_points,
    random_seed_T,
)
from llg.geometry import splitting_from_group
from llg.suites import quotient_components
from llg.symexpr import parse

GROUPS = ["abelian:2", "heisenberg3", "affine2", "uppertriangular3"]


def two(s, n):
    return parse(s, n, copies=2)


def zero(exprs, dom=()):
    return sx.is_zero_random(list(exprs), constraints=dom).equal


def same(a, b, dom=()):
    return sx.equiv_random(list(a), list(b), constraints=dom).equal


def test_dtilde_on_abelian_moves_both_points():
    G = abelian(2)
    th = NonlinearForm(2, 2, 0, {(): two("x1*y2 + y1^2", 2)})
    d = dtilde(G, th)
    assert same(d.flat(), [two("y2 + 2*y1", 2), two("x1", 2)])


def test_delta_of_a_function():
    G = abelian(1)
    th = NonlinearForm(1, 2, 0, {(): two("x1*y1^2", 1)})
    d = delta(G, th)
    # theta(y, z) - theta(x, z) + theta(x, y)
    want = parse("y1*z1^2 - x1*z1^2 + x1*y1^2", 1, copies=3)
    assert same(d.flat(), [want])


def test_exterior_derivative_of_one_copy_form():
    f = NonlinearForm(2, 1, 1, {(0,): parse("x2^2", 2), (1,): parse("x1", 2)})
    d = exterior_derivative(f)
    assert same(d.flat(), [parse("1 - 2*x2", 2)])
    with pytest.raises(FormError):
        exterior_derivative(NonlinearForm(2, 2, 0, {}))


def test_linearize_differentiates_the_second_point():
    th = NonlinearForm(1, 2, 0, {(): two("y1^2 - x1^2 + 3*x1*y1", 1)})
    L = linearize(th)
    assert same(L.flat(), [parse("2*x1*xi1 + 3*x1*xi1", 1, slots=1)])
    assert zero(L.euler_residuals())


def test_degree_overflow_and_bad_components_raise():
    with pytest.raises(FormError):
        dtilde(abelian(1), NonlinearForm(1, 2, 1, {(0,): sx.ONE}))
    with pytest.raises(FormError):
        NonlinearForm(2, 2, 1, {(2,): sx.ONE})
    with pytest.raises(FormError):
        NonlinearForm(2, 1, 0, {(): two("y1", 2)})
    with pytest.raises(FormError):
        FormOnT(2, 0, {(): sx.ONE}, ("scalar",))


@pytest.mark.parametrize("name", GROUPS)
def test_differentials_square_to_zero(name):
    G = builtin(name)
    S = splitting_from_group(G, "tilde")
    rng = random.Random(name)
    n = G.dim
    for k in range(n - 1):
        f = random_form_T(rng, n, k)
        assert zero(dhat(S, dhat(S, f)).flat(), G.domain((0,)))
        w = random_nonlinear(rng, n, 2, k)
        assert zero(dtilde(S, dtilde(S, w)).flat(), G.domain((0, 1)))
    for k in range(n + 1):
        w = random_nonlinear(rng, n, 2, k)
        assert zero(delta(S, delta(S, w)).flat(), G.domain((0, 1, 2, 3)))


@pytest.mark.parametrize("name", GROUPS)
def test_dtilde_commutes_with_delta(name):
    G = builtin(name)
    rng = random.Random(1)
    for k in range(G.dim):
        w = random_nonlinear(rng, G.dim, 2, k)
        assert same(dtilde(G, delta(G, w)).flat(), delta(G, dtilde(G, w)).flat(), G.domain((0, 1, 2)))


@pytest.mark.parametrize("name", GROUPS)
@pytest.mark.parametrize("copies", [2, 3])
def test_linearization_is_a_chain_map(name, copies):
    G = builtin(name)
    S = splitting_from_group(G, "tilde")
    rng = random.Random(copies)
    for k in range(G.dim):
        w = random_nonlinear(rng, G.dim, copies, k)
        assert same(linearize(dtilde(S, w)).flat(), dhat(S, linearize(w)).flat(), G.domain((0,)))


@pytest.mark.parametrize("name", GROUPS)
def test_linear_extensions_and_dhat(name):
    G = builtin(name)
    S = splitting_from_group(G, "tilde")
    rng = random.Random(7)
    for k in range(G.dim):
        om = invariant_extension("tilde", G, random_seed_T(rng, G.dim, k))
        assert is_invariant("tilde", G, om).equal
        assert is_invariant("tilde", G, dhat(S, om)).equal
        hat_om = invariant_extension("hat", G, random_seed_T(rng, G.dim, k, slots=(COVECTOR,)), slots=(COVECTOR,))
        assert is_invariant("hat", G, hat_om).equal


def test_random_form_is_usually_not_invariant():
    G = heisenberg3()
    f = FormOnT(3, 1, {(0,): parse("x2*xi1", 3, slots=1)})
    v = is_invariant("tilde", G, f)
    assert not v.equal and v.witness is not None


@pytest.mark.parametrize("name", GROUPS)
@pytest.mark.parametrize("transport", [CROSSED, MATCHED])
def test_hat_extension_is_hat_invariant(name, transport):
    G = builtin(name)
    rng = random.Random(11)
    for k in range(G.dim):
        w = extend_points(G, "hat", random_seed_points(rng, G.dim, 2, k), 2, transport)
        assert is_invariant("hat", G, w, transport=transport).equal


@pytest.mark.parametrize("name", GROUPS)
def test_matched_transport_keeps_hat_invariance(name):
    G = builtin(name)
    rng = random.Random(13)
    for k in range(G.dim):
        w = extend_points(G, "hat", random_seed_points(rng, G.dim, 2, k), 2, MATCHED)
        assert is_invariant("hat", G, dtilde(G, w), transport=MATCHED).equal
        assert is_invariant("hat", G, delta(G, w), transport=MATCHED).equal


def test_crossed_transport_counterexample_on_affine():
    G = affine2()
    th = NonlinearForm(2, 2, 0, {(): two("(y2 - x2)/x1", 2)})
    assert is_invariant("hat", G, th).equal
    d = dtilde(G, th)
    crossed = is_invariant("hat", G, d, transport=CROSSED)
    assert not crossed.equal and crossed.witness is not None
    assert is_invariant("hat", G, d, transport=MATCHED).equal


def test_crossed_transport_loses_biinvariance_under_linearization():
    G = heisenberg3()
    for transport, expect_all in ((MATCHED, True), (CROSSED, False)):
        forms = biinvariant_forms(G, 2, transport=transport)
        assert len(forms) == 9
        ok = [all(is_invariant(v, G, linearize(w)).equal for v in ("tilde", "hat")) for w in forms]
        assert all(ok) is expect_all


@pytest.mark.parametrize("name,k,count", [("abelian:2", 0, 6), ("heisenberg3", 1, 12), ("affine2", 1, 3)])
def test_biinvariant_forms_are_biinvariant(name, k, count):
    G = builtin(name)
    forms = biinvariant_forms(G, k)
    assert len(forms) == count
    for w in forms:
        assert is_invariant("tilde", splitting_from_group(G, "tilde"), w).equal
        assert is_invariant("hat", G, w).equal


@pytest.mark.parametrize("name", GROUPS)
def test_quotient_components_are_closed(name):
    G = builtin(name)
    for q in quotient_components(G):
        th = NonlinearForm(G.dim, 2, 0, {(): q})
        assert zero(dtilde(G, th).flat(), G.domain((0, 1)))


def test_affine_class_function_and_non_class_function():
    G = affine2()
    a, b = quotient_components(G)
    # a = y1/x1 is a class function: conjugation fixes the scaling part
    assert same([a], [two("y1/x1", 2)], G.domain((0, 1)))
    assert is_invariant("hat", G, NonlinearForm(2, 2, 0, {(): a})).equal
    v = is_invariant("hat", G, NonlinearForm(2, 2, 0, {(): b}))
    assert not v.equal and v.witness is not None


def test_seed_form_rejects_bad_indices():
    with pytest.raises(FormError):
        SeedForm(2, 1, {(0, 1): sx.ONE})
