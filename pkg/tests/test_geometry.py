import random
from fractions import Fraction

import pytest

from llg import symexpr as sx
from llg.builtins import abelian, affine2, builtin, heisenberg3, sl2_constants, uppertriangular3
from llg.combinat import all_tuples
from llg.geometry import (
    Connection,
    GroupLaw,
    NotInvariantError,
    Splitting,
    TensorField,
    bracket,
    check_connection_relation,
    check_fundamental_identity,
    check_index_swap,
    covariant_derivative,
    curvature_cal,
    curvature_frak,
    dpsi,
    il_pushforward,
    invariant_frame,
    lie_derivative,
    point,
    splitting_from_group,
    structure_constants,
    tensor_product,
    torsion,
    torsion_in_frame,
    translation_map,
    verify_group_axioms,
)
from llg.suites import random_tensor, tilde_invariant_tensor
from llg.symexpr import P, parse


def expr(s, n, copies=2):
    return parse(s, n, copies=copies)


def same_matrix(m, strings, n, dom=()):
    want = [[expr(s, n) for s in row] for row in strings]
    return sx.equiv_random([e for r in m for e in r], [e for r in want for e in r], constraints=dom).equal


@pytest.mark.parametrize("name", ["abelian:3", "heisenberg3", "affine2", "uppertriangular3"])
def test_group_axioms_hold(name):
    assert all(c.passed for c in verify_group_axioms(builtin(name)))


def test_corrupted_heisenberg_is_still_a_group():
    # dropping x1*y2 leaves the abelian law on R^3
    G = GroupLaw("corrupt", 3, tuple(expr(s, 3) for s in ("x1 + y1", "x2 + y2", "x3 + y3")),
                 tuple(expr(s, 3, 1) for s in ("-x1", "-x2", "-x3")), (Fraction(0),) * 3)
    assert all(c.passed for c in verify_group_axioms(G))


def test_broken_associativity_is_reported():
    G = GroupLaw("broken", 1, (expr("x1 + y1 + x1*y1*y1", 1),), (expr("-x1", 1, 1),), (Fraction(0),))
    res = {c.name: c for c in verify_group_axioms(G)}
    assert not res["associativity"].passed
    assert res["associativity"].verdict.witness is not None


def test_heisenberg_tilde_splitting():
    S = splitting_from_group(heisenberg3(), "tilde")
    assert same_matrix(S.eps, [["1", "0", "0"], ["0", "1", "0"], ["0", "y1 - x1", "1"]], 3)


def test_affine_tilde_splitting():
    G = affine2()
    S = splitting_from_group(G, "tilde")
    assert same_matrix(S.eps, [["y1/x1", "0"], ["0", "y1/x1"]], 2, G.domain((0, 1)))


def test_abelian_splitting_is_identity():
    S = splitting_from_group(abelian(3), "hat")
    assert same_matrix(S.eps, [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]], 3)


@pytest.mark.parametrize("name", ["abelian:2", "heisenberg3", "affine2", "uppertriangular3"])
@pytest.mark.parametrize("variant", ["tilde", "hat"])
def test_splitting_axioms(name, variant):
    assert all(c.passed for c in splitting_from_group(builtin(name), variant).check_axioms())


def _nonzero_gamma(C):
    ev = {}
    for i, j, k in all_tuples(C.dim, 3):
        if not C[i, j, k].is_zero():
            ev[(i + 1, j + 1, k + 1)] = C[i, j, k]
    return ev


def test_heisenberg_connection():
    C = splitting_from_group(heisenberg3(), "tilde").connection()
    nz = _nonzero_gamma(C)
    assert list(nz) == [(3, 1, 2)]
    assert nz[(3, 1, 2)] is sx.ONE


def test_affine_connection():
    G = affine2()
    C = splitting_from_group(G, "tilde").connection()
    nz = _nonzero_gamma(C)
    assert set(nz) == {(1, 1, 1), (2, 1, 2)}
    for key in nz:
        assert sx.equiv_random(nz[key], expr("1/x1", 2, 1), constraints=G.domain((0,))).equal


@pytest.mark.parametrize("name", ["abelian:2", "heisenberg3", "affine2", "uppertriangular3"])
def test_connection_index_swap(name):
    G = builtin(name)
    St, Sh = splitting_from_group(G, "tilde"), splitting_from_group(G, "hat")
    assert check_connection_relation(St).passed
    assert check_index_swap(St, Sh).passed


def test_torsion_values():
    T = torsion(splitting_from_group(heisenberg3(), "tilde").connection())
    nz = {idx: e for idx, e in T.items() if not e.is_zero()}
    assert {k: sx.evaluate(v, {}) for k, v in nz.items()} == {(2, 0, 1): 1, (2, 1, 0): -1}
    G = affine2()
    Ta = torsion(splitting_from_group(G, "tilde").connection())
    assert sx.equiv_random(Ta[(1, 0, 1)], expr("1/x1", 2, 1), constraints=G.domain((0,))).equal


@pytest.mark.parametrize("name", ["heisenberg3", "affine2", "uppertriangular3"])
def test_tilde_torsion_is_minus_hat_torsion(name):
    G = builtin(name)
    Tt = torsion(splitting_from_group(G, "tilde").connection())
    Th = torsion(splitting_from_group(G, "hat").connection())
    assert sx.equiv_random(list(Tt.comps), [sx.neg(c) for c in Th.comps], constraints=G.domain((0,))).equal


def test_curvature_of_handmade_connection_is_nonzero():
    g = [[[sx.ZERO] * 2 for _ in range(2)] for _ in range(2)]
    g[0][0][0] = sx.Var(P(0, 2))
    C = Connection(2, tuple(tuple(tuple(r) for r in p) for p in g))
    assert not sx.is_zero_random(list(curvature_frak(C).comps)).equal


@pytest.mark.parametrize("name", ["abelian:2", "heisenberg3", "affine2", "uppertriangular3"])
def test_fundamental_identities_on_groups(name):
    G = builtin(name)
    St = splitting_from_group(G, "tilde")
    res = {c.name: c.passed for c in check_fundamental_identity(St)}
    assert res == {"torsion-derivative-is-curvature": True, "hat-curvature-vanishes": True,
                   "hat-torsion-parallel": True}
    assert sx.is_zero_random(list(curvature_frak(St.connection()).comps), constraints=G.domain((0,))).equal
    for variant in ("tilde", "hat"):
        S = splitting_from_group(G, variant)
        assert sx.is_zero_random(list(curvature_cal(S).comps), constraints=S.domain()).equal


def _raw_splitting(entries):
    return Splitting(2, tuple(tuple(expr(s, 2) for s in row) for row in entries), name="raw")


def test_nonintegrable_splitting():
    S = _raw_splitting([["1", "y1*y2 - x1*x2"], ["0", "1"]])
    assert all(c.passed for c in S.check_axioms())
    cal = sx.is_zero_random(list(curvature_cal(S).comps))
    assert not cal.equal and cal.witness is not None
    res = {c.name: c for c in check_fundamental_identity(S)}
    # the torsion identity is unconditional; hat flatness fails here
    assert res["torsion-derivative-is-curvature"].passed
    assert not res["hat-curvature-vanishes"].passed
    assert "hat-torsion-parallel" not in res


def test_suggested_raw_example_is_not_a_splitting():
    # eps = [[1, x1*(y2 - x2)], [0, 1]] breaks arrow composition, so it cannot stand in for a splitting
    S = _raw_splitting([["1", "x1*(y2 - x2)"], ["0", "1"]])
    res = {c.name: c.passed for c in S.check_axioms()}
    assert res["diagonal-identity"] and not res["arrow-composition"]
    assert not sx.is_zero_random(list(curvature_cal(S).comps)).equal


def test_heisenberg_frame():
    G = heisenberg3()
    frame = invariant_frame(splitting_from_group(G, "tilde"), G.identity)
    want = [["1", "0", "0"], ["0", "1", "x1"], ["0", "0", "1"]]
    for f, w in zip(frame, want):
        assert sx.equiv_random(list(f.comps), [expr(s, 3, 1) for s in w]).equal


def test_affine_frame():
    G = affine2()
    frame = invariant_frame(splitting_from_group(G, "tilde"), G.identity)
    assert sx.equiv_random(list(frame[0].comps) + list(frame[1].comps),
                           [expr(s, 2, 1) for s in ("x1", "0", "0", "x1")]).equal


@pytest.mark.parametrize("name", ["heisenberg3", "affine2", "uppertriangular3"])
def test_frames_are_parallel(name):
    G = builtin(name)
    for variant in ("tilde", "hat"):
        S = splitting_from_group(G, variant)
        for f in invariant_frame(S, G.identity):
            assert sx.is_zero_random(list(covariant_derivative(S.connection(), f).comps),
                                     constraints=G.domain((0,))).equal


@pytest.mark.parametrize("name,expected", [
    ("abelian:3", []),
    ("heisenberg3", [(3, 1, 2, 1)]),
    ("affine2", [(2, 1, 2, 1)]),
    ("uppertriangular3", [(2, 1, 2, 1), (2, 2, 3, 1)]),
])
def test_structure_constants(name, expected):
    G = builtin(name)
    St = splitting_from_group(G, "tilde")
    frame = invariant_frame(St, G.identity)
    c = structure_constants(frame, G.identity)
    assert c.nonzero() == expected
    assert not c.jacobi_defect()
    # same brackets read at another point
    assert structure_constants(frame, [Fraction(2), Fraction(1, 3), Fraction(-1, 2)][: G.dim]).c == c.c
    # torsion in the frame basis equals +c
    t = torsion_in_frame(St, G.identity)
    n = G.dim
    assert all(t[k][i][j] == c[k, i, j] for k in range(n) for i in range(n) for j in range(n))


def test_sl2_constants_pass_jacobi():
    c = sl2_constants()
    assert c.is_antisymmetric() and not c.jacobi_defect()
    assert c[1, 0, 1] == 2 and c[2, 0, 2] == -2 and c[0, 1, 2] == 1


def test_translation_map_abelian():
    G = abelian(2)
    f = translation_map(G, (1, 2), (Fraction(1, 2), 5))
    assert sx.equiv_random(f(point(0, 2)), [expr("x1 - 1/2", 2, 1), expr("x2 + 3", 2, 1)]).equal


@pytest.mark.parametrize("variant", ["tilde", "hat"])
def test_translation_maps_solve_their_equations(variant):
    for G in (heisenberg3(), affine2(), uppertriangular3()):
        a = (2, 1, 3)[: G.dim] if G.name != "uppertriangular3" else (2, 1, 3)
        b = (Fraction(1, 2), -1, 4)[: G.dim]
        f = translation_map(G, a, b, variant)
        assert all(c.passed for c in f.check())


def test_affine_translation_from_identity_is_left_multiplication():
    G = affine2()
    f = translation_map(G, (1, 0), (3, 2))
    assert sx.equiv_random(f(point(0, 2)), G.compose([sx.Const(3), sx.Const(2)], point(0, 2))).equal


def test_dpsi_abelian_is_identity_on_constant_fields():
    G = abelian(2)
    xi = TensorField.vector([sx.Const(3), sx.Const(-1)])
    eta = dpsi(G, xi, (0, 0))
    assert sx.equiv_random(list(eta.comps), list(xi.comps)).equal


def test_dpsi_heisenberg_central_field():
    G = heisenberg3()
    Sh = splitting_from_group(G, "hat")
    xi = invariant_frame(Sh, G.identity)[2]
    eta = dpsi(G, xi, G.identity)
    St = splitting_from_group(G, "tilde")
    assert sx.is_zero_random(list(covariant_derivative(St.connection(), eta).comps)).equal
    at_e = {P(0, i): 0 for i in (1, 2, 3)}
    assert [sx.evaluate(c, at_e) for c in eta.comps] == [sx.evaluate(c, at_e) for c in xi.comps]


def test_dpsi_rejects_non_invariant_field():
    G = heisenberg3()
    with pytest.raises(NotInvariantError):
        dpsi(G, TensorField.vector([expr("x2", 3, 1), sx.ZERO, sx.ZERO]), G.identity)


@pytest.mark.parametrize("a", [0, 1, 2])
def test_dpsi_is_independent_of_base(a):
    """The tilde field matching a hat-invariant field at two different bases must coincide."""
    G = heisenberg3()
    xi = invariant_frame(splitting_from_group(G, "hat"), G.identity)[a]
    at_e = dpsi(G, xi, G.identity)
    at_p = dpsi(G, xi, (Fraction(2), Fraction(-1), Fraction(1, 2)))
    assert sx.equiv_random(list(at_e.comps), list(at_p.comps)).equal


def test_lie_derivative_simple():
    X = TensorField.vector([sx.ONE, sx.ZERO])
    Y = TensorField.vector([sx.ZERO, sx.Var(P(0, 1))])
    L = lie_derivative(X, Y)
    assert [sx.evaluate(c, {}) for c in L.comps] == [0, 1]
    assert sx.equiv_random(list(bracket(X, Y).comps), list(L.comps)).equal


def test_lie_derivative_is_a_derivation_and_a_representation():
    rng = random.Random(3)
    n = 2
    X, Y = random_tensor(rng, n, 1, 0), random_tensor(rng, n, 1, 0)
    a, b = random_tensor(rng, n, 1, 0), random_tensor(rng, n, 0, 1)
    lhs = lie_derivative(X, tensor_product(a, b))
    rhs = tensor_product(lie_derivative(X, a), b) + tensor_product(a, lie_derivative(X, b))
    assert sx.equiv_random(list(lhs.comps), list(rhs.comps)).equal
    t = random_tensor(rng, n, 1, 1)
    lhs = lie_derivative(bracket(X, Y), t)
    rhs = lie_derivative(X, lie_derivative(Y, t)) - lie_derivative(Y, lie_derivative(X, t))
    assert sx.equiv_random(list(lhs.comps), list(rhs.comps)).equal


def test_covariant_derivative_leibniz():
    G = affine2()
    C = splitting_from_group(G, "tilde").connection()
    rng = random.Random(5)
    a, b = random_tensor(rng, 2, 1, 0), random_tensor(rng, 2, 0, 1)
    D = covariant_derivative(C, tensor_product(a, b))
    Da, Db = covariant_derivative(C, a), covariant_derivative(C, b)
    lhs, rhs = [], []
    for i, j, r in all_tuples(2, 3):
        lhs.append(D[(i, j, r)])
        rhs.append(sx.add(sx.mul(Da[(i, r)], b[(j,)]), sx.mul(a[(i,)], Db[(j, r)])))
    assert sx.equiv_random(lhs, rhs, constraints=G.domain((0,))).equal


def test_il_pushforward_identity_and_center():
    G = heisenberg3()
    rng = random.Random(1)
    T = tilde_invariant_tensor(G, TensorField.from_function(3, 1, 1, lambda idx: sx.Const(rng.randint(-3, 3))))
    same = il_pushforward(G, translation_map(G, (0, 0, 0), (0, 0, 0), "hat"), T)
    assert sx.equiv_random(list(same.comps), list(T.comps)).equal
    central = il_pushforward(G, translation_map(G, (0, 0, 0), (0, 0, 5), "hat"), T)
    assert sx.equiv_random(list(central.comps), list(T.comps)).equal


def test_il_pushforward_composes():
    G = affine2()
    rng = random.Random(2)
    T = tilde_invariant_tensor(G, TensorField.from_function(2, 1, 1, lambda idx: sx.Const(rng.randint(-3, 3))))
    f = translation_map(G, (1, 0), (2, 1), "hat")
    g = translation_map(G, (1, 0), (Fraction(1, 3), -2), "hat")
    fg = translation_map(G, (1, 0), tuple(sx.evaluate(c, {}) for c in f(g(G.identity_point()))), "hat")
    lhs = il_pushforward(G, fg, T)
    rhs = il_pushforward(G, f, il_pushforward(G, g, T))
    assert sx.equiv_random(list(lhs.comps), list(rhs.comps), constraints=G.domain((0,))).equal
    out = lhs
    St = splitting_from_group(G, "tilde")
    assert sx.is_zero_random(list(covariant_derivative(St.connection(), out).comps),
                             constraints=G.domain((0,))).equal


def test_il_pushforward_rejects_non_invariant():
    G = affine2()
    T = TensorField.vector([expr("x2", 2, 1), sx.ONE])
    with pytest.raises(NotInvariantError):
        il_pushforward(G, translation_map(G, (1, 0), (2, 1), "hat"), T)
