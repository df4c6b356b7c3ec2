"""Horizontal forms and the operators acting on them.

Two carriers:

* :class:`FormOnT` -- k-forms whose components depend on the base point x
  (copy 0) and on fiber variables.  Each fiber slot is either a tangent
  vector or a covector; slot ``s`` uses the variables ``F(s, 1..n)``.
* :class:`NonlinearForm` -- k-forms on m copies of the manifold; form
  indices refer to the first copy.

Components are stored on strictly increasing index tuples only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from . import symexpr as sx
from .combinat import alternate, antisym_lookup, index_tuples, pullback_components
from .geometry import (
    Connection,
    GroupLaw,
    Splitting,
    copy_map,
    point,
    splitting_from_group,
)
from .symexpr import ONE, ZERO, Const, Expr, F, P, Var, Verdict, add, diff, mul, neg, subst

VECTOR = "vector"
COVECTOR = "covector"


class FormError(ValueError):
    pass


def _full(n: int, k: int, comps: Mapping) -> dict:
    out = {}
    for I in index_tuples(n, k):
        out[I] = sx.as_expr(comps.get(I, ZERO))
    extra = set(comps) - set(out)
    if extra:
        raise FormError(f"components must use strictly increasing indices below {n}: {sorted(extra)}")
    return out


@dataclass(frozen=True)
class FormOnT:
    dim: int
    degree: int
    comps: dict
    slots: tuple = (VECTOR,)

    def __post_init__(self):
        object.__setattr__(self, "comps", _full(self.dim, self.degree, self.comps))
        for s in self.slots:
            if s not in (VECTOR, COVECTOR):
                raise FormError(f"unknown slot kind {s!r}")
        if len(self.slots) > len(sx.FIBER_NAMES):
            raise FormError("too many fiber slots")

    def flat(self) -> list[Expr]:
        return [self.comps[I] for I in index_tuples(self.dim, self.degree)]

    def __getitem__(self, idx) -> Expr:
        return antisym_lookup(self.comps, idx)

    def map(self, fn) -> "FormOnT":
        return FormOnT(self.dim, self.degree, {I: fn(c) for I, c in self.comps.items()}, self.slots)

    def __add__(self, other: "FormOnT") -> "FormOnT":
        return FormOnT(self.dim, self.degree, {I: add(c, other.comps[I]) for I, c in self.comps.items()}, self.slots)

    def __sub__(self, other: "FormOnT") -> "FormOnT":
        return FormOnT(self.dim, self.degree, {I: add(c, neg(other.comps[I])) for I, c in self.comps.items()},
                       self.slots)

    def euler_residuals(self, degree: int = 1) -> list[Expr]:
        """Per-slot homogeneity residuals; all vanish iff the form is multilinear."""
        out = []
        for s in range(len(self.slots)):
            out += [sx.euler_residual(c, s, self.dim, degree) for c in self.flat()]
        return out


@dataclass(frozen=True)
class NonlinearForm:
    dim: int
    copies: int
    degree: int
    comps: dict

    def __post_init__(self):
        if self.copies < 1:
            raise FormError("a nonlinear form needs at least one copy")
        object.__setattr__(self, "comps", _full(self.dim, self.degree, self.comps))
        allowed = {P(c, i) for c in range(self.copies) for i in range(1, self.dim + 1)}
        for c in self.comps.values():
            if not c.free_vars <= allowed:
                bad = sorted(str(v) for v in c.free_vars - allowed)
                raise FormError(f"component uses variables outside {self.copies} copies: {', '.join(bad)}")

    def flat(self) -> list[Expr]:
        return [self.comps[I] for I in index_tuples(self.dim, self.degree)]

    def __getitem__(self, idx) -> Expr:
        return antisym_lookup(self.comps, idx)

    def map(self, fn) -> "NonlinearForm":
        return NonlinearForm(self.dim, self.copies, self.degree, {I: fn(c) for I, c in self.comps.items()})

    def __sub__(self, other: "NonlinearForm") -> "NonlinearForm":
        return NonlinearForm(self.dim, self.copies, self.degree,
                             {I: add(c, neg(other.comps[I])) for I, c in self.comps.items()})


@dataclass(frozen=True)
class SeedForm:
    """Values of an invariant form at the identity.

    For forms over T the components are functions of the fiber variables;
    for forms on m copies they are functions of copies 1..m-1 (the other
    points, normalized so that the first point is the identity).
    """

    dim: int
    degree: int
    comps: dict

    def __post_init__(self):
        object.__setattr__(self, "comps", _full(self.dim, self.degree, self.comps))


# --------------------------------------------------------------------------
# connections from whatever the caller has


def tilde_connection(obj) -> Connection:
    if isinstance(obj, Connection):
        if obj.variant != "tilde":
            return obj.swapped()
        return obj
    if isinstance(obj, GroupLaw):
        obj = splitting_from_group(obj, "tilde")
    if obj.variant == "tilde":
        return obj.connection()
    return obj.connection().swapped()


def hat_connection(obj) -> Connection:
    return tilde_connection(obj).swapped()


# --------------------------------------------------------------------------
# total derivatives


def _fiber_term(conn: Connection, e: Expr, r: int, slots: Sequence[str], n: int) -> list[Expr]:
    g = conn.gamma
    terms = []
    for s, kind in enumerate(slots):
        for a in range(n):
            de = diff(e, F(s, a + 1))
            if de.is_zero():
                continue
            for b in range(n):
                if kind == VECTOR:
                    coef = g[a][r][b]
                    var = Var(F(s, b + 1))
                    if not coef.is_zero():
                        terms.append(mul(de, coef, var))
                else:
                    coef = g[b][r][a]
                    var = Var(F(s, b + 1))
                    if not coef.is_zero():
                        terms.append(neg(mul(de, coef, var)))
    return terms


def total_derivative_T(conn: Connection, e: Expr, r: int, slots: Sequence[str], n: int) -> Expr:
    """d/dx^r treating the fiber variables as parallel for ``conn``."""
    return add(diff(e, P(0, r + 1)), *_fiber_term(conn, e, r, slots, n))


def total_derivative_points(S: Splitting, e: Expr, r: int, copies: int, n: int) -> Expr:
    """d/dx^r moving every other copy along the translation with arrows eps(x, copy)."""
    terms = [diff(e, P(0, r + 1))]
    for c in range(1, copies):
        eps = S.between(0, c)
        for a in range(n):
            de = diff(e, P(c, a + 1))
            if de.is_zero() or eps[a][r].is_zero():
                continue
            terms.append(mul(de, eps[a][r]))
    return add(*terms)


# --------------------------------------------------------------------------
# horizontal differentials


def dhat(obj, form: FormOnT) -> FormOnT:
    """Alternated total derivative along the hat-parallel fiber."""
    conn = hat_connection(obj)
    n, k = form.dim, form.degree
    if k >= n:
        raise FormError(f"degree {k + 1} exceeds the dimension {n}")
    cache: dict = {}

    def deriv(r, I):
        key = (r, I)
        if key not in cache:
            cache[key] = total_derivative_T(conn, form.comps[I], r, form.slots, n)
        return cache[key]

    return FormOnT(n, k + 1, alternate(k, n, deriv), form.slots)


def dtilde(S: Splitting | GroupLaw, form: NonlinearForm) -> NonlinearForm:
    if isinstance(S, GroupLaw):
        S = splitting_from_group(S, "tilde")
    n, k, m = form.dim, form.degree, form.copies
    if k >= n:
        raise FormError(f"degree {k + 1} exceeds the dimension {n}")

    def deriv(r, I):
        return total_derivative_points(S, form.comps[I], r, m, n)

    return NonlinearForm(n, m, k + 1, alternate(k, n, deriv))


def exterior_derivative(form: NonlinearForm) -> NonlinearForm:
    if form.copies != 1:
        raise FormError("the plain exterior derivative needs a one-copy form")
    n, k = form.dim, form.degree
    return NonlinearForm(n, 1, k + 1, alternate(k, n, lambda r, I: diff(form.comps[I], P(0, r + 1))))


# --------------------------------------------------------------------------
# invariance operators


def _gamma_action(conn: Connection, comps: Mapping, r: int, I: tuple, n: int) -> list[Expr]:
    g = conn.gamma
    terms = []
    for m, i in enumerate(I):
        for a in range(n):
            coef = g[a][r][i]
            if coef.is_zero():
                continue
            c = antisym_lookup(comps, I[:m] + (a,) + I[m + 1 :])
            if not c.is_zero():
                terms.append(mul(coef, c))
    return terms


def box_T(conn: Connection, form: FormOnT) -> dict:
    """Invariance operator for the splitting whose diagonal connection is ``conn``.

    Returns ``{(r, I): expr}``; the form is invariant iff every entry vanishes.
    """
    n = form.dim
    out = {}
    for r in range(n):
        for I in index_tuples(n, form.degree):
            terms = _gamma_action(conn, form.comps, r, I, n)
            terms.append(total_derivative_T(conn, form.comps[I], r, form.slots, n))
            out[(r, I)] = add(*terms)
    return out


def box_tilde(S, form: FormOnT) -> dict:
    return box_T(tilde_connection(S), form)


def box_hat_T(S, form: FormOnT) -> dict:
    return box_T(hat_connection(S), form)


def box_points(S: Splitting, form: NonlinearForm, form_conn: Connection | None = None) -> dict:
    """Invariance operator on m-copy forms.

    The other copies move along the arrows of ``S``; the form indices are
    carried by ``form_conn`` (default: the diagonal connection of ``S``).
    """
    n, m = form.dim, form.copies
    conn = form_conn or S.connection()
    out = {}
    for r in range(n):
        for I in index_tuples(n, form.degree):
            terms = _gamma_action(conn, form.comps, r, I, n)
            terms.append(total_derivative_points(S, form.comps[I], r, m, n))
            out[(r, I)] = add(*terms)
    return out


CROSSED = "crossed"
MATCHED = "matched"


def box_hat(G: GroupLaw, form: NonlinearForm, transport: str = CROSSED) -> dict:
    """Hat invariance of m-copy forms.

    The points move by tilde translations.  With ``transport="crossed"`` the
    form indices are carried by the hat arrows (the defining formula); with
    ``"matched"`` they are carried by the tilde arrows, which is the
    transport that commutes with the point motion.
    """
    hat = splitting_from_group(G, "hat")
    if transport == CROSSED:
        return box_points(hat, form)
    if transport == MATCHED:
        return box_points(hat, form, hat.connection().swapped())
    raise FormError(f"unknown transport {transport!r}")


def box_tilde_points(S, form: NonlinearForm, transport: str = CROSSED) -> dict:
    """Tilde invariance of m-copy forms; mirror image of :func:`box_hat`."""
    if isinstance(S, GroupLaw):
        S = splitting_from_group(S, "tilde")
    if transport == CROSSED:
        return box_points(S, form)
    if transport == MATCHED:
        return box_points(S, form, tilde_connection(S).swapped())
    raise FormError(f"unknown transport {transport!r}")


def _box_list(d: dict) -> list[Expr]:
    return [d[key] for key in sorted(d)]


def is_invariant(variant: str, obj, form, trials: int = sx.DEFAULT_TRIALS, seed: int = 0, mode: str = "exact",
                 tol: float = sx.DEFAULT_FLOAT_TOL, transport: str = CROSSED) -> Verdict:
    """Randomized test that the matching invariance operator annihilates ``form``.

    ``obj`` is a GroupLaw (needed for the hat variant on point copies) or a
    Splitting / Connection.
    """
    kw = dict(trials=trials, seed=seed, mode=mode, tol=tol)
    if isinstance(form, FormOnT):
        box = box_tilde(obj, form) if variant == "tilde" else box_hat_T(obj, form)
        dom = _domain(obj, 1)
    else:
        if variant == "tilde":
            box = box_tilde_points(obj, form, transport)
        else:
            if not isinstance(obj, GroupLaw):
                raise FormError("hat invariance of point forms needs a group law")
            box = box_hat(obj, form, transport)
        dom = _domain(obj, form.copies)
    return sx.is_zero_random(_box_list(box), constraints=dom, **kw)


def _domain(obj, copies: int) -> list[Expr]:
    if isinstance(obj, (GroupLaw, Splitting)):
        return obj.domain(tuple(range(copies)))
    return list(obj.constraints)


# --------------------------------------------------------------------------
# coboundary and linearization


def shift_copies(e: Expr, kept: Sequence[int], n: int) -> Expr:
    """Rename copy j to kept[j] simultaneously."""
    return sx.relabel_points(e, {j: c for j, c in enumerate(kept)}, n)


def delta(S: Splitting | GroupLaw, form: NonlinearForm) -> NonlinearForm:
    """Group coboundary across copies.

    The face that drops the first point yields a form based at the second
    point; it is carried back to the first point by the tilde arrow before
    the alternating sum is taken.
    """
    if isinstance(S, GroupLaw):
        S = splitting_from_group(S, "tilde")
    n, m, k = form.dim, form.copies, form.degree
    faces = []
    for i in range(m + 1):
        kept = [c for c in range(m + 1) if c != i]
        comps = {I: shift_copies(c, kept, n) for I, c in form.comps.items()}
        if i == 0 and k > 0:
            comps = pullback_components(S.between(0, 1), comps, n, k)
        faces.append(comps)
    out = {}
    for I in index_tuples(n, k):
        out[I] = add(*(f[I] if i % 2 == 0 else neg(f[I]) for i, f in enumerate(faces)))
    return NonlinearForm(n, m + 1, k, out)


def linearize(form: NonlinearForm) -> FormOnT:
    """Differentiate copy c along fiber slot c-1 at the diagonal."""
    n, m = form.dim, form.copies
    if m < 2:
        raise FormError("linearization needs at least two copies")
    to_diag = copy_map(n, {c: point(0, n) for c in range(1, m)})

    def lin(e):
        for c in range(1, m):
            e = sx.directional(e, c, sx.fiber_vars(c - 1, n), n)
        return subst(e, to_diag)

    return FormOnT(n, form.degree, {I: lin(c) for I, c in form.comps.items()}, (VECTOR,) * (m - 1))


# --------------------------------------------------------------------------
# invariant extensions


def extend_T(S: Splitting, seed: SeedForm, slots: Sequence[str], identity: Sequence) -> FormOnT:
    """Invariant form over T for the splitting ``S`` with value ``seed`` at the identity."""
    n = S.dim
    x = point(0, n)
    e = [Const(v) for v in identity]
    to_e = S.at(x, e)  # T_x -> T_e
    from_e = S.at(e, x)  # T_e -> T_x
    mp = {}
    for s, kind in enumerate(slots):
        for j in range(n):
            if kind == VECTOR:
                mp[F(s, j + 1)] = add(*(mul(to_e[j][a], Var(F(s, a + 1))) for a in range(n)))
            else:
                mp[F(s, j + 1)] = add(*(mul(Var(F(s, i + 1)), from_e[i][j]) for i in range(n)))
    moved = {I: subst(c, mp) for I, c in seed.comps.items()}
    return FormOnT(n, seed.degree, pullback_components(to_e, moved, n, seed.degree), tuple(slots))


def extend_points(G: GroupLaw, variant: str, seed: SeedForm, copies: int, transport: str = CROSSED) -> NonlinearForm:
    """Invariant m-copy form with value ``seed`` when the first point is the identity."""
    n = G.dim
    if transport not in (CROSSED, MATCHED):
        raise FormError(f"unknown transport {transport!r}")
    carrier = variant if transport == CROSSED else {"hat": "tilde", "tilde": "hat"}[variant]
    S = splitting_from_group(G, carrier)
    x = point(0, n)
    e = G.identity_point()
    mp = {}
    for c in range(1, copies):
        yc = point(c, n)
        q = G.right_quotient(x, yc) if variant == "hat" else G.left_quotient(x, yc)
        for i in range(n):
            mp[P(c, i + 1)] = q[i]
    moved = {I: subst(c, mp) for I, c in seed.comps.items()}
    comps = pullback_components(S.at(x, e), moved, n, seed.degree)
    return NonlinearForm(n, copies, seed.degree, comps)


def invariant_extension(variant: str, obj, seed: SeedForm, copies: int | None = None,
                        slots: Sequence[str] = (VECTOR,), transport: str = CROSSED):
    """Dispatch: ``copies=None`` builds a form over T, otherwise an m-copy form."""
    if copies is None:
        if isinstance(obj, GroupLaw):
            S = splitting_from_group(obj, variant)
            identity = obj.identity
        else:
            S, identity = obj
            if S.variant != variant:
                raise FormError("splitting variant does not match")
        return extend_T(S, seed, slots, identity)
    if not isinstance(obj, GroupLaw):
        raise FormError("extensions on point copies need a group law")
    return extend_points(obj, variant, seed, copies, transport)


# --------------------------------------------------------------------------
# random forms


def random_rational_coeff(rng: random.Random) -> Fraction:
    v = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return v if v != 0 else Fraction(1)


def random_polynomial(rng: random.Random, variables: Sequence[Expr], terms: int = 4, max_degree: int = 2) -> Expr:
    """Sparse polynomial of total degree <= max_degree with rational coefficients."""
    out = []
    for _ in range(terms):
        deg = rng.randint(0, max_degree)
        factors = [Const(random_rational_coeff(rng))]
        for _ in range(deg):
            if variables:
                factors.append(rng.choice(list(variables)))
        out.append(mul(*factors))
    return add(*out)


def random_form_T(rng: random.Random, n: int, k: int, slots: Sequence[str] = (VECTOR,), linear: bool = False,
                  terms: int = 3) -> FormOnT:
    xs = sx.point_vars(0, n)
    fibers = [v for s in range(len(slots)) for v in sx.fiber_vars(s, n)]
    comps = {}
    for I in index_tuples(n, k):
        if linear:
            parts = []
            for _ in range(terms):
                f = [random_polynomial(rng, xs, 1, 2)]
                for s in range(len(slots)):
                    f.append(rng.choice(sx.fiber_vars(s, n)))
                parts.append(mul(*f))
            comps[I] = add(*parts)
        else:
            comps[I] = random_polynomial(rng, xs + fibers, terms + 1, 2)
    return FormOnT(n, k, comps, tuple(slots))


def random_nonlinear(rng: random.Random, n: int, m: int, k: int, terms: int = 4) -> NonlinearForm:
    vs = [v for c in range(m) for v in sx.point_vars(c, n)]
    return NonlinearForm(n, m, k, {I: random_polynomial(rng, vs, terms, 2) for I in index_tuples(n, k)})


def random_seed_points(rng: random.Random, n: int, m: int, k: int, terms: int = 3) -> SeedForm:
    vs = [v for c in range(1, m) for v in sx.point_vars(c, n)]
    return SeedForm(n, k, {I: random_polynomial(rng, vs, terms, 2) for I in index_tuples(n, k)})


def random_seed_T(rng: random.Random, n: int, k: int, slots: Sequence[str] = (VECTOR,), linear: bool = True) -> SeedForm:
    comps = {}
    for I in index_tuples(n, k):
        if linear:
            parts = []
            for _ in range(2):
                f = [Const(random_rational_coeff(rng))]
                for s in range(len(slots)):
                    f.append(rng.choice(sx.fiber_vars(s, n)))
                parts.append(mul(*f))
            comps[I] = add(*parts)
        else:
            fibers = [v for s in range(len(slots)) for v in sx.fiber_vars(s, n)]
            comps[I] = random_polynomial(rng, fibers, 3, 2)
    return SeedForm(n, k, comps)


# --------------------------------------------------------------------------
# biinvariant forms


def _seed_monomials(n: int, copies: int, degree: int) -> list[Expr]:
    from itertools import combinations_with_replacement

    vs = [v for c in range(1, copies) for v in sx.point_vars(c, n)]
    out = [ONE]
    for d in range(1, degree + 1):
        out.extend(mul(*combo) for combo in combinations_with_replacement(vs, d))
    return out


def biinvariant_forms(G: GroupLaw, k: int, copies: int = 2, seed_degree: int = 2, points: int = 20, seed: int = 0,
                      transport: str = CROSSED, verify_trials: int = 8) -> list[NonlinearForm]:
    """Basis of the k-forms on ``copies`` points that are invariant under both actions,
    searched among hat extensions of polynomial seeds of bounded degree.

    The tilde condition is imposed exactly at ``points`` rational samples; each
    kernel vector is re-checked symbolically and a spurious one raises.
    """
    from .linalg import QMatrix, kernel_basis

    n = G.dim
    St = splitting_from_group(G, "tilde")
    basis = [
        extend_points(G, "hat", SeedForm(n, k, {I: mono}), copies, transport)
        for I in index_tuples(n, k)
        for mono in _seed_monomials(n, copies, seed_degree)
    ]
    boxes = [_box_list(box_tilde_points(St, w, transport)) for w in basis]
    variables = [P(c, i) for c in range(copies) for i in range(1, n + 1)]
    rows = []
    for pt in sx.sample_points(variables, points, seed, G.domain(tuple(range(copies)))):
        ev = sx.Evaluator(pt.values)
        vals = [[ev(e) for e in b] for b in boxes]
        for j in range(len(boxes[0])):
            rows.append([vals[i][j] for i in range(len(basis))])
    out = []
    for vec in kernel_basis(QMatrix.from_rows(rows, len(basis))):
        comps = {I: add(*(mul(Const(c), b.comps[I]) for c, b in zip(vec, basis) if c)) for I in index_tuples(n, k)}
        w = NonlinearForm(n, copies, k, comps)
        for variant, obj in (("tilde", St), ("hat", G)):
            if not is_invariant(variant, obj, w, trials=verify_trials, seed=seed + 1, transport=transport).equal:
                raise FormError("sampled invariance condition admitted a spurious form; raise the point count")
        out.append(w)
    return out
