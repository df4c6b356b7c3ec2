"""Group laws, splittings and the differential geometry they induce.

Conventions used throughout the package:

* ``tilde`` is built from left translations ``u -> m(m(y, inv x), u)`` and
  ``hat`` from right translations ``u -> m(u, m(inv x, y))``; both are
  differentiated at ``u = x``.
* ``eps[i][j]`` is a function of the source point ``x`` (copy 0) and the
  target point ``y`` (copy 1); ``i`` is the target index, ``j`` the source index.
* ``Connection.gamma[i][j][k]`` holds Gamma^i_{jk}.  The diagonal connection
  of a splitting is ``gamma[i][k][j] = d eps[i][j] / d y^k`` at ``y = x``.
* Covariant derivatives append the derivative index last, vectors get
  ``-Gamma^i_{ra}`` and covectors ``+Gamma^b_{ra}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

from . import symexpr as sx
from .combinat import all_tuples
from .linalg import QMatrix, solve
from .symexpr import ONE, ZERO, Const, Expr, P, Var, Verdict, add, diff, mul, neg, subst

Matrix = tuple[tuple[Expr, ...], ...]


class GeometryError(ValueError):
    pass


class NotInvariantError(GeometryError):
    """An input that must be invariant failed its invariance test."""

    def __init__(self, message: str, verdict: Verdict | None = None):
        super().__init__(message)
        self.verdict = verdict


@dataclass
class CheckResult:
    name: str
    verdict: Verdict
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict.equal


# --------------------------------------------------------------------------
# small helpers


def copy_map(n: int, mapping: dict[int, Sequence[Expr]]) -> dict:
    """Substitution dict sending point copy ``c`` to the expressions ``mapping[c]``."""
    out = {}
    for c, exprs in mapping.items():
        for i in range(n):
            out[P(c, i + 1)] = sx.as_expr(exprs[i])
    return out


def point(copy: int, n: int) -> list[Expr]:
    return sx.point_vars(copy, n)


def as_point(values, n: int) -> list[Expr]:
    vals = list(values)
    if len(vals) != n:
        raise GeometryError(f"point has {len(vals)} coordinates, expected {n}")
    return [sx.as_expr(v) if not isinstance(v, (int, Fraction)) else Const(v) for v in vals]


def expand_constraints(constraints: Sequence[Expr], n: int, copies: Sequence[int]) -> list[Expr]:
    out = []
    for c in constraints:
        for k in copies:
            out.append(c if k == 0 else sx.relabel_points(c, {0: k}, n))
    return out


def matmul_expr(a: Sequence[Sequence[Expr]], b: Sequence[Sequence[Expr]]) -> list[list[Expr]]:
    n, m, p = len(a), len(b), len(b[0]) if b else 0
    return [[add(*(mul(a[i][k], b[k][j]) for k in range(m))) for j in range(p)] for i in range(n)]


def identity_matrix(n: int) -> list[list[Expr]]:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def flatten(m: Sequence[Sequence[Expr]]) -> list[Expr]:
    return [e for row in m for e in row]


# --------------------------------------------------------------------------
# Group laws


@dataclass(frozen=True)
class GroupLaw:
    """A group law in coordinates, ``mult`` in (x, y), ``inv`` in x."""

    name: str
    dim: int
    mult: tuple[Expr, ...]
    inv: tuple[Expr, ...]
    identity: tuple[Fraction, ...]
    constraints: tuple[Expr, ...] = ()

    def __post_init__(self):
        n = self.dim
        if len(self.mult) != n or len(self.inv) != n or len(self.identity) != n:
            raise GeometryError("group law components do not match the dimension")
        allowed = {P(0, i) for i in range(1, n + 1)} | {P(1, i) for i in range(1, n + 1)}
        for e in self.mult:
            if not e.free_vars <= allowed:
                raise GeometryError(f"multiplication uses unexpected variables: {e}")
        for e in self.inv:
            if not e.free_vars <= {P(0, i) for i in range(1, n + 1)}:
                raise GeometryError(f"inverse must depend on x only: {e}")

    @property
    def transcendental(self) -> bool:
        return any(e.has_func for e in self.mult + self.inv)

    def identity_point(self) -> list[Expr]:
        return [Const(v) for v in self.identity]

    def compose(self, a: Sequence[Expr], b: Sequence[Expr]) -> list[Expr]:
        mp = copy_map(self.dim, {0: a, 1: b})
        return [subst(e, mp) for e in self.mult]

    def inverse(self, a: Sequence[Expr]) -> list[Expr]:
        mp = copy_map(self.dim, {0: a})
        return [subst(e, mp) for e in self.inv]

    def domain(self, copies: Sequence[int] = (0, 1)) -> list[Expr]:
        return expand_constraints(self.constraints, self.dim, copies)

    # translations used by the splittings and by the invariance conditions
    def left_quotient(self, src: Sequence[Expr], dst: Sequence[Expr]) -> list[Expr]:
        """``m(dst, inv src)``: the left translation factor taking src to dst."""
        return self.compose(dst, self.inverse(src))

    def right_quotient(self, src: Sequence[Expr], dst: Sequence[Expr]) -> list[Expr]:
        """``m(inv src, dst)``: the right translation factor taking src to dst."""
        return self.compose(self.inverse(src), dst)


def verify_group_axioms(G: GroupLaw, trials: int = sx.DEFAULT_TRIALS, seed: int = 0, mode: str = "exact",
                        tol: float = sx.DEFAULT_FLOAT_TOL) -> list[CheckResult]:
    n = G.dim
    x, y, z = point(0, n), point(1, n), point(2, n)
    e = G.identity_point()
    kw = dict(trials=trials, seed=seed, mode=mode, tol=tol)
    out = []
    c1 = G.domain((0,))
    out.append(CheckResult("right-identity", sx.equiv_random(G.compose(x, e), x, constraints=c1, **kw)))
    out.append(CheckResult("left-identity", sx.equiv_random(G.compose(e, x), x, constraints=c1, **kw)))
    out.append(CheckResult("right-inverse", sx.equiv_random(G.compose(x, G.inverse(x)), e, constraints=c1, **kw)))
    out.append(CheckResult("left-inverse", sx.equiv_random(G.compose(G.inverse(x), x), e, constraints=c1, **kw)))
    lhs = G.compose(G.compose(x, y), z)
    rhs = G.compose(x, G.compose(y, z))
    out.append(CheckResult("associativity", sx.equiv_random(lhs, rhs, constraints=G.domain((0, 1, 2)), **kw)))
    return out


# --------------------------------------------------------------------------
# Splittings and connections


@dataclass(frozen=True)
class Splitting:
    """The 1-arrow field eps(x, y) of a parallelism."""

    dim: int
    eps: Matrix
    variant: str = "tilde"
    constraints: tuple[Expr, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.variant not in ("tilde", "hat"):
            raise GeometryError(f"unknown variant {self.variant!r}")
        if len(self.eps) != self.dim or any(len(r) != self.dim for r in self.eps):
            raise GeometryError("splitting matrix has the wrong shape")

    def domain(self, copies: Sequence[int] = (0, 1)) -> list[Expr]:
        return expand_constraints(self.constraints, self.dim, copies)

    def at(self, src: Sequence[Expr], dst: Sequence[Expr]) -> list[list[Expr]]:
        """eps(src, dst) with arbitrary expressions substituted."""
        mp = copy_map(self.dim, {0: src, 1: dst})
        return [[subst(e, mp) for e in row] for row in self.eps]

    def between(self, c_src: int, c_dst: int) -> list[list[Expr]]:
        n = self.dim
        return self.at(point(c_src, n), point(c_dst, n))

    def connection(self) -> "Connection":
        """Diagonal derivative connection ``[d eps^i_j / d y^k]_{y=x}`` stored at [i][k][j]."""
        n = self.dim
        diag = copy_map(n, {1: point(0, n)})
        g = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    g[i][k][j] = subst(diff(self.eps[i][j], P(1, k + 1)), diag)
        return Connection(n, _freeze3(g), self.variant, self.constraints)

    def check_axioms(self, trials: int = sx.DEFAULT_TRIALS, seed: int = 0, mode: str = "exact",
                     tol: float = sx.DEFAULT_FLOAT_TOL) -> list[CheckResult]:
        n = self.dim
        kw = dict(trials=trials, seed=seed, mode=mode, tol=tol)
        x, y, z = point(0, n), point(1, n), point(2, n)
        ident = flatten(identity_matrix(n))
        out = []
        diag = flatten(self.at(x, x))
        out.append(CheckResult("diagonal-identity", sx.equiv_random(diag, ident, constraints=self.domain((0,)), **kw)))
        comp = matmul_expr(self.at(y, z), self.at(x, y))
        out.append(CheckResult("arrow-composition",
                               sx.equiv_random(flatten(comp), flatten(self.at(x, z)),
                                               constraints=self.domain((0, 1, 2)), **kw)))
        inv = matmul_expr(self.at(x, y), self.at(y, x))
        out.append(CheckResult("arrow-inversion", sx.equiv_random(flatten(inv), ident,
                                                                 constraints=self.domain((0, 1)), **kw)))
        return out


def _freeze3(g):
    return tuple(tuple(tuple(r) for r in plane) for plane in g)


@dataclass(frozen=True)
class Connection:
    """Connection coefficients ``gamma[i][j][k]`` = Gamma^i_{jk}(x)."""

    dim: int
    gamma: tuple
    variant: str = "tilde"
    constraints: tuple[Expr, ...] = ()

    def swapped(self) -> "Connection":
        """The dual connection Gamma^i_{kj}; tilde and hat swap roles."""
        n = self.dim
        g = [[[self.gamma[i][k][j] for k in range(n)] for j in range(n)] for i in range(n)]
        other = {"tilde": "hat", "hat": "tilde"}[self.variant]
        return Connection(n, _freeze3(g), other, self.constraints)

    def flat(self) -> list[Expr]:
        return [self.gamma[i][j][k] for i, j, k in all_tuples(self.dim, 3)]

    def __getitem__(self, ijk):
        i, j, k = ijk
        return self.gamma[i][j][k]


def splitting_from_group(G: GroupLaw, variant: str = "tilde") -> Splitting:
    n = G.dim
    x, y, u = point(0, n), point(1, n), point(2, n)
    if variant == "tilde":
        a = G.left_quotient(x, y)
        moved = G.compose(a, u)
    elif variant == "hat":
        b = G.right_quotient(x, y)
        moved = G.compose(u, b)
    else:
        raise GeometryError(f"unknown variant {variant!r}")
    at_x = copy_map(n, {2: x})
    eps = tuple(tuple(subst(diff(moved[i], P(2, j + 1)), at_x) for j in range(n)) for i in range(n))
    return Splitting(n, eps, variant, G.constraints, G.name)


def check_connection_relation(S: Splitting, **kw) -> CheckResult:
    """-[d eps^i_j / d x^k]_{x=y} equals the swapped diagonal connection."""
    n = S.dim
    conn = S.connection()
    to_x = copy_map(n, {0: point(1, n)})
    back = {P(1, i): Var(P(0, i)) for i in range(1, n + 1)}
    lhs, rhs = [], []
    for i, j, k in all_tuples(n, 3):
        d = subst(diff(S.eps[i][j], P(0, k + 1)), to_x)
        lhs.append(neg(subst(d, back)))
        rhs.append(conn.gamma[i][k][j])
    return CheckResult("connection-relation", sx.equiv_random(lhs, rhs, constraints=S.domain((0,)), **kw))


def check_index_swap(tilde: Splitting, hat: Splitting, **kw) -> CheckResult:
    """The hat splitting's diagonal connection is the index swap of the tilde one."""
    a = tilde.connection().swapped()
    b = hat.connection()
    return CheckResult("index-swap", sx.equiv_random(a.flat(), b.flat(), constraints=tilde.domain((0,)), **kw))


# --------------------------------------------------------------------------
# Tensor fields


@dataclass(frozen=True)
class TensorField:
    """Components of an (r, s) tensor; index tuples list the r upper indices first."""

    dim: int
    upper: int
    lower: int
    comps: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.comps) != self.dim ** (self.upper + self.lower):
            raise GeometryError("wrong number of tensor components")

    @classmethod
    def from_function(cls, n: int, r: int, s: int, fn) -> "TensorField":
        return cls(n, r, s, tuple(sx.as_expr(fn(idx)) for idx in all_tuples(n, r + s)))

    @classmethod
    def vector(cls, comps: Sequence) -> "TensorField":
        return cls(len(comps), 1, 0, tuple(sx.as_expr(c) for c in comps))

    def _pos(self, idx) -> int:
        p = 0
        for i in idx:
            p = p * self.dim + i
        return p

    def __getitem__(self, idx) -> Expr:
        if isinstance(idx, int):
            idx = (idx,)
        return self.comps[self._pos(idx)]

    def items(self):
        return zip(all_tuples(self.dim, self.upper + self.lower), self.comps)

    def map(self, fn) -> "TensorField":
        return TensorField(self.dim, self.upper, self.lower, tuple(fn(c) for c in self.comps))

    def subst(self, mapping) -> "TensorField":
        return self.map(lambda c: subst(c, mapping))

    def __add__(self, other: "TensorField") -> "TensorField":
        self._same(other)
        return TensorField(self.dim, self.upper, self.lower, tuple(add(a, b) for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other: "TensorField") -> "TensorField":
        self._same(other)
        return TensorField(self.dim, self.upper, self.lower,
                           tuple(add(a, neg(b)) for a, b in zip(self.comps, other.comps)))

    def scale(self, f: Expr) -> "TensorField":
        return self.map(lambda c: mul(f, c))

    def _same(self, other):
        if (self.dim, self.upper, self.lower) != (other.dim, other.upper, other.lower):
            raise GeometryError("tensor types differ")


def tensor_product(a: TensorField, b: TensorField) -> TensorField:
    """Product with indices ordered (upper a, upper b, lower a, lower b)."""
    n = a.dim

    def comp(idx):
        ua, ub = idx[: a.upper], idx[a.upper : a.upper + b.upper]
        rest = idx[a.upper + b.upper :]
        la, lb = rest[: a.lower], rest[a.lower :]
        return mul(a[ua + la], b[ub + lb])

    return TensorField.from_function(n, a.upper + b.upper, a.lower + b.lower, comp)


def covariant_derivative(C: Connection, T: TensorField) -> TensorField:
    n, r, s = T.dim, T.upper, T.lower
    g = C.gamma

    def comp(idx):
        base, d = idx[:-1], idx[-1]
        terms = [diff(T[base], P(0, d + 1))]
        for m in range(r + s):
            for a in range(n):
                swapped = base[:m] + (a,) + base[m + 1 :]
                if m < r:
                    coef = g[base[m]][d][a]
                    if not coef.is_zero():
                        terms.append(neg(mul(coef, T[swapped])))
                else:
                    coef = g[a][d][base[m]]
                    if not coef.is_zero():
                        terms.append(mul(coef, T[swapped]))
        return add(*terms)

    return TensorField.from_function(n, r, s + 1, comp)


def torsion(C: Connection) -> TensorField:
    g = C.gamma
    return TensorField.from_function(C.dim, 1, 2, lambda idx: add(g[idx[0]][idx[1]][idx[2]],
                                                                 neg(g[idx[0]][idx[2]][idx[1]])))


def curvature_frak(C: Connection) -> TensorField:
    """Linear integrability tensor, index order (a, s, r, b)."""
    n, g = C.dim, C.gamma

    def half(a, s, r, b):
        terms = [diff(g[a][r][b], P(0, s + 1))]
        terms += [mul(g[c][s][b], g[a][r][c]) for c in range(n)]
        return add(*terms)

    return TensorField.from_function(n, 1, 3, lambda i: add(half(*i), neg(half(i[0], i[2], i[1], i[3]))))


def curvature_cal(S: Splitting) -> TensorField:
    """Nonlinear integrability tensor, a two-point (1, 2) tensor in (x, y)."""
    n, e = S.dim, S.eps

    def half(a, s, r):
        terms = [diff(e[a][r], P(0, s + 1))]
        terms += [mul(diff(e[a][r], P(1, b + 1)), e[b][s]) for b in range(n)]
        return add(*terms)

    return TensorField.from_function(n, 1, 2, lambda i: add(half(*i), neg(half(i[0], i[2], i[1]))))


def check_fundamental_identity(S: Splitting, **kw) -> list[CheckResult]:
    """nabla~_i T~^j_{kl} = Rfrak^^j_{kl,i} and, when Rfrak^ = 0, nabla^ T^ = 0."""
    n = S.dim
    ct = S.connection()
    ch = ct.swapped()
    dT = covariant_derivative(ct, torsion(ct))
    R = curvature_frak(ch)
    lhs, rhs = [], []
    for j, k, l, i in all_tuples(n, 4):
        lhs.append(dT[(j, k, l, i)])
        rhs.append(R[(j, k, l, i)])
    dom = S.domain((0,))
    out = [CheckResult("torsion-derivative-is-curvature", sx.equiv_random(lhs, rhs, constraints=dom, **kw))]
    flat_hat = sx.is_zero_random(list(R.comps), constraints=dom, **kw)
    out.append(CheckResult("hat-curvature-vanishes", flat_hat))
    if flat_hat.equal:
        dTh = covariant_derivative(ch, torsion(ch))
        out.append(CheckResult("hat-torsion-parallel", sx.is_zero_random(list(dTh.comps), constraints=dom, **kw)))
    return out


# --------------------------------------------------------------------------
# Frames, brackets, structure constants


def invariant_frame(S: Splitting, base: Sequence) -> list[TensorField]:
    """Frame field a is column a of eps(base, x)."""
    n = S.dim
    b = as_point(base, n)
    m = S.at(b, point(0, n))
    at_base = [[sx.evaluate(subst(e, copy_map(n, {0: b})), {}) for e in row] for row in m] if all(
        isinstance(v, Const) for v in b) else None
    if at_base is not None:
        from .linalg import rank

        if rank(QMatrix.from_rows(at_base)) < n:
            raise GeometryError("frame is degenerate at the base point")
    return [TensorField.vector([m[i][a] for i in range(n)]) for a in range(n)]


def bracket(X: TensorField, Y: TensorField) -> TensorField:
    n = X.dim
    out = []
    for i in range(n):
        terms = []
        for a in range(n):
            terms.append(mul(X[a], diff(Y[i], P(0, a + 1))))
            terms.append(neg(mul(Y[a], diff(X[i], P(0, a + 1)))))
        out.append(add(*terms))
    return TensorField.vector(out)


@dataclass(frozen=True)
class StructureConstants:
    """``c[k][i][j]`` with [e_i, e_j] = sum_k c^k_{ij} e_k."""

    dim: int
    c: tuple
    name: str = ""

    @classmethod
    def from_brackets(cls, dim: int, brackets: Sequence[tuple[int, int, int, Fraction]], name: str = "") -> "StructureConstants":
        """Brackets as 1-based (i, j, k, coeff) meaning [e_i, e_j] has coeff on e_k."""
        c = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for i, j, k, v in brackets:
            if not (1 <= i <= dim and 1 <= j <= dim and 1 <= k <= dim):
                raise GeometryError(f"bracket index out of range: {(i, j, k)}")
            c[k - 1][i - 1][j - 1] += Fraction(v)
            c[k - 1][j - 1][i - 1] -= Fraction(v)
        return cls(dim, tuple(tuple(tuple(r) for r in p) for p in c), name)

    def __getitem__(self, kij):
        k, i, j = kij
        return self.c[k][i][j]

    def negated(self) -> "StructureConstants":
        n = self.dim
        return StructureConstants(n, tuple(tuple(tuple(-self.c[k][i][j] for j in range(n)) for i in range(n))
                                          for k in range(n)), self.name)

    def is_antisymmetric(self) -> bool:
        n = self.dim
        return all(self.c[k][i][j] == -self.c[k][j][i] for k, i, j in product(range(n), repeat=3))

    def jacobi_defect(self) -> list[tuple[int, int, int, int]]:
        """Index tuples (i, j, k, b) where the Jacobi sum is nonzero."""
        n, c = self.dim, self.c
        bad = []
        for i, j, k, b in product(range(n), repeat=4):
            s = sum(c[a][i][j] * c[b][a][k] + c[a][j][k] * c[b][a][i] + c[a][k][i] * c[b][a][j] for a in range(n))
            if s != 0:
                bad.append((i, j, k, b))
        return bad

    def check(self) -> None:
        if not self.is_antisymmetric():
            raise GeometryError("structure constants are not antisymmetric")
        if self.jacobi_defect():
            raise GeometryError("structure constants violate the Jacobi identity")

    def nonzero(self) -> list[tuple[int, int, int, Fraction]]:
        """1-based (k, i, j, value) with i < j."""
        n = self.dim
        return [(k + 1, i + 1, j + 1, self.c[k][i][j]) for k in range(n) for i in range(n) for j in range(i + 1, n)
                if self.c[k][i][j] != 0]

    def to_json(self) -> list[dict]:
        return [{"k": k, "i": i, "j": j, "value": f"{v.numerator}/{v.denominator}"} for k, i, j, v in self.nonzero()]


def structure_constants(frame: Sequence[TensorField], at: Sequence) -> StructureConstants:
    """Constants of the bracket of ``frame`` expanded in the frame at the point ``at``."""
    n = len(frame)
    vals = {P(0, i + 1): Fraction(v) for i, v in enumerate(at)}
    ev = sx.Evaluator(vals)
    F = QMatrix.from_rows([[ev(frame[a][i]) for a in range(n)] for i in range(n)])
    cols = []
    pairs = []
    for i in range(n):
        for j in range(n):
            br = bracket(frame[i], frame[j])
            cols.append([ev(br[k]) for k in range(n)])
            pairs.append((i, j))
    B = QMatrix.from_columns(cols, n)
    try:
        X = solve(F, B)
    except ValueError as exc:
        raise GeometryError("frame is degenerate at the evaluation point") from exc
    c = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for col, (i, j) in enumerate(pairs):
        for k in range(n):
            c[k][i][j] = X[k, col]
    sc = StructureConstants(n, tuple(tuple(tuple(r) for r in p) for p in c))
    sc.check()
    return sc


def torsion_in_frame(S: Splitting, base: Sequence) -> list[list[list[Fraction]]]:
    """T~ at ``base`` expressed in the invariant frame based there: out[k][i][j]."""
    n = S.dim
    frame = invariant_frame(S, base)
    T = torsion(S.connection())
    vals = {P(0, i + 1): Fraction(v) for i, v in enumerate(base)}
    ev = sx.Evaluator(vals)
    F = [[ev(frame[a][i]) for a in range(n)] for i in range(n)]
    Fq = QMatrix.from_rows(F)
    out = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            vec = []
            for k in range(n):
                s = Fraction(0)
                for a, b in product(range(n), repeat=2):
                    s += ev(T[(k, a, b)]) * F[a][i] * F[b][j]
                vec.append(s)
            sol = solve(Fq, QMatrix.from_columns([vec], n))
            for k in range(n):
                out[k][i][j] = sol[k, 0]
    return out


# --------------------------------------------------------------------------
# Lie derivative and push-forwards


def lie_derivative(X: TensorField, T: TensorField) -> TensorField:
    n, r, s = T.dim, T.upper, T.lower

    def comp(idx):
        terms = [add(*(mul(X[a], diff(T[idx], P(0, a + 1))) for a in range(n)))]
        for m in range(r + s):
            for a in range(n):
                swapped = idx[:m] + (a,) + idx[m + 1 :]
                if m < r:
                    terms.append(neg(mul(T[swapped], diff(X[idx[m]], P(0, a + 1)))))
                else:
                    terms.append(mul(T[swapped], diff(X[a], P(0, idx[m] + 1))))
        return add(*terms)

    return TensorField.from_function(n, r, s, comp)


def contract_derivative(D: TensorField, X: TensorField) -> TensorField:
    """X^a (D)_{..., a}: contract the last lower index of D with the vector X."""
    n = D.dim
    return TensorField.from_function(n, D.upper, D.lower - 1,
                                     lambda idx: add(*(mul(X[a], D[idx + (a,)]) for a in range(n))))


def transform_tensor(T: TensorField, A: Sequence[Sequence[Expr]], A_inv: Sequence[Sequence[Expr]]) -> TensorField:
    """Push T through the linear map A: upper indices by A, lower by A^{-1}."""
    n, r, s = T.dim, T.upper, T.lower

    def comp(idx):
        terms = []
        for src in all_tuples(n, r + s):
            t = T[src]
            if t.is_zero():
                continue
            f = [t]
            for m in range(r + s):
                coef = A[idx[m]][src[m]] if m < r else A_inv[src[m]][idx[m]]
                if coef.is_zero():
                    break
                f.append(coef)
            else:
                terms.append(mul(*f))
        return add(*terms)

    return TensorField.from_function(n, r, s, comp)


# --------------------------------------------------------------------------
# Translations


@dataclass(frozen=True)
class TranslationMap:
    """A translation z -> f(z) in closed form, with its initial condition source -> target."""

    group: GroupLaw
    variant: str
    source: tuple
    target: tuple
    exprs: tuple[Expr, ...]

    def __call__(self, pt: Sequence[Expr]) -> list[Expr]:
        mp = copy_map(self.group.dim, {0: pt})
        return [subst(e, mp) for e in self.exprs]

    def inverse(self) -> "TranslationMap":
        return translation_map(self.group, self.target, self.source, self.variant)

    def residual(self, splitting: Splitting | None = None) -> list[Expr]:
        """d f^i / d x^j - eps^i_j(x, f(x)) for the matching splitting."""
        n = self.group.dim
        S = splitting or splitting_from_group(self.group, self.variant)
        eps = S.at(point(0, n), list(self.exprs))
        return [add(diff(self.exprs[i], P(0, j + 1)), neg(eps[i][j])) for i in range(n) for j in range(n)]

    def check(self, **kw) -> list[CheckResult]:
        n = self.group.dim
        src = as_point(self.source, n)
        dom = self.group.domain((0,))
        out = [CheckResult("initial-condition", sx.equiv_random(self(src), as_point(self.target, n), **kw))]
        out.append(CheckResult("translation-pde", sx.is_zero_random(self.residual(), constraints=dom, **kw)))
        return out


def translation_map(G: GroupLaw, a: Sequence, b: Sequence, variant: str = "tilde") -> TranslationMap:
    """tilde: z -> m(m(b, inv a), z); hat: z -> m(z, m(inv a, b))."""
    n = G.dim
    pa, pb = as_point(a, n), as_point(b, n)
    z = point(0, n)
    if variant == "tilde":
        ex = G.compose(G.left_quotient(pa, pb), z)
    elif variant == "hat":
        ex = G.compose(z, G.right_quotient(pa, pb))
    else:
        raise GeometryError(f"unknown variant {variant!r}")
    return TranslationMap(G, variant, tuple(a), tuple(b), tuple(ex))


def translation_g(G: GroupLaw, a: Sequence, b: Sequence) -> TranslationMap:
    return translation_map(G, a, b, "tilde")


def psi(f: TranslationMap, base: Sequence) -> TranslationMap:
    """The hat translation whose arrow from ``base`` to f(base) is eps^(base, f(base)).

    Only translations by central elements give a result independent of ``base``.
    """
    if f.variant != "tilde":
        raise GeometryError("psi expects a tilde translation")
    n = f.group.dim
    b = as_point(base, n)
    return translation_map(f.group, tuple(b), tuple(f(b)), "hat")


def is_parallel(C: Connection, X: TensorField, constraints=(), **kw) -> Verdict:
    return sx.is_zero_random(list(covariant_derivative(C, X).comps), constraints=constraints, **kw)


def dpsi(G: GroupLaw, xi: TensorField, base: Sequence, check: bool = True, **kw) -> TensorField:
    """The tilde-parallel field agreeing with the hat-parallel ``xi`` at ``base``.

    ``base`` may hold symbols from another point copy, which gives the whole
    family of maps at once.
    """
    n = G.dim
    tilde = splitting_from_group(G, "tilde")
    if check:
        v = is_parallel(tilde.connection().swapped(), xi, G.domain((0,)), **kw)
        if not v.equal:
            raise NotInvariantError("vector field is not hat-invariant", v)
    b = as_point(base, n)
    at_b = copy_map(n, {0: b})
    val = [subst(xi[i], at_b) for i in range(n)]
    eps = tilde.at(b, point(0, n))
    return TensorField.vector([add(*(mul(eps[i][a], val[a]) for a in range(n))) for i in range(n)])


def il_pushforward(G: GroupLaw, f: TranslationMap, T: TensorField, check: bool = True, **kw) -> TensorField:
    """(I L f)(T)(p) = eps^(f^{-1} p, p)_* T(f^{-1} p) for a hat translation f."""
    if f.variant != "hat":
        raise GeometryError("the integrated representation acts through hat translations")
    n = G.dim
    tilde = splitting_from_group(G, "tilde")
    hat = splitting_from_group(G, "hat")
    if check:
        v = sx.is_zero_random(list(covariant_derivative(tilde.connection(), T).comps),
                              constraints=G.domain((0,)), **kw)
        if not v.equal:
            raise NotInvariantError("tensor is not tilde-invariant", v)
    p = point(0, n)
    q = f.inverse()(p)
    A = hat.at(q, p)
    A_inv = hat.at(p, q)
    moved = T.subst(copy_map(n, {0: q}))
    return transform_tensor(moved, A, A_inv)
