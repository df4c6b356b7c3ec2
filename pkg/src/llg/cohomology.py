"""Localized invariant complexes and Chevalley-Eilenberg cochains.

Two independent routes produce exact differentials:

* the horizontal route extends a basis of values at the identity to
  invariant forms, applies the symbolic differential and reads the result
  back at the identity;
* the oracle route applies the Chevalley-Eilenberg formula to structure
  constants.

Cochain bases are coefficient-major: the column for ``(v, I)`` sits at
``v * C(n, k) + index(I)`` with both factors in lexicographic order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from . import symexpr as sx
from .combinat import all_tuples, index_tuples, sort_sign
from .forms import (
    COVECTOR,
    CROSSED,
    VECTOR,
    FormOnT,
    SeedForm,
    box_hat_T,
    dhat,
    exterior_derivative,
    extend_points,
    extend_T,
    is_invariant,
)
from .geometry import GroupLaw, StructureConstants, invariant_frame, splitting_from_group, structure_constants
from .linalg import QMatrix, cohomology_dims, kernel_basis, solve
from .symexpr import Const, F, P, mul

COMPLEXES = ("ilhc", "hat35", "biinv36", "ilhdc-row", "m1-hat", "ce")


class CohomologyError(ValueError):
    pass


# --------------------------------------------------------------------------
# coefficient modules


@dataclass(frozen=True)
class CoefficientModule:
    """The tensor module T^r_s of the Lie algebra (r upper, s lower indices)."""

    label: str
    upper: int
    lower: int

    @classmethod
    def parse(cls, label: str) -> "CoefficientModule":
        s = label.strip()
        if s == "trivial":
            return cls("trivial", 0, 0)
        if s == "adjoint":
            return cls("adjoint", 1, 0)
        if s == "coadjoint":
            return cls("coadjoint", 0, 1)
        if s.startswith("tensor:"):
            try:
                r, q = (int(t) for t in s[len("tensor:"):].split(","))
            except ValueError:
                raise CohomologyError(f"bad tensor module {label!r}; expected tensor:R,S") from None
            if r < 0 or q < 0:
                raise CohomologyError("tensor ranks must be non-negative")
            return cls(f"tensor:{r},{q}", r, q)
        if s.startswith("power:"):
            try:
                m = int(s[len("power:"):])
            except ValueError:
                raise CohomologyError(f"bad power module {label!r}; expected power:M") from None
            if m < 1:
                raise CohomologyError("power:M needs M >= 1")
            return cls(f"power:{m}", 0, m - 1)
        raise CohomologyError(f"unknown coefficient module {label!r}")

    @property
    def slots(self) -> tuple[str, ...]:
        return (COVECTOR,) * self.upper + (VECTOR,) * self.lower

    def basis(self, n: int) -> tuple[tuple[int, ...], ...]:
        return all_tuples(n, self.upper + self.lower)

    def dim(self, n: int) -> int:
        return n ** (self.upper + self.lower)

    def action(self, c: StructureConstants) -> list[QMatrix]:
        """rho(e_i) on the basis, built from ad on upper and -ad^T on lower factors."""
        n = c.dim
        basis = self.basis(n)
        pos = {b: i for i, b in enumerate(basis)}
        mats = []
        for i in range(n):
            M = QMatrix(len(basis), len(basis))
            for col, b in enumerate(basis):
                for slot in range(len(b)):
                    j = b[slot]
                    for k in range(n):
                        if slot < self.upper:
                            coef = c[k, i, j]  # [e_i, e_j] = c^k_ij e_k
                        else:
                            coef = -c[j, i, k]  # (rho(e_i) th^j) = -c^j_ik th^k
                        if coef == 0:
                            continue
                        target = b[:slot] + (k,) + b[slot + 1:]
                        M[pos[target], col] = M[pos[target], col] + coef
            mats.append(M)
        return mats

    def check_representation(self, c: StructureConstants) -> bool:
        rho = self.action(c)
        n = c.dim
        for i, j in product(range(n), repeat=2):
            lhs = QMatrix(rho[0].rows, rho[0].cols)
            for k in range(n):
                if c[k, i, j]:
                    lhs = _axpy(lhs, c[k, i, j], rho[k])
            rhs = _axpy(rho[i] @ rho[j], Fraction(-1), rho[j] @ rho[i])
            if lhs != rhs:
                return False
        return True


def _axpy(a: QMatrix, s: Fraction, b: QMatrix) -> QMatrix:
    out = a.copy()
    for i in range(a.rows):
        for j in range(a.cols):
            if b.data[i][j]:
                out.data[i][j] += s * b.data[i][j]
    return out


# --------------------------------------------------------------------------
# localized complexes


@dataclass
class LocalizedComplex:
    name: str
    coefficients: str
    dims: list[int]
    differentials: list[QMatrix]
    route: str = ""
    group: str = ""
    notes: list[str] = field(default_factory=list)
    top: int | None = None  # report degrees 0..top; the complex is built one degree further

    def betti(self) -> list[int]:
        h = cohomology_dims(self.differentials, self.dims)
        return h if self.top is None else h[: self.top + 1]

    def to_json(self, matrices: bool = False) -> dict:
        out = {
            "complex": self.name,
            "coefficients": self.coefficients,
            "group": self.group,
            "route": self.route,
            "cochain_dims": list(self.dims if self.top is None else self.dims[: self.top + 1]),
            "dims": self.betti(),
        }
        if matrices:
            out["differentials"] = [d.to_json() for d in self.differentials]
        return out


def betti_table(L: LocalizedComplex) -> list[int]:
    return L.betti()


def cochain_labels(n: int, k: int, V: CoefficientModule) -> list[tuple]:
    return [(v, I) for v in V.basis(n) for I in index_tuples(n, k)]


def _cochain_pos(n: int, k: int, V: CoefficientModule) -> dict:
    return {lab: i for i, lab in enumerate(cochain_labels(n, k, V))}


# --------------------------------------------------------------------------
# oracle route


def ce_matrices(c: StructureConstants, V: CoefficientModule, max_k: int | None = None,
                action: bool = True) -> LocalizedComplex:
    """Chevalley-Eilenberg differentials with
    d w(x_0..x_k) = sum_{i<j} (-1)^{i+j} w([x_i,x_j], ...) + sum_i (-1)^i rho(x_i) w(...).

    ``action=False`` replaces rho by zero (dim V copies of trivial coefficients).
    """
    c.check()
    n = c.dim
    max_k = n if max_k is None else min(max_k, n)
    rho = V.action(c) if action else None
    vbasis = V.basis(n)
    vpos = {b: i for i, b in enumerate(vbasis)}
    mats, dims = [], [len(vbasis) * len(index_tuples(n, k)) for k in range(max_k + 1)]
    for k in range(max_k):
        src = _cochain_pos(n, k, V)
        dst = _cochain_pos(n, k + 1, V)
        D = QMatrix(len(dst), len(src))
        for (v, I), col in src.items():
            for J in index_tuples(n, k + 1):
                # bracket terms
                for i in range(k + 1):
                    for j in range(i + 1, k + 1):
                        rest = J[:i] + J[i + 1 : j] + J[j + 1 :]
                        sgn = (-1) ** (i + j)
                        for a in range(n):
                            coef = c[a, J[i], J[j]]
                            if coef == 0:
                                continue
                            s, key = sort_sign((a,) + rest)
                            if s == 0 or key != I:
                                continue
                            row = dst[(v, J)]
                            D[row, col] = D[row, col] + sgn * s * coef
                # action terms
                if rho is None:
                    continue
                for i in range(k + 1):
                    rest = J[:i] + J[i + 1 :]
                    if rest != I:
                        continue
                    sgn = (-1) ** i
                    M = rho[J[i]]
                    vcol = vpos[v]
                    for w in range(M.rows):
                        coef = M[w, vcol]
                        if coef:
                            row = dst[(vbasis[w], J)]
                            D[row, col] = D[row, col] + sgn * coef
        mats.append(D)
    return LocalizedComplex("ce", V.label if action else f"{V.label} (trivial action)", dims, mats, "oracle",
                            c.name)


def ce_invariant_subcomplex(c: StructureConstants, V: CoefficientModule, max_k: int | None = None) -> LocalizedComplex:
    """Cochains annihilated by the induced Lie algebra action, with d restricted."""
    full = ce_matrices(c, V, max_k)
    n = c.dim
    rho = V.action(c)
    vbasis = V.basis(n)
    vpos = {b: i for i, b in enumerate(vbasis)}
    bases = []
    for k in range(len(full.dims)):
        pos = _cochain_pos(n, k, V)
        rows = []
        for x in range(n):
            # (theta_x w)(e_I) = rho(x) w(e_I) - sum_m w(.., [x, e_{i_m}], ..)
            T = QMatrix(len(pos), len(pos))
            for (v, I), col in pos.items():
                M = rho[x]
                for w in range(M.rows):
                    if M[w, vpos[v]]:
                        r = pos[(vbasis[w], I)]
                        T[r, col] = T[r, col] + M[w, vpos[v]]
                # w = v (x) th^I; (w o ad_x)(e_J) picks J with [x, e_{j_m}] hitting I
                for J in index_tuples(n, k):
                    for m in range(k):
                        for a in range(n):
                            coef = c[a, x, J[m]]
                            if coef == 0:
                                continue
                            s, key = sort_sign(J[:m] + (a,) + J[m + 1 :])
                            if s == 0 or key != I:
                                continue
                            r = pos[(v, J)]
                            T[r, col] = T[r, col] - s * coef
            rows.extend(T.data)
        bases.append(_basis_matrix(kernel_basis(QMatrix(len(rows), len(pos), rows)) if rows else [], len(pos)))
    return _restrict(full, bases, "ce-invariant", "oracle")


def _basis_matrix(vectors: Sequence[Sequence[Fraction]], dim: int) -> QMatrix:
    return QMatrix.from_columns([list(v) for v in vectors], dim)


def _restrict(full: LocalizedComplex, bases: list[QMatrix], name: str, route: str) -> LocalizedComplex:
    mats = []
    for k, D in enumerate(full.differentials):
        B0, B1 = bases[k], bases[k + 1]
        img = D @ B0
        if B0.cols == 0:
            mats.append(QMatrix(B1.cols, 0))
            continue
        if B1.cols == 0:
            if not img.is_zero():
                raise CohomologyError("differential leaves the subcomplex")
            mats.append(QMatrix(0, B0.cols))
            continue
        try:
            mats.append(solve(B1, img))
        except ValueError as exc:
            raise CohomologyError(f"differential leaves the subcomplex in degree {k}") from exc
    return LocalizedComplex(name, full.coefficients, [b.cols for b in bases], mats, route, full.group)


# --------------------------------------------------------------------------
# horizontal route


def _unit_fiber(slots: Sequence[str], w: tuple[int, ...], n: int) -> dict:
    vals = {}
    for s in range(len(slots)):
        for a in range(n):
            vals[F(s, a + 1)] = Fraction(int(a == w[s]))
    return vals


def _seed_T(n: int, k: int, V: CoefficientModule, v: tuple, I: tuple) -> SeedForm:
    mono = mul(*(sx.Var(F(s, v[s] + 1)) for s in range(len(v)))) if v else Const(1)
    return SeedForm(n, k, {I: mono})


def _read_at(form: FormOnT, V: CoefficientModule, point: Sequence[Fraction], pos: dict) -> list[Fraction]:
    n = form.dim
    col = [Fraction(0)] * len(pos)
    base = {P(0, i + 1): Fraction(point[i]) for i in range(n)}
    for w in V.basis(n):
        vals = dict(base)
        vals.update(_unit_fiber(V.slots, w, n))
        ev = sx.Evaluator(vals)
        for J in index_tuples(n, form.degree):
            col[pos[(w, J)]] = ev(form.comps[J])
    return col


def group_constants(G: GroupLaw) -> StructureConstants:
    """Structure constants of the tilde frame based at the identity."""
    St = splitting_from_group(G, "tilde")
    sc = structure_constants(invariant_frame(St, G.identity), G.identity)
    return StructureConstants(sc.dim, sc.c, G.name)


def _extensions(G: GroupLaw, variant: str, V: CoefficientModule, k: int) -> list[FormOnT]:
    n = G.dim
    S = splitting_from_group(G, variant)
    return [extend_T(S, _seed_T(n, k, V, v, I), V.slots, G.identity) for v, I in cochain_labels(n, k, V)]


def horizontal_matrices(G: GroupLaw, V: CoefficientModule, variant: str = "tilde",
                        max_k: int | None = None) -> LocalizedComplex:
    """d-hat on invariant linear forms, localized at the identity.

    ``variant="tilde"`` gives the invariant linear horizontal complex,
    ``variant="hat"`` its hat-invariant counterpart.
    """
    n = G.dim
    max_k = n if max_k is None else min(max_k, n)
    dims = [V.dim(n) * len(index_tuples(n, k)) for k in range(max_k + 1)]
    mats = []
    for k in range(max_k):
        pos = _cochain_pos(n, k + 1, V)
        cols = [_read_at(dhat(G, f), V, G.identity, pos) for f in _extensions(G, variant, V, k)]
        mats.append(QMatrix.from_columns(cols, len(pos)))
    name = "ilhc" if variant == "tilde" else "hat35"
    return LocalizedComplex(name, V.label, dims, mats, "horizontal", G.name)


def ilhc_matrices(G: GroupLaw, V: CoefficientModule, max_k: int | None = None) -> LocalizedComplex:
    return horizontal_matrices(G, V, "tilde", max_k)


def hat35_matrices(G: GroupLaw, V: CoefficientModule, max_k: int | None = None) -> LocalizedComplex:
    return horizontal_matrices(G, V, "hat", max_k)


def _sample_bases(G: GroupLaw, count: int, seed: int) -> list[list[Fraction]]:
    n = G.dim
    pts = sx.sample_points([P(0, i) for i in range(1, n + 1)], count, seed, G.domain((0,)))
    return [[pt.values[P(0, i)] for i in range(1, n + 1)] for pt in pts]


def biinvariant_matrices(G: GroupLaw, V: CoefficientModule, max_k: int | None = None, points: int = 4,
                         seed: int = 0, verify_trials: int = 8) -> LocalizedComplex:
    """Tilde-invariant linear forms that are also hat-invariant, with d-hat restricted.

    The hat condition is imposed exactly at a few rational points; every
    kernel vector is then re-checked as a symbolic identity.
    """
    n = G.dim
    full = ilhc_matrices(G, V, max_k)
    samples = [list(G.identity)] + _sample_bases(G, points, seed)
    bases = []
    for k in range(len(full.dims)):
        ext = _extensions(G, "tilde", V, k)
        rows: list[list[Fraction]] = []
        box_pos = {(r, w, I): i for i, (r, w, I) in
                   enumerate((r, w, I) for r in range(n) for w in V.basis(n) for I in index_tuples(n, k))}
        boxes = [box_hat_T(G, f) for f in ext]
        for pt in samples:
            block = [[Fraction(0)] * len(ext) for _ in box_pos]
            for w in V.basis(n):
                vals = {P(0, i + 1): Fraction(pt[i]) for i in range(n)}
                vals.update(_unit_fiber(V.slots, w, n))
                ev = sx.Evaluator(vals)
                for col, b in enumerate(boxes):
                    for (r, I), e in b.items():
                        block[box_pos[(r, w, I)]][col] = ev(e)
            rows.extend(block)
        K = kernel_basis(QMatrix.from_rows(rows, len(ext)))
        for vec in K:
            form = _combine(ext, vec)
            v = is_invariant("hat", G, form, trials=verify_trials, seed=seed)
            if not v.equal:
                raise CohomologyError("sampled hat condition admitted a non-invariant form; raise the point count")
        bases.append(_basis_matrix(K, len(ext)))
    out = _restrict(full, bases, "biinv36", "horizontal")
    out.coefficients = V.label
    return out


def _combine(forms: Sequence[FormOnT], vec: Sequence[Fraction]) -> FormOnT:
    f0 = forms[0]
    comps = {}
    for I in index_tuples(f0.dim, f0.degree):
        comps[I] = sx.add(*(mul(Const(c), f.comps[I]) for c, f in zip(vec, forms) if c))
    return FormOnT(f0.dim, f0.degree, comps, f0.slots)


def m1_hat_matrices(G: GroupLaw, max_k: int | None = None, transport: str = CROSSED) -> LocalizedComplex:
    """Hat-invariant forms on one copy with the exterior derivative."""
    n = G.dim
    max_k = n if max_k is None else min(max_k, n)
    dims = [len(index_tuples(n, k)) for k in range(max_k + 1)]
    mats = []
    for k in range(max_k):
        pos = {I: i for i, I in enumerate(index_tuples(n, k + 1))}
        cols = []
        for I in index_tuples(n, k):
            f = extend_points(G, "hat", SeedForm(n, k, {I: Const(1)}), 1, transport)
            df = exterior_derivative(f)
            ev = sx.Evaluator({P(0, i + 1): Fraction(G.identity[i]) for i in range(n)})
            col = [Fraction(0)] * len(pos)
            for J, e in df.comps.items():
                col[pos[J]] = ev(e)
            cols.append(col)
        mats.append(QMatrix.from_columns(cols, len(pos)))
    return LocalizedComplex("m1-hat", "trivial", dims, mats, "horizontal", G.name)


def localized_complex(G: GroupLaw | None, c: StructureConstants | None, complex_name: str, V: CoefficientModule,
                      max_k: int | None = None, transport: str = CROSSED) -> tuple[LocalizedComplex, LocalizedComplex]:
    """The horizontal complex and its oracle for the requested family.

    With ``max_k`` the complexes are built through degree max_k + 1 so that
    the top reported degree still sees its outgoing differential.
    """
    pair = _localized(G, c, complex_name, V, None if max_k is None else max_k + 1, transport)
    if max_k is not None:
        for L in pair:
            L.top = max_k
    return pair


def _localized(G, c, complex_name, V, max_k, transport):
    if complex_name == "ce":
        if c is None:
            c = group_constants(G)
        ce = ce_matrices(c, V, max_k)
        return ce, ce
    if G is None:
        raise CohomologyError(f"complex {complex_name!r} needs a group law; use --complex ce for an algebra")
    c = group_constants(G)
    if complex_name == "ilhc":
        return ilhc_matrices(G, V, max_k), ce_matrices(c, V, max_k)
    if complex_name == "ilhdc-row":
        if not V.label.startswith("power:"):
            raise CohomologyError("ilhdc-row takes power:M coefficients, M being the number of copies")
        h = ilhc_matrices(G, V, max_k)
        h.name = f"ilhdc-row:{V.label.split(':')[1]}"
        return h, ce_matrices(c, V, max_k)
    if complex_name == "hat35":
        return hat35_matrices(G, V, max_k), ce_matrices(c.negated(), V, max_k, action=False)
    if complex_name == "biinv36":
        return biinvariant_matrices(G, V, max_k), ce_invariant_subcomplex(c, V, max_k)
    if complex_name == "m1-hat":
        # crossed carries right-invariant coframes, whose brackets flip sign
        oracle_c = c.negated() if transport == CROSSED else c
        return m1_hat_matrices(G, max_k, transport), ce_matrices(oracle_c, CoefficientModule.parse("trivial"), max_k)
    raise CohomologyError(f"unknown complex {complex_name!r}")


def markdown_table(rows: Sequence[dict]) -> str:
    width = max((len(r["dims"]) for r in rows), default=0)
    head = "| complex | coefficients | route | " + " | ".join(f"H^{k}" for k in range(width)) + " |"
    sep = "|" + "---|" * (3 + width)
    lines = [head, sep]
    for r in rows:
        cells = [str(v) for v in r["dims"]] + [""] * (width - len(r["dims"]))
        lines.append(f"| {r['complex']} | {r['coefficients']} | {r['route']} | " + " | ".join(cells) + " |")
    return "\n".join(lines)
