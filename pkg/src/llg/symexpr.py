"""Symbolic scalar expressions over blocks of coordinate variables.

Expressions are immutable, hash-consed trees built from rational constants,
variable references, sums, products, integer powers, quotients and a small
set of elementary functions.  Only trivial rewrites are applied at
construction time; identities are decided by randomized exact evaluation
(see :func:`equiv_random`).
"""

from __future__ import annotations

import math
import random
import re
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

POINT_NAMES = ("x", "y", "z", "w", "u", "v")
FIBER_NAMES = ("xi", "eta", "zeta", "chi", "psi")
PARAM_NAME = "t"
FUNCTIONS = ("exp", "log", "sin", "cos")

DEFAULT_TRIALS = 32
DEFAULT_BOX = 7
DEFAULT_MAX_DEN = 16
DEFAULT_FLOAT_TOL = 1e-9

Number = Union[int, Fraction]


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


class DomainError(ExprError):
    """Evaluation left the domain (zero denominator, log of non-positive, ...)."""


class TranscendentalError(ExprError):
    """Exact evaluation was requested for an expression with elementary functions."""


class VarRef(NamedTuple):
    """A coordinate symbol.

    ``kind`` is ``"point"`` (``copy`` = point copy, 0 for x, 1 for y, ...),
    ``"fiber"`` (``copy`` = fiber slot, 0 for xi, 1 for eta, ...) or
    ``"param"`` (the deformation parameter t; ``copy`` and ``comp`` are 0).
    ``comp`` is 1-based.
    """

    kind: str
    copy: int
    comp: int

    def __str__(self) -> str:
        if self.kind == "point":
            return f"{POINT_NAMES[self.copy]}{self.comp}"
        if self.kind == "fiber":
            return f"{FIBER_NAMES[self.copy]}{self.comp}"
        return PARAM_NAME


def P(copy: int, comp: int) -> VarRef:
    return VarRef("point", copy, comp)


def F(slot: int, comp: int) -> VarRef:
    return VarRef("fiber", slot, comp)


T_PARAM = VarRef("param", 0, 0)


def _var_order(v: VarRef):
    return ({"point": 0, "fiber": 1, "param": 2}[v.kind], v.copy, v.comp)


# --------------------------------------------------------------------------
# Nodes

_INTERN: dict = {}
_INTERN_LOCK = threading.Lock()


class Expr:
    __slots__ = ("_vars", "_has_func", "__weakref__")

    tag = "?"

    # arithmetic ------------------------------------------------------------
    def __add__(self, other) -> "Expr":
        return add(self, as_expr(other))

    def __radd__(self, other) -> "Expr":
        return add(as_expr(other), self)

    def __sub__(self, other) -> "Expr":
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other) -> "Expr":
        return add(as_expr(other), neg(self))

    def __mul__(self, other) -> "Expr":
        return mul(self, as_expr(other))

    def __rmul__(self, other) -> "Expr":
        return mul(as_expr(other), self)

    def __truediv__(self, other) -> "Expr":
        return div(self, as_expr(other))

    def __rtruediv__(self, other) -> "Expr":
        return div(as_expr(other), self)

    def __pow__(self, k: int) -> "Expr":
        return power(self, k)

    def __neg__(self) -> "Expr":
        return neg(self)

    def __pos__(self) -> "Expr":
        return self

    # structure ---------------------------------------------------------------
    @property
    def children(self) -> tuple["Expr", ...]:
        return ()

    @property
    def free_vars(self) -> frozenset:
        try:
            return self._vars
        except AttributeError:
            pass
        acc = set()
        for c in self.children:
            acc |= c.free_vars
        fv = frozenset(acc)
        object.__setattr__(self, "_vars", fv)
        return fv

    @property
    def has_func(self) -> bool:
        try:
            return self._has_func
        except AttributeError:
            pass
        hf = any(c.has_func for c in self.children)
        object.__setattr__(self, "_has_func", hf)
        return hf

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0

    def __str__(self) -> str:
        return to_string(self)

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"


def _intern(cls, key, *args):
    node = _INTERN.get(key)
    if node is not None:
        return node
    node = object.__new__(cls)
    cls._init(node, *args)
    with _INTERN_LOCK:
        return _INTERN.setdefault(key, node)


class Const(Expr):
    __slots__ = ("value",)
    tag = "const"

    def __new__(cls, value: Number):
        value = Fraction(value)
        return _intern(cls, ("c", value), value)

    @staticmethod
    def _init(node, value):
        node.value = value
        node._vars = frozenset()
        node._has_func = False


class Var(Expr):
    __slots__ = ("ref",)
    tag = "var"

    def __new__(cls, ref: VarRef):
        return _intern(cls, ("v", ref), ref)

    @staticmethod
    def _init(node, ref):
        node.ref = ref
        node._vars = frozenset((ref,))
        node._has_func = False


class Add(Expr):
    __slots__ = ("terms",)
    tag = "add"

    def __new__(cls, terms: tuple):
        return _intern(cls, ("+",) + tuple(id(t) for t in terms), terms)

    @staticmethod
    def _init(node, terms):
        node.terms = terms

    @property
    def children(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)
    tag = "mul"

    def __new__(cls, factors: tuple):
        return _intern(cls, ("*",) + tuple(id(f) for f in factors), factors)

    @staticmethod
    def _init(node, factors):
        node.factors = factors

    @property
    def children(self):
        return self.factors


class Pow(Expr):
    __slots__ = ("base", "exp")
    tag = "pow"

    def __new__(cls, base: Expr, exp: int):
        return _intern(cls, ("^", id(base), exp), base, exp)

    @staticmethod
    def _init(node, base, exp):
        node.base = base
        node.exp = exp

    @property
    def children(self):
        return (self.base,)


class Div(Expr):
    """Quotient; the denominator is a recorded nonzero-domain constraint."""

    __slots__ = ("num", "den")
    tag = "div"

    def __new__(cls, num: Expr, den: Expr):
        return _intern(cls, ("/", id(num), id(den)), num, den)

    @staticmethod
    def _init(node, num, den):
        node.num = num
        node.den = den

    @property
    def children(self):
        return (self.num, self.den)


class Func(Expr):
    __slots__ = ("name", "arg")
    tag = "func"

    def __new__(cls, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}")
        return _intern(cls, ("f", name, id(arg)), name, arg)

    @staticmethod
    def _init(node, name, arg):
        node.name = name
        node.arg = arg
        node._has_func = True

    @property
    def children(self):
        return (self.arg,)


ZERO = Const(0)
ONE = Const(1)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Const(v)
    if isinstance(v, VarRef):
        return Var(v)
    if isinstance(v, str):
        return parse(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


# --------------------------------------------------------------------------
# Smart constructors (trivial rewrites only)


def add(*items: Expr) -> Expr:
    terms = []
    const = Fraction(0)
    for it in items:
        if isinstance(it, Add):
            seq = it.terms
        else:
            seq = (it,)
        for t in seq:
            if isinstance(t, Const):
                const += t.value
            else:
                terms.append(t)
    if const != 0:
        terms.insert(0, Const(const))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def sum_exprs(items: Iterable[Expr]) -> Expr:
    return add(*items)


def mul(*items: Expr) -> Expr:
    factors = []
    const = Fraction(1)
    for it in items:
        seq = it.factors if isinstance(it, Mul) else (it,)
        for f in seq:
            if isinstance(f, Const):
                if f.value == 0:
                    return ZERO
                const *= f.value
            else:
                factors.append(f)
    if not factors:
        return Const(const)
    if const != 1:
        factors.insert(0, Const(const))
    if len(factors) == 1:
        return factors[0]
    return Mul(tuple(factors))


def neg(e: Expr) -> Expr:
    return mul(Const(-1), e)


def power(base: Expr, k: int) -> Expr:
    if not isinstance(k, int):
        raise ExprError("only integer powers are supported")
    if k == 0:
        return ONE
    if k == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and k < 0:
            raise DomainError("zero raised to a negative power")
        return Const(base.value**k)
    if isinstance(base, Pow):
        return power(base.base, base.exp * k)
    return Pow(base, k)


def div(num: Expr, den: Expr) -> Expr:
    if isinstance(den, Const):
        if den.value == 0:
            raise DomainError("division by the constant zero")
        return mul(Const(1 / den.value), num)
    if num.is_zero():
        return ZERO
    return Div(num, den)


def func(name: str, arg: Expr) -> Expr:
    if isinstance(arg, Const) and arg.value == 0:
        if name in ("sin",):
            return ZERO
        if name in ("exp", "cos"):
            return ONE
    if name == "log" and isinstance(arg, Const) and arg.value == 1:
        return ZERO
    return Func(name, arg)


def var(ref: VarRef) -> Expr:
    return Var(ref)


def point_vars(copy: int, n: int) -> list[Expr]:
    return [Var(P(copy, i)) for i in range(1, n + 1)]


def fiber_vars(slot: int, n: int) -> list[Expr]:
    return [Var(F(slot, i)) for i in range(1, n + 1)]


def consts(values: Sequence[Number]) -> list[Expr]:
    return [Const(v) for v in values]


# --------------------------------------------------------------------------
# Differentiation and substitution

_DIFF_CACHE: dict = {}


def diff(e: Expr, v: VarRef) -> Expr:
    """Exact partial derivative of ``e`` with respect to the variable ``v``."""
    if v not in e.free_vars:
        return ZERO
    key = (id(e), v)
    hit = _DIFF_CACHE.get(key)
    if hit is not None:
        return hit
    if isinstance(e, Var):
        out = ONE if e.ref == v else ZERO
    elif isinstance(e, Add):
        out = add(*(diff(t, v) for t in e.terms))
    elif isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = diff(f, v)
            if df.is_zero():
                continue
            parts.append(mul(*fs[:i], df, *fs[i + 1 :]))
        out = add(*parts)
    elif isinstance(e, Pow):
        out = mul(Const(e.exp), power(e.base, e.exp - 1), diff(e.base, v))
    elif isinstance(e, Div):
        dn = diff(e.num, v)
        dd = diff(e.den, v)
        first = div(dn, e.den)
        if dd.is_zero():
            out = first
        else:
            out = add(first, neg(div(mul(e.num, dd), power(e.den, 2))))
    elif isinstance(e, Func):
        inner = diff(e.arg, v)
        if e.name == "exp":
            outer = e
        elif e.name == "log":
            outer = div(ONE, e.arg)
        elif e.name == "sin":
            outer = func("cos", e.arg)
        else:
            outer = neg(func("sin", e.arg))
        out = mul(outer, inner)
    else:  # Const
        out = ZERO
    _DIFF_CACHE[key] = out
    return out


def subst(e: Expr, mapping: Mapping[VarRef, Expr]) -> Expr:
    """Simultaneous substitution of variables by expressions."""
    if not mapping:
        return e
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    keys = frozenset(mapping)
    memo: dict = {}

    def go(node: Expr) -> Expr:
        if not (node.free_vars & keys):
            return node
        nid = id(node)
        if nid in memo:
            return memo[nid]
        if isinstance(node, Var):
            out = mapping[node.ref]
        elif isinstance(node, Add):
            out = add(*(go(t) for t in node.terms))
        elif isinstance(node, Mul):
            out = mul(*(go(f) for f in node.factors))
        elif isinstance(node, Pow):
            out = power(go(node.base), node.exp)
        elif isinstance(node, Div):
            out = div(go(node.num), go(node.den))
        elif isinstance(node, Func):
            out = func(node.name, go(node.arg))
        else:
            out = node
        memo[nid] = out
        return out

    return go(e)


def subst_many(exprs: Iterable[Expr], mapping: Mapping[VarRef, Expr]) -> list[Expr]:
    return [subst(e, mapping) for e in exprs]


def relabel_points(e: Expr, copy_map: Mapping[int, int], n: int) -> Expr:
    """Rename point copies (``{old_copy: new_copy}``)."""
    mapping = {}
    for old, new in copy_map.items():
        if old == new:
            continue
        for i in range(1, n + 1):
            mapping[P(old, i)] = Var(P(new, i))
    return subst(e, mapping)


def directional(e: Expr, copy: int, direction: Sequence[Expr], n: int) -> Expr:
    """Sum over a of direction[a] * d e / d(copy)^a."""
    return add(*(mul(direction[a], diff(e, P(copy, a + 1))) for a in range(n)))


def euler_residual(e: Expr, slot: int, n: int, degree: int = 1) -> Expr:
    """Residual of the Euler homogeneity relation in a fiber slot."""
    s = add(*(mul(Var(F(slot, a)), diff(e, F(slot, a))) for a in range(1, n + 1)))
    return add(s, neg(mul(Const(degree), e)))


def node_count(e: Expr) -> int:
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.extend(node.children)
    return len(seen)


# --------------------------------------------------------------------------
# Evaluation


@dataclass
class SamplePoint:
    """Assignment of values to variables, plus the domain witness flags."""

    values: dict
    mode: str = "exact"
    flags: dict = field(default_factory=dict)

    def as_strings(self) -> dict:
        return {str(k): _fmt_value(v) for k, v in sorted(self.values.items(), key=lambda kv: _var_order(kv[0]))}


def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


class Evaluator:
    """Evaluates many expressions at one point, sharing a memo across them."""

    def __init__(self, values: Mapping[VarRef, Number | float], mode: str = "exact"):
        if mode not in ("exact", "float"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        if mode == "exact":
            self.values = {k: Fraction(v) for k, v in values.items()}
        else:
            self.values = {k: float(v) for k, v in values.items()}
        self.memo: dict = {}

    def __call__(self, e: Expr):
        return self._ev(e)

    def _ev(self, node: Expr):
        nid = id(node)
        memo = self.memo
        if nid in memo:
            return memo[nid]
        if isinstance(node, Const):
            out = node.value if self.mode == "exact" else float(node.value)
        elif isinstance(node, Var):
            try:
                out = self.values[node.ref]
            except KeyError:
                raise ExprError(f"no value for variable {node.ref}") from None
        elif isinstance(node, Add):
            out = 0
            for t in node.terms:
                out += self._ev(t)
        elif isinstance(node, Mul):
            out = 1
            for f in node.factors:
                out *= self._ev(f)
        elif isinstance(node, Pow):
            b = self._ev(node.base)
            if b == 0 and node.exp < 0:
                raise DomainError("zero raised to a negative power")
            out = b**node.exp
        elif isinstance(node, Div):
            d = self._ev(node.den)
            if d == 0:
                raise DomainError(f"denominator {to_string(node.den)} vanishes")
            out = self._ev(node.num) / d
        elif isinstance(node, Func):
            if self.mode == "exact":
                raise TranscendentalError(f"{node.name} cannot be evaluated exactly")
            a = self._ev(node.arg)
            if node.name == "exp":
                out = math.exp(a)
            elif node.name == "log":
                if a <= 0:
                    raise DomainError("log of a non-positive number")
                out = math.log(a)
            elif node.name == "sin":
                out = math.sin(a)
            else:
                out = math.cos(a)
        else:
            raise ExprError(f"unknown node {node!r}")
        memo[nid] = out
        return out

    def magnitude(self, e: Expr) -> float:
        """Value of ``e`` with every sum replaced by a sum of absolute values.

        It bounds the size of the intermediate terms, which is the right
        scale for a float residual that cancels to zero.
        """
        if not hasattr(self, "_mag"):
            self._mag: dict = {}
        return self._m(e)

    def _m(self, node: Expr) -> float:
        nid = id(node)
        if nid in self._mag:
            return self._mag[nid]
        if isinstance(node, Add):
            out = sum(self._m(t) for t in node.terms)
        elif isinstance(node, Mul):
            out = 1.0
            for f in node.factors:
                out *= self._m(f)
        elif isinstance(node, Pow):
            out = self._m(node.base) ** node.exp if node.exp >= 0 else abs(float(self._ev(node)))
        elif isinstance(node, Div):
            out = self._m(node.num) / abs(float(self._ev(node.den)))
        else:
            out = abs(float(self._ev(node)))
        self._mag[nid] = out
        return out


def evaluate(e: Expr, point: SamplePoint | Mapping, mode: str | None = None):
    """Evaluate ``e`` exactly (Fraction) or in floating point."""
    if isinstance(point, SamplePoint):
        values, mode = point.values, mode or point.mode
    else:
        values, mode = point, mode or "exact"
    if mode == "exact" and e.has_func:
        raise TranscendentalError("exact evaluation of a transcendental expression")
    return Evaluator(values, mode)(e)


# --------------------------------------------------------------------------
# Randomized identity testing


@dataclass
class Verdict:
    """Outcome of a randomized identity test.

    ``equal`` is True when every trial agreed.  On failure ``witness`` holds
    the sample point and ``index`` the first disagreeing component.
    """

    equal: bool
    trials: int
    seed: int
    mode: str
    witness: SamplePoint | None = None
    index: int | None = None
    lhs: object = None
    rhs: object = None
    rejected: int = 0

    def __bool__(self) -> bool:
        return self.equal

    def to_dict(self) -> dict:
        out = {"equal": self.equal, "trials": self.trials, "seed": self.seed, "mode": self.mode}
        if not self.equal and self.witness is not None:
            out["witness"] = self.witness.as_strings()
            out["component"] = self.index
            out["lhs"] = _fmt_value(self.lhs)
            out["rhs"] = _fmt_value(self.rhs)
        return out


def random_rational(rng: random.Random, box: int = DEFAULT_BOX, max_den: int = DEFAULT_MAX_DEN) -> Fraction:
    q = rng.randint(1, max_den)
    p = rng.randint(-box * q, box * q)
    return Fraction(p, q)


def _as_list(e) -> list[Expr]:
    if isinstance(e, Expr):
        return [e]
    return [as_expr(x) for x in e]


def _close(a: float, b: float, tol: float, scale: float = 0.0) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b), scale)


def sample_points(
    variables: Iterable[VarRef],
    count: int,
    seed: int = 0,
    constraints: Sequence[Expr] = (),
    mode: str = "exact",
    box: int = DEFAULT_BOX,
    max_den: int = DEFAULT_MAX_DEN,
    max_attempts: int | None = None,
):
    """Yield ``count`` sample points avoiding the zero sets of ``constraints``."""
    variables = sorted(set(variables), key=_var_order)
    rng = random.Random(seed)
    attempts = 0
    produced = 0
    limit = max_attempts or 50 * count + 100
    while produced < count:
        attempts += 1
        if attempts > limit:
            raise DomainError("could not find sample points satisfying the domain constraints")
        vals = {v: random_rational(rng, box, max_den) for v in variables}
        if mode == "float":
            vals = {k: float(v) for k, v in vals.items()}
        ev = Evaluator(vals, mode)
        try:
            if any(ev(c) == 0 for c in constraints):
                continue
        except DomainError:
            continue
        produced += 1
        yield SamplePoint(vals, mode, {"constraints": len(constraints)})


def equiv_random(
    e1,
    e2,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    constraints: Sequence[Expr] = (),
    mode: str = "exact",
    tol: float = DEFAULT_FLOAT_TOL,
    extra_vars: Iterable[VarRef] = (),
) -> Verdict:
    """Randomized identity test of ``e1`` and ``e2`` (single or componentwise).

    Exact mode samples rational points from the box [-7, 7] with denominators
    at most 16 and compares exactly.  Points where a constraint or a
    denominator vanishes are rejected and redrawn.  Deterministic for a
    fixed seed.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    lhs = _as_list(e1)
    rhs = _as_list(e2)
    if len(lhs) != len(rhs):
        raise ValueError("component count mismatch")
    pairs = [(a, b) for a, b in zip(lhs, rhs) if a is not b]
    if mode == "exact" and any(a.has_func or b.has_func for a, b in pairs):
        raise TranscendentalError("transcendental expressions require float mode")
    if not pairs:
        return Verdict(True, trials, seed, mode)
    variables = set(extra_vars)
    for a, b in pairs:
        variables |= a.free_vars | b.free_vars
    for c in constraints:
        variables |= c.free_vars
    full_index = [i for i, (a, b) in enumerate(zip(lhs, rhs)) if a is not b]
    done = 0
    rejected = 0
    gen = sample_points(variables, 10**9, seed, constraints, mode)
    while done < trials:
        pt = next(gen)
        ev = Evaluator(pt.values, mode)
        try:
            vals = [(ev(a), ev(b)) for a, b in pairs]
        except DomainError:
            rejected += 1
            if rejected > 50 * trials + 100:
                raise
            continue
        done += 1
        for k, (va, vb) in enumerate(vals):
            if mode == "exact":
                ok = va == vb
            else:
                a, b = pairs[k]
                ok = _close(va, vb, tol, max(ev.magnitude(a), ev.magnitude(b)))
            if not ok:
                return Verdict(False, done, seed, mode, pt, full_index[k], va, vb, rejected)
    return Verdict(True, trials, seed, mode, rejected=rejected)


def is_zero_random(exprs, **kw) -> Verdict:
    lst = _as_list(exprs)
    return equiv_random(lst, [ZERO] * len(lst), **kw)


# --------------------------------------------------------------------------
# Printing


_PREC = {"add": 1, "mul": 2, "div": 2, "neg": 2, "pow": 4, "atom": 5}


def _const_str(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def to_string(e: Expr) -> str:
    s, _ = _fmt(e)
    return s


def _fmt(e: Expr) -> tuple[str, int]:
    if isinstance(e, Const):
        v = e.value
        if v < 0:
            return "-" + _wrap_const(-v), _PREC["neg"]
        if v.denominator != 1:
            return _const_str(v), _PREC["div"]
        return _const_str(v), _PREC["atom"]
    if isinstance(e, Var):
        return str(e.ref), _PREC["atom"]
    if isinstance(e, Add):
        out = ""
        for i, t in enumerate(e.terms):
            s, p = _fmt(t)
            if i == 0:
                out = s
            elif s.startswith("-"):
                inner = s[1:]
                out += " - " + inner
            else:
                out += " + " + s
        return out, _PREC["add"]
    if isinstance(e, Mul):
        fs = list(e.factors)
        sign = ""
        if isinstance(fs[0], Const) and fs[0].value < 0:
            sign = "-"
            c = -fs[0].value
            fs = ([Const(c)] if c != 1 else []) + fs[1:]
        parts = []
        for f in fs:
            s, p = _fmt(f)
            if p < _PREC["mul"] or (isinstance(f, Const) and f.value.denominator != 1) or s.startswith("-"):
                s = f"({s})"
            parts.append(s)
        return sign + "*".join(parts), _PREC["neg"] if sign else _PREC["mul"]
    if isinstance(e, Pow):
        s, p = _fmt(e.base)
        if p <= _PREC["pow"] and not isinstance(e.base, (Var, Func)):
            s = f"({s})"
        ex = str(e.exp) if e.exp >= 0 else f"({e.exp})"
        return f"{s}^{ex}", _PREC["pow"]
    if isinstance(e, Div):
        a, pa = _fmt(e.num)
        b, pb = _fmt(e.den)
        if pa < _PREC["mul"] or a.startswith("-"):
            a = f"({a})"
        if pb <= _PREC["mul"] or b.startswith("-"):
            b = f"({b})"
        return f"{a}/{b}", _PREC["div"]
    if isinstance(e, Func):
        s, _ = _fmt(e.arg)
        return f"{e.name}({s})", _PREC["atom"]
    raise ExprError(f"cannot print {type(e).__name__}")


def _wrap_const(v: Fraction) -> str:
    return _const_str(v) if v.denominator == 1 else f"({_const_str(v)})"


# --------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_]*)(?P<idx>\d*)|(?P<op>[-+*/^(),]))")


def _tokenize(text: str):
    pos = 0
    out = []
    text_len = len(text)
    while pos < text_len:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError("unexpected character", text, pos)
        start = m.start(m.lastgroup) if m.lastgroup else pos
        if m.group("num") is not None:
            out.append(("num", int(m.group("num")), start))
        elif m.group("name") is not None:
            out.append(("name", (m.group("name"), m.group("idx")), start))
        else:
            out.append(("op", m.group("op"), start))
        pos = m.end()
    out.append(("end", None, text_len))
    return out


class _Parser:
    def __init__(self, text: str, dim: int | None, copies: int | None, slots: int | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.dim = dim
        self.copies = copies
        self.slots = slots

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise ParseError(f"expected {op!r}", self.text, tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError("unexpected token", self.text, tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "+-":
                self.take()
                rhs = self.term()
                e = add(e, rhs) if tok[1] == "+" else add(e, neg(rhs))
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            tok = self.peek()
            if tok[0] == "op" and tok[1] in "*/":
                self.take()
                rhs = self.unary()
                if tok[1] == "*":
                    e = mul(e, rhs)
                else:
                    try:
                        e = div(e, rhs)
                    except DomainError as exc:
                        raise ParseError(str(exc), self.text, tok[2]) from None
            else:
                return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            inner = self.unary()
            return neg(inner) if tok[1] == "-" else inner
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            sign = 1
            t2 = self.peek()
            if t2[0] == "op" and t2[1] == "(":
                # allow x^(-2)
                self.take()
                if self.peek()[0] == "op" and self.peek()[1] == "-":
                    self.take()
                    sign = -1
                num = self.take()
                if num[0] != "num":
                    raise ParseError("integer exponent expected", self.text, num[2])
                self.expect(")")
            else:
                if t2[0] == "op" and t2[1] == "-":
                    self.take()
                    sign = -1
                num = self.take()
                if num[0] != "num":
                    raise ParseError("integer exponent expected", self.text, num[2])
            try:
                return power(base, sign * num[1])
            except DomainError as exc:
                raise ParseError(str(exc), self.text, num[2]) from None
        return base

    def atom(self) -> Expr:
        tok = self.take()
        kind, val, pos = tok
        if kind == "num":
            return Const(val)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            name, idx = val
            if name in FUNCTIONS and idx == "":
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(name, arg)
            return Var(self.resolve(name, idx, pos))
        raise ParseError("unexpected token", self.text, pos)

    def resolve(self, name: str, idx: str, pos: int) -> VarRef:
        if name == PARAM_NAME and idx == "":
            return T_PARAM
        if idx == "":
            raise ParseError(f"unknown variable {name!r}", self.text, pos)
        comp = int(idx)
        if name in POINT_NAMES:
            ref = P(POINT_NAMES.index(name), comp)
            if self.copies is not None and ref.copy >= self.copies:
                raise ParseError(f"variable {name}{idx} refers to copy {ref.copy} but only {self.copies} declared", self.text, pos)
        elif name in FIBER_NAMES:
            ref = F(FIBER_NAMES.index(name), comp)
            if self.slots is not None and ref.copy >= self.slots:
                raise ParseError(f"fiber variable {name}{idx} not declared", self.text, pos)
        else:
            raise ParseError(f"unknown variable {name}{idx}", self.text, pos)
        if comp < 1 or (self.dim is not None and comp > self.dim):
            raise ParseError(f"component {comp} out of range 1..{self.dim}", self.text, pos)
        return ref


def parse(text: str, dim: int | None = None, copies: int | None = None, slots: int | None = None) -> Expr:
    """Parse an expression string.

    Identifiers: ``x1..xn`` (copy 0), ``y``, ``z``, ``w`` (copies 1..3),
    ``xi1..xin`` (fiber), ``t`` (parameter); ``+ - * / ^``, integer literals
    (so ``p/q`` is a rational constant) and ``exp``, ``log``, ``sin``, ``cos``.
    """
    return _Parser(text, dim, copies, slots).parse()
