"""Built-in group laws and Lie algebras."""

from __future__ import annotations

from fractions import Fraction

from .geometry import GroupLaw, StructureConstants
from .symexpr import parse

BUILTIN_NAMES = ("abelian:n", "heisenberg3", "affine2", "uppertriangular3", "sl2-constants")


def _law(name, dim, mult, inv, identity, constraints=()):
    return GroupLaw(
        name=name,
        dim=dim,
        mult=tuple(parse(s, dim, copies=2) for s in mult),
        inv=tuple(parse(s, dim, copies=1) for s in inv),
        identity=tuple(Fraction(v) for v in identity),
        constraints=tuple(parse(s, dim, copies=1) for s in constraints),
    )


def abelian(n: int) -> GroupLaw:
    if n < 1:
        raise ValueError("abelian group needs n >= 1")
    return _law(
        f"abelian:{n}",
        n,
        [f"x{i} + y{i}" for i in range(1, n + 1)],
        [f"-x{i}" for i in range(1, n + 1)],
        [0] * n,
    )


def heisenberg3() -> GroupLaw:
    return _law(
        "heisenberg3",
        3,
        ["x1 + y1", "x2 + y2", "x3 + y3 + x1*y2"],
        ["-x1", "-x2", "-x3 + x1*x2"],
        [0, 0, 0],
    )


def affine2() -> GroupLaw:
    # (a, b) acting by t -> a t + b
    return _law("affine2", 2, ["x1*y1", "x1*y2 + x2"], ["1/x1", "-x2/x1"], [1, 0], ["x1"])


def uppertriangular3() -> GroupLaw:
    # invertible upper triangular 2x2 matrices [[x1, x2], [0, x3]]
    return _law(
        "uppertriangular3",
        3,
        ["x1*y1", "x1*y2 + x2*y3", "x3*y3"],
        ["1/x1", "-x2/(x1*x3)", "1/x3"],
        [1, 0, 1],
        ["x1", "x3"],
    )


def sl2_constants() -> StructureConstants:
    # basis (h, e, f): [h,e] = 2e, [h,f] = -2f, [e,f] = h
    sc = StructureConstants.from_brackets(3, [(1, 2, 2, 2), (1, 3, 3, -2), (2, 3, 1, 1)], "sl2-constants")
    sc.check()
    return sc


def builtin(name: str):
    """Resolve a builtin name to a GroupLaw or StructureConstants."""
    if name.startswith("abelian:"):
        try:
            n = int(name.split(":", 1)[1])
        except ValueError:
            raise KeyError(f"bad abelian dimension in {name!r}") from None
        return abelian(n)
    table = {
        "heisenberg3": heisenberg3,
        "affine2": affine2,
        "uppertriangular3": uppertriangular3,
        "sl2-constants": sl2_constants,
    }
    if name not in table:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    return table[name]()


RATIONAL_GROUPS = ("abelian:2", "abelian:3", "heisenberg3", "affine2", "uppertriangular3")
