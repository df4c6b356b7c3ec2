"""Index bookkeeping for alternating tensors and symbolic minors."""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Sequence

from .symexpr import ONE, ZERO, Expr, add, mul, neg


@lru_cache(maxsize=None)
def index_tuples(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing k-tuples from range(n), in lexicographic order."""
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def all_tuples(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(product(range(n), repeat=k))


def sort_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on repeats."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, tuple(sorted(idx))
    sign = 1
    arr = idx[:]
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


def perm_sign(p: Sequence[int]) -> int:
    return sort_sign(p)[0]


def det(m: Sequence[Sequence[Expr]]) -> Expr:
    """Determinant by cofactor expansion (desk-scale sizes only)."""
    k = len(m)
    if k == 0:
        return ONE
    if k == 1:
        return m[0][0]
    if k == 2:
        return add(mul(m[0][0], m[1][1]), neg(mul(m[0][1], m[1][0])))
    terms = []
    for j in range(k):
        if m[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        t = mul(m[0][j], det(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return add(*terms)


def minor(m: Sequence[Sequence[Expr]], rows: Sequence[int], cols: Sequence[int]) -> Expr:
    return det([[m[r][c] for c in cols] for r in rows])


def pullback_components(
    mat: Sequence[Sequence[Expr]], comps: dict, n: int, k: int
) -> dict:
    """Components of the pullback of a k-form by the linear map ``mat``.

    ``mat[i][a]`` maps the source index a to the target index i; the result
    is ``sum_I det(mat[I, A]) * comps[I]`` for each sorted A.
    """
    out = {}
    if k == 0:
        return {(): comps.get((), ZERO)}
    for A in index_tuples(n, k):
        terms = []
        for I in index_tuples(n, k):
            c = comps.get(I, ZERO)
            if c.is_zero():
                continue
            d = minor(mat, I, A)
            if d.is_zero():
                continue
            terms.append(mul(d, c))
        out[A] = add(*terms)
    return out


def alternate(k: int, n: int, deriv) -> dict:
    """Alternation of a derivative operator into a (k+1)-form.

    ``deriv(r, I)`` returns D_r applied to the component with sorted index I.
    Returns ``{J: sum_p (-1)^p D_{J[p]} comp(J without p)}``.
    """
    out = {}
    for J in index_tuples(n, k + 1):
        terms = []
        for p in range(k + 1):
            rest = J[:p] + J[p + 1 :]
            t = deriv(J[p], rest)
            if t.is_zero():
                continue
            terms.append(t if p % 2 == 0 else neg(t))
        out[J] = add(*terms)
    return out


def antisym_lookup(comps: dict, idx: Sequence[int]) -> Expr:
    """Component of an alternating tensor at an arbitrary index tuple."""
    s, key = sort_sign(idx)
    if s == 0:
        return ZERO
    c = comps.get(key, ZERO)
    return c if s == 1 else neg(c)


__all__ = [
    "index_tuples",
    "all_tuples",
    "sort_sign",
    "perm_sign",
    "det",
    "minor",
    "pullback_components",
    "alternate",
    "antisym_lookup",
    "permutations",
]
