"""TOML loaders for group, splitting, algebra and form files."""

from __future__ import annotations

import sys
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .combinat import index_tuples, sort_sign
from .forms import VECTOR, FormOnT, NonlinearForm
from .geometry import GroupLaw, Splitting, StructureConstants
from .symexpr import ExprError, neg, parse, to_string


class ConfigError(ValueError):
    """Malformed input file or option; maps to exit code 2."""


def _read(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"input file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _expr(text, dim, copies, slots=None, where=""):
    if not isinstance(text, str):
        raise ConfigError(f"{where}: expected an expression string, got {text!r}")
    try:
        return parse(text, dim, copies=copies, slots=slots)
    except ExprError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _dim(block, where) -> int:
    n = block.get("dim")
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"{where}: dim must be a positive integer")
    return n


def _constraints(items, dim, where):
    out = []
    for s in items or ():
        if not isinstance(s, str):
            raise ConfigError(f"{where}: constraints must be strings like 'x1 != 0'")
        lhs, sep, rhs = s.partition("!=")
        if sep and rhs.strip() != "0":
            raise ConfigError(f"{where}: constraint {s!r} must have the form 'expr != 0'")
        if not sep and any(op in s for op in "<>="):
            raise ConfigError(f"{where}: constraint {s!r} must have the form 'expr != 0'")
        out.append(_expr(lhs, dim, 1, where=where))
    return tuple(out)


def _rational(v, where) -> Fraction:
    try:
        return Fraction(v) if not isinstance(v, float) else Fraction(str(v))
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"{where}: {v!r} is not a rational number") from None


def load_definition(path) -> GroupLaw | Splitting | StructureConstants:
    """Load whichever of [group], [splitting] or [algebra] the file holds."""
    data = _read(path)
    blocks = [b for b in ("group", "splitting", "algebra") if b in data]
    if len(blocks) != 1:
        raise ConfigError(f"{path}: expected exactly one of [group], [splitting], [algebra]")
    block = data[blocks[0]]
    return {"group": group_from_toml, "splitting": splitting_from_toml, "algebra": algebra_from_toml}[blocks[0]](
        block, Path(path).stem
    )


def group_from_toml(block: dict, default_name: str = "group") -> GroupLaw:
    n = _dim(block, "[group]")
    names = block.get("variables")
    if names is not None and list(names) != [f"x{i}" for i in range(1, n + 1)]:
        raise ConfigError("[group] variables must be x1..xn; the second factor is written y1..yn")
    mult = block.get("multiplication")
    inv = block.get("inverse")
    ident = block.get("identity")
    for key, val in (("multiplication", mult), ("inverse", inv), ("identity", ident)):
        if not isinstance(val, list) or len(val) != n:
            raise ConfigError(f"[group] {key} must be a list of {n} entries")
    try:
        return GroupLaw(
            name=str(block.get("name", default_name)),
            dim=n,
            mult=tuple(_expr(s, n, 2, where="[group] multiplication") for s in mult),
            inv=tuple(_expr(s, n, 1, where="[group] inverse") for s in inv),
            identity=tuple(_rational(v, "[group] identity") for v in ident),
            constraints=_constraints(block.get("constraints"), n, "[group]"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[group]: {exc}") from None


def splitting_from_toml(block: dict, default_name: str = "splitting") -> Splitting:
    n = _dim(block, "[splitting]")
    eps = block.get("epsilon")
    if not isinstance(eps, list) or len(eps) != n or any(not isinstance(r, list) or len(r) != n for r in eps):
        raise ConfigError(f"[splitting] epsilon must be a {n}x{n} array of expression strings")
    variant = block.get("variant", "tilde")
    if variant not in ("tilde", "hat"):
        raise ConfigError("[splitting] variant must be 'tilde' or 'hat'")
    return Splitting(
        dim=n,
        eps=tuple(tuple(_expr(s, n, 2, where="[splitting] epsilon") for s in row) for row in eps),
        variant=variant,
        constraints=_constraints(block.get("constraints"), n, "[splitting]"),
        name=str(block.get("name", default_name)),
    )


def algebra_from_toml(block: dict, default_name: str = "algebra") -> StructureConstants:
    n = _dim(block, "[algebra]")
    brackets = []
    for s in block.get("brackets", ()):
        parts = str(s).split()
        if len(parts) != 4:
            raise ConfigError(f"[algebra] bracket {s!r} must read 'i j k coeff'")
        try:
            i, j, k = (int(p) for p in parts[:3])
        except ValueError:
            raise ConfigError(f"[algebra] bracket {s!r} has non-integer indices") from None
        brackets.append((i, j, k, _rational(parts[3], "[algebra] bracket")))
    try:
        sc = StructureConstants.from_brackets(n, brackets, str(block.get("name", default_name)))
        sc.check()
    except ValueError as exc:
        raise ConfigError(f"[algebra]: {exc}") from None
    return sc


def _index_key(key: str, n: int, k: int) -> tuple[int, ...]:
    try:
        idx = tuple(int(t) - 1 for t in key.split(",")) if key.strip() else ()
    except ValueError:
        raise ConfigError(f"bad component key {key!r}; expected 'i1,...,ik'") from None
    if len(idx) != k or any(not 0 <= i < n for i in idx):
        raise ConfigError(f"component key {key!r} does not fit degree {k} in dimension {n}")
    return idx


def load_form(path, dim: int) -> FormOnT | NonlinearForm:
    """Form file: copies, degree, components; ``space = "tangent"`` for forms over T."""
    data = _read(path)
    block = data.get("form", data)
    k = block.get("degree")
    if not isinstance(k, int) or not 0 <= k <= dim:
        raise ConfigError(f"{path}: degree must be an integer in 0..{dim}")
    space = block.get("space", "points")
    copies = block.get("copies", 1)
    if space not in ("points", "tangent"):
        raise ConfigError(f"{path}: space must be 'points' or 'tangent'")
    if not isinstance(copies, int) or not 1 <= copies <= 4:
        raise ConfigError(f"{path}: copies must be an integer in 1..4")
    comps = {}
    for key, text in (block.get("components") or {}).items():
        idx = _index_key(key, dim, k)
        s, sorted_idx = sort_sign(idx)
        if s == 0:
            raise ConfigError(f"{path}: repeated index in {key!r}")
        e = _expr(text, dim, 1 if space == "tangent" else copies, slots=1 if space == "tangent" else 0, where=key)
        if sorted_idx in comps:
            raise ConfigError(f"{path}: component {key!r} given twice")
        comps[sorted_idx] = e if s == 1 else neg(e)
    if space == "tangent":
        return FormOnT(dim, k, comps, (VECTOR,))
    return NonlinearForm(dim, copies, k, comps)


def form_to_toml(form) -> str:
    lines = ["[form]"]
    if isinstance(form, FormOnT):
        lines.append('space = "tangent"')
    else:
        lines.append(f"copies = {form.copies}")
    lines.append(f"degree = {form.degree}")
    lines.append("")
    lines.append("[form.components]")
    for I in index_tuples(form.dim, form.degree):
        e = form.comps.get(I)
        if e is None or e.is_zero():
            continue
        key = ",".join(str(i + 1) for i in I)
        lines.append(f'"{key}" = "{to_string(e)}"')
    return "\n".join(lines) + "\n"
