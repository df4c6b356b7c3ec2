"""Command-line front end: ``llg <command> [options]``.

Exit codes: 0 when every verdict passes, 1 when a check fails (the report is
still written), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Sequence

from . import symexpr as sx
from .builtins import BUILTIN_NAMES, builtin
from .cohomology import COMPLEXES, CohomologyError, CoefficientModule, localized_complex, markdown_table
from .combinat import all_tuples, index_tuples
from .forms import CROSSED, MATCHED, FormError, FormOnT, NonlinearForm, delta, dhat, dtilde, linearize
from .geometry import (
    GeometryError,
    GroupLaw,
    Splitting,
    StructureConstants,
    curvature_cal,
    curvature_frak,
    invariant_frame,
    splitting_from_group,
    structure_constants,
    torsion,
)
from .io import ConfigError, load_definition, load_form
from .suites import SUITES, Record, SuiteOptions, build_jobs, run_jobs
from .symexpr import to_string

SCHEMA = 1
DERIVABLES = ("gamma", "torsion", "curvature", "frame", "structure-constants", "epsilon", "epsilon-hat")
OPERATORS = ("dhat", "dtilde", "delta", "linearize")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="FILE", help="TOML file with a [group], [splitting] or [algebra] block")
    src.add_argument("--builtin", metavar="NAME", help=f"one of {', '.join(BUILTIN_NAMES)}")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=sx.DEFAULT_TRIALS)
    common.add_argument("--mode", choices=("exact", "float"), default="exact")
    common.add_argument("--tol", type=float, default=sx.DEFAULT_FLOAT_TOL)
    common.add_argument("--out", metavar="FILE", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "markdown"), default="json")
    common.add_argument("--workers", type=int, default=1, help="threads for independent checks")
    common.add_argument("--timings", action="store_true", help="include per-check seconds (not deterministic)")
    common.add_argument("--transport", choices=(CROSSED, MATCHED), default=CROSSED,
                        help="how hat invariance carries form indices on point copies")

    p = argparse.ArgumentParser(prog="llg", description="Horizontal complexes of local Lie groups.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="group and splitting axioms, vanishing integrability tensor")
    d = sub.add_parser("derive", parents=[common], help="print derived geometric data")
    d.add_argument("--what", choices=DERIVABLES, required=True)
    c = sub.add_parser("cohomology", parents=[common], help="localized invariant complexes and Betti numbers")
    c.add_argument("--complex", dest="complex_name", choices=COMPLEXES, default="ilhc")
    c.add_argument("--coefficients", default=None, help="trivial|adjoint|coadjoint|tensor:R,S|power:M")
    c.add_argument("--max-degree", type=int, default=None)
    c.add_argument("--matrices", action="store_true", help="include the differentials")
    o = sub.add_parser("op", parents=[common], help="apply an operator to a form file")
    o.add_argument("--apply", choices=OPERATORS, required=True)
    o.add_argument("--form", metavar="FILE", required=True)
    v = sub.add_parser("verify", parents=[common], help="run identity suites")
    v.add_argument("--suite", choices=("all",) + SUITES, default="all")
    v.add_argument("--instances", type=int, default=10, help="random instances per degree in the double suite")
    return p


# --------------------------------------------------------------------------
# configuration


def load_subject(args):
    if args.input:
        obj = load_definition(args.input)
    elif args.builtin:
        try:
            obj = builtin(args.builtin)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
    else:
        raise ConfigError("give --input FILE or --builtin NAME")
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if args.mode == "float" and not args.tol > 0:
        raise ConfigError("--tol must be positive in float mode")
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    if _transcendental(obj) and args.mode != "float":
        raise ConfigError("input uses exp/log/sin/cos; rerun with --mode float (exact sampling needs rational values)")
    return obj


def _transcendental(obj) -> bool:
    if isinstance(obj, GroupLaw):
        return obj.transcendental or any(c.has_func for c in obj.constraints)
    if isinstance(obj, Splitting):
        return any(e.has_func for row in obj.eps for e in row)
    return False


def _name(obj) -> str:
    return getattr(obj, "name", "") or type(obj).__name__.lower()


def _options(args) -> SuiteOptions:
    return SuiteOptions(seed=args.seed, trials=args.trials, mode=args.mode, tol=args.tol, transport=args.transport,
                        instances=getattr(args, "instances", 10), workers=args.workers)


def _header(args, obj) -> dict:
    return {
        "schema": SCHEMA,
        "command": args.command,
        "subject": _name(obj),
        "options": {"seed": args.seed, "trials": args.trials, "mode": args.mode,
                    "tol": args.tol if args.mode == "float" else None, "transport": args.transport},
    }


# --------------------------------------------------------------------------
# commands


def _report(args, obj, records: list[Record]) -> tuple[dict, bool]:
    out = _header(args, obj)
    failed = [r for r in records if not r.passed and not r.skipped]
    out["records"] = [r.to_dict(args.timings) for r in records]
    out["summary"] = {
        "total": len(records),
        "passed": sum(1 for r in records if r.passed and not r.skipped),
        "failed": len(failed),
        "skipped": sum(1 for r in records if r.skipped),
    }
    out["passed"] = not failed
    return out, not failed


def cmd_check(args, obj):
    opts = _options(args)
    if isinstance(obj, StructureConstants):
        bad = obj.jacobi_defect()
        rec = Record(f"{_name(obj)}/check/jacobi", "ce-complex", _name(obj), not bad and obj.is_antisymmetric(),
                     None, "Jacobi identity holds" if not bad else f"Jacobi fails at {bad[:3]}")
        return _report(args, obj, [rec])
    jobs, _ = build_jobs(obj, "eq2", opts)
    wanted = {"group-axioms", "splitting-axioms", "nonlinear-curvature-vanishes"}
    return _report(args, obj, run_jobs([j for j in jobs if j.anchor in wanted], opts))


def cmd_verify(args, obj):
    opts = _options(args)
    jobs, skipped = build_jobs(obj, args.suite, opts)
    records = sorted(run_jobs(jobs, opts) + skipped, key=lambda r: r.name)
    out, ok = _report(args, obj, records)
    out["suite"] = args.suite
    return out, ok


def _expr_table(items) -> list[dict]:
    return [{"index": [i + 1 for i in idx], "expr": to_string(e)} for idx, e in items if not e.is_zero()]


def _tensor_items(T):
    return [(idx, T[idx]) for idx in all_tuples(T.dim, T.upper + T.lower)]


def cmd_derive(args, obj):
    what = args.what
    if isinstance(obj, StructureConstants):
        if what != "structure-constants":
            raise ConfigError("an [algebra] input only supports --what structure-constants")
        out = _header(args, obj)
        out.update(what=what, result=obj.to_json())
        return out, True
    G = obj if isinstance(obj, GroupLaw) else None
    St = splitting_from_group(G, "tilde") if G else obj
    if what in ("frame", "structure-constants", "epsilon-hat") and G is None:
        raise ConfigError(f"--what {what} needs a group law")
    n = St.dim
    conn = St.connection()
    if what == "gamma":
        result = {
            "convention": "index [i, j, k] is Gamma^i_jk",
            St.variant: _expr_table(((i, j, k), conn[i, j, k]) for i, j, k in all_tuples(n, 3)),
            "swapped": _expr_table(((i, j, k), conn[i, k, j]) for i, j, k in all_tuples(n, 3)),
        }
    elif what == "torsion":
        result = {
            "convention": "index [i, j, k] is T^i_jk = Gamma^i_jk - Gamma^i_kj",
            St.variant: _expr_table(_tensor_items(torsion(conn))),
        }
    elif what == "curvature":
        result = {
            "linear": _expr_table(_tensor_items(curvature_frak(conn))),
            "linear-swapped": _expr_table(_tensor_items(curvature_frak(conn.swapped()))),
            "nonlinear": _expr_table(_tensor_items(curvature_cal(St))),
        }
    elif what == "frame":
        frame = invariant_frame(St, G.identity)
        result = {"based-at": [str(v) for v in G.identity],
                  "fields": [[to_string(frame[a][i]) for i in range(n)] for a in range(n)]}
    elif what == "structure-constants":
        sc = structure_constants(invariant_frame(St, G.identity), G.identity)
        result = sc.to_json()
    elif what == "epsilon":
        result = [[to_string(e) for e in row] for row in St.eps]
    else:
        result = [[to_string(e) for e in row] for row in splitting_from_group(G, "hat").eps]
    out = _header(args, obj)
    out.update(what=what, result=result)
    return out, True


def cmd_cohomology(args, obj):
    label = args.coefficients or ("power:2" if args.complex_name == "ilhdc-row" else "trivial")
    try:
        V = CoefficientModule.parse(label)
    except CohomologyError as exc:
        raise ConfigError(str(exc)) from None
    if args.max_degree is not None and args.max_degree < 0:
        raise ConfigError("--max-degree must be non-negative")
    G = obj if isinstance(obj, GroupLaw) else None
    c = obj if isinstance(obj, StructureConstants) else None
    if isinstance(obj, Splitting):
        raise ConfigError("cohomology needs a group law or an [algebra] block")
    if G is not None and _transcendental(G):
        raise ConfigError("cohomology reads values at the identity exactly; use a rational group law")
    try:
        horizontal, oracle = localized_complex(G, c, args.complex_name, V, args.max_degree, args.transport)
    except CohomologyError as exc:
        raise ConfigError(str(exc)) from None
    rows = [horizontal.to_json(args.matrices)]
    if oracle is not horizontal:
        rows.append(oracle.to_json(args.matrices))
    ok = all(r["dims"] == rows[0]["dims"] for r in rows)
    out = _header(args, obj)
    out.update(complex=args.complex_name, coefficients=V.label, dims=rows[0]["dims"], routes=rows,
               routes_agree=ok, passed=ok)
    return out, ok


def _form_json(form) -> dict:
    out = {"degree": form.degree}
    if isinstance(form, FormOnT):
        out["space"] = "tangent"
        out["slots"] = list(form.slots)
    else:
        out["copies"] = form.copies
    out["components"] = {
        ",".join(str(i + 1) for i in I): to_string(form.comps[I])
        for I in index_tuples(form.dim, form.degree)
        if not form.comps[I].is_zero()
    }
    return out


def cmd_op(args, obj):
    if isinstance(obj, StructureConstants):
        raise ConfigError("operators need a group law or a splitting")
    form = load_form(args.form, obj.dim)
    S = splitting_from_group(obj, "tilde") if isinstance(obj, GroupLaw) else obj
    op = args.apply
    if op == "dhat":
        if not isinstance(form, FormOnT):
            raise ConfigError('dhat acts on forms over the tangent bundle; set space = "tangent"')
        result = dhat(S, form)
    else:
        if not isinstance(form, NonlinearForm):
            raise ConfigError(f"{op} acts on forms on point copies")
        if op == "dtilde":
            result = dtilde(S, form)
        elif op == "delta":
            result = delta(S, form)
        else:
            if form.copies < 2:
                raise ConfigError("linearize needs at least two copies")
            result = linearize(form)
    out = _header(args, obj)
    out.update(operator=op, input=_form_json(form), result=_form_json(result))
    return out, True


COMMANDS = {"check": cmd_check, "derive": cmd_derive, "cohomology": cmd_cohomology, "op": cmd_op,
            "verify": cmd_verify}


# --------------------------------------------------------------------------
# rendering


def render_markdown(report: dict) -> str:
    lines = [f"# llg {report['command']}: {report['subject']}", ""]
    if "records" in report:
        lines += ["| check | anchor | verdict | detail |", "|---|---|---|---|"]
        for r in report["records"]:
            detail = r.get("detail", "")
            if r["verdict"] == "fail" and "check" in r and "witness" in r["check"]:
                detail = (detail + "; " if detail else "") + "witness " + ", ".join(
                    f"{k}={v}" for k, v in r["check"]["witness"].items())
            lines.append(f"| {r['name']} | {r['anchor']} | {r['verdict']} | {detail.replace('|', '/')} |")
        s = report["summary"]
        lines += ["", f"{s['passed']} passed, {s['failed']} failed, {s['skipped']} skipped"]
    elif report["command"] == "cohomology":
        lines.append(markdown_table(report["routes"]))
        lines += ["", "routes agree" if report["routes_agree"] else "routes DISAGREE"]
    elif report["command"] == "op":
        lines.append(f"operator `{report['operator']}`, degree {report['result']['degree']}")
        lines.append("")
        lines += ["| index | component |", "|---|---|"]
        for k, v in report["result"]["components"].items():
            lines.append(f"| {k} | `{v}` |")
    else:
        lines.append("```json")
        lines.append(json.dumps(report["result"], indent=2))
        lines.append("```")
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "markdown":
        return render_markdown(report)
    return json.dumps(report, indent=2) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        obj = load_subject(args)
        report, ok = COMMANDS[args.command](args, obj)
    except (ConfigError, GeometryError, FormError, sx.ExprError) as exc:
        print(f"llg: configuration error: {exc}", file=sys.stderr)
        return 2
    if args.timings:
        report["seconds"] = round(time.perf_counter() - t0, 3)
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
