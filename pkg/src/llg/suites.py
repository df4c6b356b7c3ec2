"""Identity suites: each check becomes a :class:`Record` with a stable anchor id.

Every job owns its random stream (seeded from the run seed and the record
name), so the report is the same whatever the worker count.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from . import symexpr as sx
from .cohomology import CoefficientModule, localized_complex
from .forms import (
    CROSSED,
    biinvariant_forms,
    delta,
    dhat,
    dtilde,
    extend_points,
    invariant_extension,
    is_invariant,
    linearize,
    random_form_T,
    random_nonlinear,
    random_seed_points,
    random_seed_T,
)
from .geometry import (
    GroupLaw,
    Splitting,
    StructureConstants,
    TensorField,
    check_connection_relation,
    check_fundamental_identity,
    check_index_swap,
    contract_derivative,
    copy_map,
    covariant_derivative,
    curvature_cal,
    dpsi,
    invariant_frame,
    lie_derivative,
    point,
    splitting_from_group,
    structure_constants,
    torsion_in_frame,
    transform_tensor,
    verify_group_axioms,
)
from .forms import NonlinearForm
from .symexpr import Const, P, Verdict

SUITES = ("eq2", "double", "chain", "invariance", "kernels", "duality", "cohomology")

# anchor id -> one-line statement; README carries the same index
ANCHORS = {
    "group-axioms": "group law: identity, inverse and associativity",
    "splitting-axioms": "splitting: diagonal identity, arrow composition, arrow inversion",
    "connection-index-swap": "hat connection equals the tilde connection with lower indices swapped",
    "torsion-derivative-is-curvature": "tilde derivative of tilde torsion equals the hat linear curvature",
    "hat-torsion-parallel": "hat torsion is hat-parallel",
    "hat-curvature-vanishes": "linear curvature of the hat connection vanishes",
    "nonlinear-curvature-vanishes": "nonlinear integrability tensor of the splitting vanishes",
    "torsion-frame-constants": "tilde torsion in the invariant frame equals the structure constants",
    "structure-constants-constant": "brackets of the invariant frame are constant",
    "dhat-squared-zero": "d-hat composed with itself is zero",
    "dtilde-squared-zero": "d-tilde composed with itself is zero",
    "delta-squared-zero": "delta composed with itself is zero",
    "dtilde-delta-commute": "d-tilde commutes with delta",
    "linearize-chain-map": "L intertwines d-tilde and d-hat",
    "biinvariant-linearization": "L maps biinvariant forms to biinvariant linear forms",
    "tilde-extension-invariant": "tilde extension of a seed is tilde-invariant",
    "dhat-preserves-tilde-invariance": "d-hat maps tilde-invariant linear forms to tilde-invariant forms",
    "hat-extension-invariant": "hat extension of a seed is hat-invariant",
    "dtilde-preserves-hat-invariance": "d-tilde maps hat-invariant forms to hat-invariant forms",
    "delta-preserves-hat-invariance": "delta maps hat-invariant forms to hat-invariant forms",
    "quotient-closed": "components of m(y, inv x) are d-tilde closed",
    "class-function-closed": "the affine a-component class function is d-tilde closed",
    "class-function-hat-invariant": "the affine a-component class function is hat-invariant",
    "non-class-function-detected": "the affine b-component fails hat invariance with a witness",
    "duality-pointwise": "hat derivative along xi equals the Lie derivative along dPsi(xi) at the base",
    "lie-kills-tilde-invariant": "Lie derivative along a hat-invariant field kills tilde-invariant tensors",
    "ilhc-two-route": "invariant linear horizontal complex matches Chevalley-Eilenberg",
    "hat35-two-route": "hat-invariant linear complex matches copies of the trivial complex",
    "biinv36-two-route": "biinvariant linear subcomplex matches invariant cochains",
    "ilhdc-row-two-route": "row m of the invariant double complex matches tensor-power coefficients",
    "m1-hat-two-route": "one-copy hat-invariant forms match the trivial complex",
    "ce-complex": "Chevalley-Eilenberg complex of the structure constants",
    "skipped": "check not applicable to this input",
}

COEFFICIENTS = ("trivial", "adjoint", "coadjoint", "tensor:1,1", "power:2", "power:3")


@dataclass(frozen=True)
class SuiteOptions:
    seed: int = 0
    trials: int = sx.DEFAULT_TRIALS
    mode: str = "exact"
    tol: float = sx.DEFAULT_FLOAT_TOL
    transport: str = CROSSED
    instances: int = 10
    workers: int = 1

    @property
    def kw(self) -> dict:
        return dict(trials=self.trials, seed=self.seed, mode=self.mode, tol=self.tol)


@dataclass
class Record:
    name: str
    anchor: str
    subject: str
    passed: bool
    verdict: dict | None = None
    detail: str = ""
    skipped: bool = False
    timing: float = 0.0

    def to_dict(self, timings: bool = False) -> dict:
        out = {"name": self.name, "anchor": self.anchor, "subject": self.subject,
               "verdict": "skip" if self.skipped else ("pass" if self.passed else "fail")}
        if self.verdict is not None:
            out["check"] = self.verdict
        if self.detail:
            out["detail"] = self.detail
        if timings:
            out["seconds"] = round(self.timing, 4)
        return out


@dataclass
class Job:
    name: str
    anchor: str
    subject: str
    fn: Callable[[random.Random], tuple]


class NotApplicable(Exception):
    """Raised by a job whose precondition does not hold for this input."""


def _outcome(v: Verdict, detail: str = "") -> tuple:
    return v.equal, v.to_dict(), detail


def run_jobs(jobs: list[Job], opts: SuiteOptions) -> list[Record]:
    def run(job: Job) -> Record:
        rng = random.Random(f"{opts.seed}:{job.name}")
        t0 = time.perf_counter()
        skipped = False
        try:
            passed, verdict, detail = job.fn(rng)
        except NotApplicable as exc:
            passed, verdict, detail, skipped = True, None, str(exc), True
        except (ValueError, ArithmeticError, sx.ExprError) as exc:
            passed, verdict, detail = False, None, f"{type(exc).__name__}: {exc}"
        rec = Record(job.name, job.anchor, job.subject, passed, verdict, detail, skipped)
        rec.timing = time.perf_counter() - t0
        return rec

    if opts.workers > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            records = list(pool.map(run, jobs))
    else:
        records = [run(j) for j in jobs]
    return sorted(records, key=lambda r: r.name)


def _exact_ok(G: GroupLaw) -> bool:
    # frames, kernels and matrices are read off exactly at rational points
    return not G.transcendental


def _skip(subject: str, suite: str, why: str) -> Record:
    return Record(f"{subject}/{suite}/skipped", "skipped", subject, True, None, why, skipped=True)


# --------------------------------------------------------------------------
# eq2: axioms and fundamental identities


def eq2_jobs(obj, opts: SuiteOptions) -> list[Job]:
    kw = opts.kw
    jobs: list[Job] = []
    if isinstance(obj, GroupLaw):
        G, subject = obj, obj.name
        St, Sh = splitting_from_group(G, "tilde"), splitting_from_group(G, "hat")

        def group_axioms(_):
            res = verify_group_axioms(G, **kw)
            bad = [c for c in res if not c.passed]
            first = bad[0] if bad else res[0]
            return not bad, first.verdict.to_dict(), ", ".join(c.name for c in bad) or "all group axioms hold"

        jobs.append(Job(f"{subject}/eq2/group-axioms", "group-axioms", subject, group_axioms))
        splittings = [("tilde", St), ("hat", Sh)]
    else:
        subject = obj.name or "splitting"
        St, Sh, G = obj, None, None
        splittings = [(obj.variant, obj)]

    for label, S in splittings:
        def axioms(_, S=S):
            res = S.check_axioms(**kw)
            bad = [c for c in res if not c.passed]
            first = bad[0] if bad else res[0]
            return not bad, first.verdict.to_dict(), ", ".join(c.name for c in bad) or "all splitting axioms hold"

        jobs.append(Job(f"{subject}/eq2/splitting-axioms/{label}", "splitting-axioms", subject, axioms))

        def cal(_, S=S):
            return _outcome(sx.is_zero_random(list(curvature_cal(S).comps), constraints=S.domain(), **kw))

        jobs.append(Job(f"{subject}/eq2/nonlinear-curvature-vanishes/{label}", "nonlinear-curvature-vanishes",
                        subject, cal))

    if St.variant == "tilde":
        jobs.append(Job(f"{subject}/eq2/connection-index-swap/relation", "connection-index-swap", subject,
                        lambda _: _outcome(check_connection_relation(St, **kw).verdict)))
        if Sh is not None:
            jobs.append(Job(f"{subject}/eq2/connection-index-swap/from-both", "connection-index-swap", subject,
                            lambda _: _outcome(check_index_swap(St, Sh, **kw).verdict)))
        for i, name in enumerate(("torsion-derivative-is-curvature", "hat-curvature-vanishes",
                                  "hat-torsion-parallel")):
            def fund(_, name=name):
                res = {c.name: c for c in check_fundamental_identity(St, **kw)}
                if name not in res:
                    raise NotApplicable("hat curvature is nonzero, so hat torsion need not be parallel")
                return _outcome(res[name].verdict)

            jobs.append(Job(f"{subject}/eq2/{name}", name, subject, fund))

    if G is not None and _exact_ok(G):
        def torsion_link(_):
            c = structure_constants(invariant_frame(St, G.identity), G.identity)
            t = torsion_in_frame(St, G.identity)
            n = G.dim
            ok = all(t[k][i][j] == c[k, i, j] for k in range(n) for i in range(n) for j in range(n))
            return ok, None, f"nonzero constants {[(k, i, j, str(v)) for k, i, j, v in c.nonzero()]}"

        jobs.append(Job(f"{subject}/eq2/torsion-frame-constants", "torsion-frame-constants", subject, torsion_link))

        def constant_brackets(rng):
            frame = invariant_frame(St, G.identity)
            c0 = structure_constants(frame, G.identity)
            pt = next(iter(sx.sample_points([P(0, i) for i in range(1, G.dim + 1)], 1, opts.seed + 7,
                                            G.domain((0,)))))
            at = [pt.values[P(0, i)] for i in range(1, G.dim + 1)]
            c1 = structure_constants(frame, at)
            return c0.c == c1.c, None, f"compared at identity and {[str(v) for v in at]}"

        jobs.append(Job(f"{subject}/eq2/structure-constants-constant", "structure-constants-constant", subject,
                        constant_brackets))
    return jobs


# --------------------------------------------------------------------------
# double: complex laws


def double_jobs(obj, opts: SuiteOptions) -> list[Job]:
    kw = opts.kw
    S = obj if isinstance(obj, Splitting) else splitting_from_group(obj, "tilde")
    subject = obj.name
    n = S.dim
    dom = lambda copies: S.domain(tuple(range(copies)))  # noqa: E731
    jobs = []
    for i in range(opts.instances):
        for k in range(n - 1):
            def dhat2(rng, k=k):
                f = random_form_T(rng, n, k)
                return _outcome(sx.is_zero_random(dhat(S, dhat(S, f)).flat(), constraints=dom(1), **kw))

            def dtilde2(rng, k=k):
                w = random_nonlinear(rng, n, 2, k)
                return _outcome(sx.is_zero_random(dtilde(S, dtilde(S, w)).flat(), constraints=dom(2), **kw))

            jobs.append(Job(f"{subject}/double/dhat-squared-zero/k{k}/{i:02d}", "dhat-squared-zero", subject, dhat2))
            jobs.append(Job(f"{subject}/double/dtilde-squared-zero/k{k}/{i:02d}", "dtilde-squared-zero", subject,
                            dtilde2))
        for k in range(n + 1):
            def delta2(rng, k=k):
                w = random_nonlinear(rng, n, 2, k)
                return _outcome(sx.is_zero_random(delta(S, delta(S, w)).flat(), constraints=dom(4), **kw))

            jobs.append(Job(f"{subject}/double/delta-squared-zero/k{k}/{i:02d}", "delta-squared-zero", subject,
                            delta2))
        for k in range(n):
            def commute(rng, k=k):
                w = random_nonlinear(rng, n, 2, k)
                return _outcome(sx.equiv_random(dtilde(S, delta(S, w)).flat(), delta(S, dtilde(S, w)).flat(),
                                                constraints=dom(3), **kw))

            jobs.append(Job(f"{subject}/double/dtilde-delta-commute/k{k}/{i:02d}", "dtilde-delta-commute", subject,
                            commute))
    return jobs


# --------------------------------------------------------------------------
# chain: linearization


def chain_jobs(obj, opts: SuiteOptions) -> list[Job]:
    kw = opts.kw
    S = obj if isinstance(obj, Splitting) else splitting_from_group(obj, "tilde")
    subject = obj.name
    n = S.dim
    jobs = []
    for m in (2, 3):
        for k in range(n):
            for i in range(max(1, opts.instances // 3)):
                def chain(rng, k=k, m=m):
                    w = random_nonlinear(rng, n, m, k)
                    lhs = linearize(dtilde(S, w)).flat()
                    rhs = dhat(S, linearize(w)).flat()
                    return _outcome(sx.equiv_random(lhs, rhs, constraints=S.domain((0,)), **kw))

                jobs.append(Job(f"{subject}/chain/linearize-chain-map/m{m}/k{k}/{i:02d}", "linearize-chain-map",
                                subject, chain))
    if isinstance(obj, GroupLaw) and _exact_ok(obj):
        G = obj
        for k in range(n):
            def biinv(_, k=k):
                forms = biinvariant_forms(G, k, seed=opts.seed, transport=opts.transport)
                bad = []
                last = None
                for idx, w in enumerate(forms):
                    L = linearize(w)
                    for variant in ("tilde", "hat"):
                        v = is_invariant(variant, G, L, **kw)
                        last = v
                        if not v.equal:
                            bad.append((idx, variant, v))
                detail = f"{len(forms)} biinvariant forms, transport {opts.transport}"
                if bad:
                    idx, variant, v = bad[0]
                    detail += f"; {len(bad)} failures, first: form {idx} not {variant}-invariant after L"
                    return False, v.to_dict(), detail
                return True, last.to_dict() if last else None, detail

            jobs.append(Job(f"{subject}/chain/biinvariant-linearization/k{k}", "biinvariant-linearization", subject,
                            biinv))
    return jobs


# --------------------------------------------------------------------------
# invariance preservation


def invariance_jobs(obj, opts: SuiteOptions) -> list[Job]:
    if not isinstance(obj, GroupLaw):
        return []
    kw = opts.kw
    G = obj
    subject, n = G.name, G.dim
    S = splitting_from_group(G, "tilde")
    tr = opts.transport
    per = max(5, opts.instances // 2)
    jobs = []
    for k in range(n):
        for i in range(per):
            def lin_ext(rng, k=k):
                return _outcome(is_invariant("tilde", G, invariant_extension("tilde", G, random_seed_T(rng, n, k)),
                                             **kw))

            def prop8(rng, k=k):
                om = invariant_extension("tilde", G, random_seed_T(rng, n, k))
                return _outcome(is_invariant("tilde", G, dhat(S, om), **kw))

            def pt_ext(rng, k=k):
                w = extend_points(G, "hat", random_seed_points(rng, n, 2, k), 2, tr)
                return _outcome(is_invariant("hat", G, w, transport=tr, **kw))

            def prop17(rng, k=k):
                w = extend_points(G, "hat", random_seed_points(rng, n, 2, k), 2, tr)
                return _outcome(is_invariant("hat", G, dtilde(S, w), transport=tr, **kw), f"transport {tr}")

            def prop24(rng, k=k):
                w = extend_points(G, "hat", random_seed_points(rng, n, 2, k), 2, tr)
                return _outcome(is_invariant("hat", G, delta(S, w), transport=tr, **kw), f"transport {tr}")

            base = f"{subject}/invariance"
            jobs.append(Job(f"{base}/tilde-extension-invariant/k{k}/{i:02d}", "tilde-extension-invariant", subject,
                            lin_ext))
            jobs.append(Job(f"{base}/dhat-preserves-tilde-invariance/k{k}/{i:02d}", "dhat-preserves-tilde-invariance",
                            subject, prop8))
            jobs.append(Job(f"{base}/hat-extension-invariant/k{k}/{i:02d}", "hat-extension-invariant", subject,
                            pt_ext))
            jobs.append(Job(f"{base}/dtilde-preserves-hat-invariance/k{k}/{i:02d}",
                            "dtilde-preserves-hat-invariance", subject, prop17))
            jobs.append(Job(f"{base}/delta-preserves-hat-invariance/k{k}/{i:02d}", "delta-preserves-hat-invariance",
                            subject, prop24))
    return jobs


# --------------------------------------------------------------------------
# kernels at level zero


def quotient_components(G: GroupLaw) -> list:
    """Components of m(y, inv x) as functions of two points."""
    n = G.dim
    return G.compose(point(1, n), G.inverse(point(0, n)))


def kernel_jobs(obj, opts: SuiteOptions) -> list[Job]:
    if not isinstance(obj, GroupLaw):
        return []
    kw = opts.kw
    G = obj
    subject, n = G.name, G.dim
    S = splitting_from_group(G, "tilde")
    q = quotient_components(G)
    jobs = []
    for i in range(n):
        def closed(_, i=i):
            th = NonlinearForm(n, 2, 0, {(): q[i]})
            return _outcome(sx.is_zero_random(dtilde(S, th).flat(), constraints=G.domain((0, 1)), **kw))

        jobs.append(Job(f"{subject}/kernels/quotient-closed/c{i + 1}", "quotient-closed", subject, closed))
    if G.name == "affine2":
        a = NonlinearForm(n, 2, 0, {(): q[0]})
        b = NonlinearForm(n, 2, 0, {(): q[1]})
        jobs.append(Job(f"{subject}/kernels/class-function-closed", "class-function-closed", subject,
                        lambda _: _outcome(sx.is_zero_random(dtilde(S, a).flat(), constraints=G.domain((0, 1)),
                                                             **kw))))
        jobs.append(Job(f"{subject}/kernels/class-function-hat-invariant", "class-function-hat-invariant", subject,
                        lambda _: _outcome(is_invariant("hat", G, a, **kw))))

        def non_class(_):
            v = is_invariant("hat", G, b, **kw)
            found = not v.equal and v.witness is not None
            return found, v.to_dict(), "witness reported" if found else "no witness: b-component looked invariant"

        jobs.append(Job(f"{subject}/kernels/non-class-function-detected", "non-class-function-detected", subject,
                        non_class))
    return jobs


# --------------------------------------------------------------------------
# duality between the hat derivative and the Lie derivative


def random_tensor(rng: random.Random, n: int, upper: int, lower: int) -> TensorField:
    xs = sx.point_vars(0, n)
    return TensorField.from_function(n, upper, lower, lambda idx: _poly(rng, xs))


def _poly(rng, xs):
    from .forms import random_polynomial

    return random_polynomial(rng, xs, 3, 2)


def constant_tensor(rng: random.Random, n: int, upper: int, lower: int) -> TensorField:
    from .forms import random_rational_coeff

    return TensorField.from_function(n, upper, lower, lambda idx: Const(random_rational_coeff(rng)))


def tilde_invariant_tensor(G: GroupLaw, T0: TensorField) -> TensorField:
    """Push the value at the identity around with the tilde splitting."""
    n = G.dim
    S = splitting_from_group(G, "tilde")
    e, x = G.identity_point(), point(0, n)
    return transform_tensor(T0, S.at(e, x), S.at(x, e))


def duality_residual(G: GroupLaw, xi: TensorField, t: TensorField) -> list:
    """(hat-nabla_xi t - Lie_{dPsi_p(xi)} t) evaluated at the base p = x."""
    n = G.dim
    hat_conn = splitting_from_group(G, "tilde").connection().swapped()
    lhs = contract_derivative(covariant_derivative(hat_conn, t), xi)
    eta = dpsi(G, xi, point(1, n), check=False)
    rhs = lie_derivative(eta, t)
    diag = copy_map(n, {1: point(0, n)})
    return [sx.add(a, sx.neg(sx.subst(b, diag))) for a, b in zip(lhs.comps, rhs.comps)]


def duality_jobs(obj, opts: SuiteOptions) -> list[Job]:
    if not isinstance(obj, GroupLaw):
        return []
    kw = opts.kw
    G = obj
    subject, n = G.name, G.dim
    St, Sh = splitting_from_group(G, "tilde"), splitting_from_group(G, "hat")
    dom = G.domain((0,))
    jobs = []
    kinds = [(1, 0), (0, 1), (1, 1), (0, 2), (2, 0)]
    for a in range(n):
        for label, make in (
            [(f"tilde-frame{b + 1}", lambda rng, b=b: invariant_frame(St, G.identity)[b]) for b in range(n)]
            + [(f"random{i}-{u}{l}", lambda rng, u=u, l=l: random_tensor(rng, n, u, l))
               for i, (u, l) in enumerate(kinds)]
        ):
            def dual(rng, a=a, make=make):
                xi = invariant_frame(Sh, G.identity)[a]
                return _outcome(sx.is_zero_random(duality_residual(G, xi, make(rng)), constraints=dom, **kw))

            jobs.append(Job(f"{subject}/duality/duality-pointwise/xi{a + 1}/{label}", "duality-pointwise", subject,
                            dual))
        for i, (u, l) in enumerate(kinds):
            def kills(rng, a=a, u=u, l=l):
                xi = invariant_frame(Sh, G.identity)[a]
                t = tilde_invariant_tensor(G, constant_tensor(rng, n, u, l))
                return _outcome(sx.is_zero_random(list(lie_derivative(xi, t).comps), constraints=dom, **kw))

            jobs.append(Job(f"{subject}/duality/lie-kills-tilde-invariant/xi{a + 1}/t{i}-{u}{l}",
                            "lie-kills-tilde-invariant", subject, kills))
    return jobs


# --------------------------------------------------------------------------
# cohomology two-route comparisons


def cohomology_jobs(obj, opts: SuiteOptions) -> list[Job]:
    jobs = []
    if isinstance(obj, StructureConstants):
        subject = obj.name or "algebra"
        for label in ("trivial", "adjoint", "coadjoint"):
            def ce(_, label=label):
                V = CoefficientModule.parse(label)
                L, _o = localized_complex(None, obj, "ce", V)
                return True, None, f"dims {L.betti()}"

            jobs.append(Job(f"{subject}/cohomology/ce-complex/{label}", "ce-complex", subject, ce))
        return jobs
    if not isinstance(obj, GroupLaw) or not _exact_ok(obj):
        return []
    G, subject = obj, obj.name
    plan = [("ilhc", c) for c in COEFFICIENTS]
    plan += [("hat35", "trivial"), ("hat35", "coadjoint"), ("biinv36", "trivial"), ("biinv36", "coadjoint")]
    plan += [("ilhdc-row", "power:2"), ("ilhdc-row", "power:3"), ("m1-hat", "trivial")]
    for complex_name, label in plan:
        def two_route(_, complex_name=complex_name, label=label):
            V = CoefficientModule.parse(label)
            h, o = localized_complex(G, None, complex_name, V, transport=opts.transport)
            hb, ob = h.betti(), o.betti()
            return hb == ob, None, f"horizontal {hb} oracle {ob}"

        jobs.append(Job(f"{subject}/cohomology/{complex_name}-two-route/{label}", f"{complex_name}-two-route",
                        subject, two_route))
    return jobs


SUITE_BUILDERS = {
    "eq2": eq2_jobs,
    "double": double_jobs,
    "chain": chain_jobs,
    "invariance": invariance_jobs,
    "kernels": kernel_jobs,
    "duality": duality_jobs,
    "cohomology": cohomology_jobs,
}


def build_jobs(obj, suite: str, opts: SuiteOptions) -> tuple[list[Job], list[Record]]:
    names = SUITES if suite == "all" else (suite,)
    jobs, skipped = [], []
    for name in names:
        if name not in SUITE_BUILDERS:
            raise ValueError(f"unknown suite {suite!r}")
        if isinstance(obj, StructureConstants) and name != "cohomology":
            skipped.append(_skip(obj.name or "algebra", name, "structure constants only"))
            continue
        got = SUITE_BUILDERS[name](obj, opts)
        if not got:
            why = "needs a rational group law" if isinstance(obj, GroupLaw) else "needs a group law"
            skipped.append(_skip(getattr(obj, "name", "") or "input", name, why))
        jobs.extend(got)
    return jobs, skipped


def run_suite(obj, suite: str, opts: SuiteOptions) -> list[Record]:
    jobs, skipped = build_jobs(obj, suite, opts)
    return sorted(run_jobs(jobs, opts) + skipped, key=lambda r: r.name)
