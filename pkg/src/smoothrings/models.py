"""Concrete models of the smooth-ring axioms in sets.

Three carriers: the reals, finite products of reals (componentwise
structure), and jet algebras (truncated Taylor expansions, with smooth
primitives acting by expansion around the constant part).  Each interprets
every term as an operation on carriers; `phi_object` realizes a presentation
as the solution set of its relations in the model (kept as a membership
predicate plus a partial enumeration, because solution sets are infinite in
general), and `phi_morphism` gives the contravariant action on solutions.

The locality predicate and the epi-family check make the geometric
'a or 1-a is invertible' formula executable, and `left_exactness_suite`
verifies terminal/product/coequalizer preservation on an enumerable corpus.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import EnumerationOverflow, KindMismatch, NonFiniteResult, RelationViolation
from .generate import random_term
from .jets import JetSpace, TaylorSeries, interpret_series, jet_space
from .rings import (
    Element,
    Morphism,
    Presentation,
    coequalizer,
    coproduct,
    enumerate_real_points,
    free_ring,
)
from .sampling import SampleConfig, zero_set_points
from .terms import Add, Const, Mul, Neg, ONE, Term, Var, evaluate, normalize, substitute
from .verdicts import Verdict

REALS = "reals"
PROD = "prod"
JET = "jet"


@dataclass(frozen=True)
class ModelRing:
    """A set-level model: reals, a finite power of the reals, or jets."""

    kind: str
    width: int = 1
    jet_vars: int = 0
    jet_order: int = 0

    def __post_init__(self):
        if self.kind not in (REALS, PROD, JET):
            raise KindMismatch(f"unknown model kind {self.kind!r}")
        if self.kind == PROD and self.width < 1:
            raise KindMismatch("product model needs width >= 1")

    @staticmethod
    def reals() -> "ModelRing":
        return ModelRing(REALS)

    @staticmethod
    def product(width: int) -> "ModelRing":
        return ModelRing(PROD, width=width)

    @staticmethod
    def jet(jet_vars: int, jet_order: int) -> "ModelRing":
        return ModelRing(JET, jet_vars=jet_vars, jet_order=jet_order)

    def describe(self) -> str:
        if self.kind == REALS:
            return "(model reals)"
        if self.kind == PROD:
            return f"(model prod {self.width})"
        return f"(model jet :vars {self.jet_vars} :order {self.jet_order})"

    def space(self) -> JetSpace:
        return jet_space(self.jet_vars, self.jet_order)

    # -- carrier helpers ----------------------------------------------------

    def lift(self, value: float):
        if self.kind == REALS:
            return float(value)
        if self.kind == PROD:
            return tuple(float(value) for _ in range(self.width))
        return self.space().constant(float(value))

    def one(self):
        return self.lift(1.0)

    def zero(self):
        return self.lift(0.0)

    def interpret(self, t: Term) -> Callable[[Sequence], object]:
        """The operation carrier^n -> carrier induced by the term."""

        if self.kind == REALS:
            def op_reals(args: Sequence) -> float:
                return evaluate(t, tuple(float(a) for a in args))
            return op_reals
        if self.kind == PROD:
            def op_prod(args: Sequence) -> tuple:
                cols = []
                for c in range(self.width):
                    cols.append(evaluate(t, tuple(a[c] for a in args)))
                return tuple(cols)
            return op_prod

        def op_jet(args: Sequence) -> TaylorSeries:
            series = interpret_series(t, tuple(args), self.space())
            if not series.is_finite():
                raise NonFiniteResult("jet interpretation overflowed")
            return series
        return op_jet

    def is_unit(self, x, tol: float = 1e-7) -> bool:
        """Closed-form invertibility: nonzero (all coordinates / order-0 part)."""
        if self.kind == REALS:
            return abs(float(x)) > tol
        if self.kind == PROD:
            return all(abs(float(c)) > tol for c in x)
        return abs(x.constant) > tol

    def carrier_close(self, x, y, tol: float) -> bool:
        return self.carrier_distance(x, y) <= tol * (1.0 + self.carrier_norm(x) + self.carrier_norm(y))

    def carrier_distance(self, x, y) -> float:
        if self.kind == REALS:
            return abs(float(x) - float(y))
        if self.kind == PROD:
            return max(abs(a - b) for a, b in zip(x, y))
        return float(np.max(np.abs(x.coeffs - y.coeffs)))

    def carrier_norm(self, x) -> float:
        if self.kind == REALS:
            return abs(float(x))
        if self.kind == PROD:
            return max(abs(c) for c in x)
        return x.max_abs()

    def sample_carrier(self, rng: np.random.Generator, box: float):
        if self.kind == REALS:
            return float(rng.uniform(-box, box))
        if self.kind == PROD:
            return tuple(float(v) for v in rng.uniform(-box, box, size=self.width))
        coeffs = rng.uniform(-1.0, 1.0, size=self.space().size)
        coeffs[0] = rng.uniform(-box, box)
        return TaylorSeries(self.space(), coeffs)

    def flatten_carrier(self, x) -> tuple[float, ...]:
        """Witness-friendly flat float view of a carrier value."""
        if self.kind == REALS:
            return (float(x),)
        if self.kind == PROD:
            return tuple(float(c) for c in x)
        return tuple(float(c) for c in x.coeffs)


def interpret(model: ModelRing, t: Term) -> Callable[[Sequence], object]:
    return model.interpret(t)


# ---------------------------------------------------------------------------
# model axioms


class AxiomReport(NamedTuple):
    model: str
    projection_exact: bool
    composition_samples: int
    composition_max_residual: float
    discarded: int
    ok: bool

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "projection_exact": self.projection_exact,
            "composition_samples": self.composition_samples,
            "composition_max_residual": self.composition_max_residual,
            "discarded": self.discarded,
            "ok": self.ok,
        }


def axiom_check(model: ModelRing, cfg: SampleConfig, count: int = 200) -> AxiomReport:
    """Projection axiom exactly; composition axiom within relative tolerance
    on seeded samples.  Overflowing samples are discarded and counted."""
    rng = cfg.rng()
    projection_exact = True
    comp_max = 0.0
    done = 0
    discarded = 0
    attempts = 0
    while done < count and attempts < count * 20:
        attempts += 1
        inner_arity = int(rng.integers(1, 4))
        outer_arity = int(rng.integers(1, 4))
        gs = tuple(random_term(rng, inner_arity, 2) for _ in range(outer_arity))
        h = random_term(rng, outer_arity, 2)
        f = substitute(h, gs)
        args = tuple(model.sample_carrier(rng, cfg.box) for _ in range(inner_arity))
        k = int(rng.integers(0, inner_arity))
        proj = model.interpret(Var(k))(args)
        if model.carrier_distance(proj, args[k]) != 0.0:
            projection_exact = False
        try:
            lhs = model.interpret(f)(args)
            mids = tuple(model.interpret(g)(args) for g in gs)
            rhs = model.interpret(h)(mids)
        except NonFiniteResult:
            discarded += 1
            continue
        dist = model.carrier_distance(lhs, rhs)
        scale = 1.0 + model.carrier_norm(lhs) + model.carrier_norm(rhs)
        comp_max = max(comp_max, dist / scale)
        done += 1
    ok = projection_exact and comp_max <= 1e-9 and done >= count // 2
    return AxiomReport(model.describe(), projection_exact, done, comp_max, discarded, ok)


# ---------------------------------------------------------------------------
# the solution-set functor


@dataclass(frozen=True)
class PhiObject:
    model: ModelRing
    presentation: Presentation
    membership: Callable[[tuple], bool] = field(compare=False)
    points: tuple | None
    samples: tuple
    exhaustive: bool

    def count(self) -> int | None:
        return len(self.points) if self.points is not None else None

    def iter_points(self) -> tuple:
        return self.points if self.points is not None else self.samples


def _membership_predicate(model: ModelRing, p: Presentation, tol: float):
    ops = [model.interpret(r) for r in p.relations]

    def member(point: tuple) -> bool:
        if len(point) != p.arity:
            return False
        for op in ops:
            try:
                value = op(point)
            except NonFiniteResult:
                return False
            if model.carrier_norm(value) > tol:
                return False
        return True

    return member


def phi_object(model: ModelRing, p: Presentation, cfg: SampleConfig) -> PhiObject:
    """The solution object of a presentation in the model.

    Always carries the exact membership predicate; enumeration is attempted
    for the real and product models and marked exhaustive only when the
    underlying real enumeration was."""
    tol = max(cfg.tol, 1e-6)
    member = _membership_predicate(model, p, tol)
    real_pts, exhaustive = enumerate_real_points(p, cfg.child("phi-enum"))
    sample_pts = real_pts
    if model.kind == REALS:
        pts = tuple(tuple(map(float, z)) for z in real_pts)
        return PhiObject(model, p, member, pts if exhaustive else None,
                         pts, exhaustive)
    if model.kind == PROD:
        k = model.width
        if exhaustive:
            if len(real_pts) ** k > cfg.budget:
                raise EnumerationOverflow(
                    f"{len(real_pts)}^{k} product points exceed the budget")
            pts = []
            for combo in itertools.product(real_pts, repeat=k):
                point = tuple(
                    tuple(combo[c][i] for c in range(k)) for i in range(p.arity)
                )
                pts.append(point)
            return PhiObject(model, p, member, tuple(pts), tuple(pts), True)
        samples = tuple(
            tuple(tuple(z[i] for _ in range(k)) for i in range(p.arity))
            for z in sample_pts
        )
        return PhiObject(model, p, member, None, samples, False)
    space = model.space()
    samples = tuple(
        tuple(space.constant(z[i]) for i in range(p.arity)) for z in sample_pts
    )
    return PhiObject(model, p, member, None, samples, False)


def phi_morphism(model: ModelRing, phi: Morphism, cfg: SampleConfig):
    """Contravariant action on solutions: a solution of the target maps to
    one of the source; the image is validated against the source relations."""
    tol = max(cfg.tol, 1e-6)
    comp_ops = [model.interpret(c) for c in phi.components]
    rel_ops = [model.interpret(r) for r in phi.source.relations]

    def mapped(point: tuple) -> tuple:
        image = tuple(op(point) for op in comp_ops)
        for r_op, rel in zip(rel_ops, phi.source.relations):
            value = r_op(image)
            if model.carrier_norm(value) > tol:
                raise RelationViolation(
                    f"mapped point violates source relation within {tol}")
        return image

    return mapped


# ---------------------------------------------------------------------------
# locality and epimorphic families


def is_local(model: ModelRing, cfg: SampleConfig | None = None) -> Verdict:
    """For every a, a or 1-a is invertible?  Decided in closed form."""
    if model.kind == REALS:
        return Verdict.proven("a and 1-a cannot both vanish in a field")
    if model.kind == JET:
        return Verdict.proven(
            "order-0 parts of a and 1-a cannot both vanish; units are exactly "
            "the jets with nonzero constant part")
    if model.width == 1:
        return Verdict.proven("width-1 product is the reals")
    witness = (1.0,) + (0.0,) * (model.width - 1)
    return Verdict.refuted(
        witness, 1.0,
        detail="idempotent witness: neither a nor 1-a is invertible at (1,0,...)")


def epi_family_check(model: ModelRing, p: Presentation, cover, cfg: SampleConfig) -> Verdict:
    """Every (enumerated or sampled) solution lies in the image of some
    localization leg, i.e. some cover element is invertible there.

    Random solutions almost never land on a measure-zero uncovered locus, so
    an explicit search for a common zero of relations and elements backs up
    the per-sample classification."""
    phi = phi_object(model, p, cfg.child("epi-phi"))
    points = phi.iter_points()
    element_ops = [model.interpret(a) for a in cover.elements]
    for point in points:
        covered = False
        for op in element_ops:
            try:
                value = op(point)
            except NonFiniteResult:
                continue
            if model.is_unit(value):
                covered = True
                break
        if not covered:
            flat = tuple(v for coord in point for v in model.flatten_carrier(coord))
            return Verdict.refuted(flat, 0.0,
                                   detail="solution point missed by every leg")
    missed = zero_set_points(
        tuple(p.relations) + tuple(cover.elements), p.arity,
        cfg.child("epi-common-zero"))
    if missed:
        real_witness = missed[0]
        flat = tuple(v for coord in real_witness
                     for v in model.flatten_carrier(model.lift(coord)))
        return Verdict.refuted(flat or (0.0,), 0.0,
                               detail="a geometric point is missed by every leg")
    if not points:
        return Verdict.supported(0, 0.0, detail="no solutions sampled",
                                 flags=("no-zero-set-samples",))
    return Verdict.supported(len(points), 0.0,
                             detail="every sampled solution hit some leg")


# ---------------------------------------------------------------------------
# left exactness


class LexInstance(NamedTuple):
    label: str
    ok: bool
    detail: str


class LexReport(NamedTuple):
    model: str
    instances: tuple[LexInstance, ...]

    @property
    def ok(self) -> bool:
        return all(inst.ok for inst in self.instances)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "ok": self.ok,
            "instances": [
                {"label": i.label, "ok": i.ok, "detail": i.detail}
                for i in self.instances
            ],
        }


def _match_point_sets(left: list, right: list, tol: float) -> bool:
    if len(left) != len(right):
        return False
    remaining = list(right)
    for p in left:
        best = None
        best_d = tol
        for i, q in enumerate(remaining):
            d = max((abs(a - b) for a, b in zip(p, q)), default=0.0)
            if d <= best_d:
                best = i
                best_d = d
        if best is None:
            return False
        remaining.pop(best)
    return True


def _poly_ring(coeff_rel: Term, name: str) -> Presentation:
    return Presentation(1, (coeff_rel,), name)


def default_lex_corpus() -> dict:
    """Small presentations and parallel pairs with enumerable solutions."""
    x = Var(0)
    sq = lambda t: Mul(t, t)
    rings = {
        "two-points": _poly_ring(Add(sq(x), Neg(ONE)), "two-points"),
        "pm2": _poly_ring(Add(sq(x), Neg(Const(4))), "pm2"),
        "three-points": _poly_ring(Add(Mul(x, sq(x)), Neg(x)), "three-points"),
        "shifted": _poly_ring(Add(sq(Add(x, Neg(ONE))), Neg(ONE)), "shifted"),
    }
    pairs = []
    free1 = free_ring(1, "free1")
    for target_name in ("two-points", "three-points", "pm2", "shifted"):
        target = rings[target_name]
        for s_term, t_term in (
            (x, Const(0)),
            (x, ONE),
            (sq(x), ONE),
            (Add(x, ONE), Const(0)),
            (Mul(Const(2), x), x),
        ):
            pairs.append((free1, target, (s_term,), (t_term,)))
    return {"rings": rings, "pairs": pairs}


def left_exactness_suite(model: ModelRing, cfg: SampleConfig) -> LexReport:
    """Terminal, binary products, and coequalizer-to-equalizer transport on
    the built-in enumerable corpus; solution sets are compared as sets."""
    corpus = default_lex_corpus()
    rings: dict[str, Presentation] = corpus["rings"]
    instances: list[LexInstance] = []
    tol = 1e-5

    terminal = phi_object(model, free_ring(0, "terminal"), cfg.child("lex-terminal"))
    n_terminal = terminal.count()
    instances.append(LexInstance(
        "terminal", n_terminal == 1, f"|phi(terminal)| = {n_terminal}"))

    for left_name, right_name in (("two-points", "pm2"), ("two-points", "three-points"),
                                  ("three-points", "pm2")):
        a, b = rings[left_name], rings[right_name]
        cop = coproduct(a, b)
        pa = phi_object(model, a, cfg.child(f"lex-prod-{left_name}"))
        pb = phi_object(model, b, cfg.child(f"lex-prod-{right_name}"))
        pab = phi_object(model, cop.presentation,
                         cfg.child(f"lex-prod-{left_name}-{right_name}"))
        ok = (pa.count() is not None and pb.count() is not None
              and pab.count() == pa.count() * pb.count())
        if ok and model.kind == REALS:
            expected = [za + zb for za in pa.points for zb in pb.points]
            ok = _match_point_sets(list(pab.points), expected, tol)
        instances.append(LexInstance(
            f"product {left_name} x {right_name}", bool(ok),
            f"|phi(A(x)B)| = {pab.count()} vs {pa.count()} * {pb.count()}"))

    def enumerated(phi: PhiObject) -> tuple | None:
        """Point list for comparisons: an exhaustive enumeration, or an empty
        sample set treated as (unprovably) empty."""
        if phi.points is not None:
            return phi.points
        if not phi.samples:
            return ()
        return None

    for idx, (source, target, s_comps, t_comps) in enumerate(corpus["pairs"]):
        s = Morphism(source, target, s_comps)
        t = Morphism(source, target, t_comps)
        ceq = coequalizer(s, t)
        pq = phi_object(model, ceq.presentation, cfg.child(f"lex-coeq-{idx}"))
        ptarget = phi_object(model, target, cfg.child(f"lex-coeq-t-{idx}"))
        pq_points = enumerated(pq)
        if ptarget.points is None or pq_points is None:
            instances.append(LexInstance(
                f"coequalizer {idx}", False, "enumeration incomplete"))
            continue
        s_ops = [model.interpret(c) for c in s_comps]
        t_ops = [model.interpret(c) for c in t_comps]
        expected = []
        for y in ptarget.points:
            try:
                if all(model.carrier_distance(so(y), to(y)) <= tol
                       for so, to in zip(s_ops, t_ops)):
                    expected.append(y)
            except NonFiniteResult:
                continue
        ok = _match_point_sets(list(pq_points), expected, tol)
        instances.append(LexInstance(
            f"coequalizer {idx}", ok,
            f"|phi(Q)| = {len(pq_points)} vs equalizer {len(expected)}"))

        # difference form: coeq(s, t) and coeq(s - t, 0) have the same solutions
        diff = Morphism(source, target,
                        tuple(normalize(Add(sc, Neg(tc)))
                              for sc, tc in zip(s_comps, t_comps)))
        zero = Morphism(source, target, tuple(Const(0) for _ in s_comps))
        ceq2 = coequalizer(diff, zero)
        pq2 = phi_object(model, ceq2.presentation, cfg.child(f"lex-coeq-diff-{idx}"))
        pq2_points = enumerated(pq2)
        ok2 = pq2_points is not None and _match_point_sets(
            list(pq_points), list(pq2_points), tol)
        instances.append(LexInstance(
            f"coequalizer-difference {idx}", bool(ok2),
            f"|phi(Q)| = {len(pq_points)} vs difference-form "
            f"{len(pq2_points) if pq2_points is not None else 'incomplete'}"))

    return LexReport(model.describe(), tuple(instances))
