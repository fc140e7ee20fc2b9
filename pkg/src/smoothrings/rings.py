"""Finitely presented smooth rings.

A presentation is a generator count together with a finite relation list; a
morphism is a tuple of component terms together with per-relation
ideal-membership certificates.  Equality of elements modulo the relation
ideal is undecidable in general, so every judgement here is a three-valued
`Verdict`: Proven means an exact certificate folded to a syntactic identity,
NumericallySupported means agreement at every sampled point of the relation
zero set, Refuted carries a concrete separating point.

Colimits (coproduct, coequalizer, pushout) and rings of fractions are
computed as explicit presentations, following the standard recipes:
juxtaposition for coproducts, added difference relations for coequalizers,
and an adjoined generator x with relation a*x - 1 for inverting a.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    KindMismatch,
    ParallelismViolation,
    SourceMismatch,
    UnsupportedDenominator,
)
from .polyform import find_linear_combination, is_zero_identity
from .sampling import SampleConfig, enumerate_zero_set, zero_set_points
from .terms import (
    Add,
    Const,
    Mul,
    Neg,
    ONE,
    Term,
    Var,
    evaluate_batch,
    normalize,
    shift_vars,
    substitute,
)
from .verdicts import Verdict, merge_verdicts


@dataclass(frozen=True)
class Presentation:
    """C^inf(R^arity) modulo the ideal generated by `relations`."""

    arity: int
    relations: tuple[Term, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple(self.relations))
        if self.arity < 0:
            raise KindMismatch("presentation arity must be non-negative")
        for r in self.relations:
            if r.arity > self.arity:
                raise KindMismatch(
                    f"relation arity {r.arity} exceeds presentation arity {self.arity}"
                )

    def element(self, term: Term) -> "Element":
        return Element(self, term)

    def label(self) -> str:
        return self.name or f"<{self.arity} gens, {len(self.relations)} rels>"


def free_ring(arity: int, name: str | None = None) -> Presentation:
    return Presentation(arity, (), name)


def trivial_ring(name: str | None = None) -> Presentation:
    return Presentation(0, (ONE,), name)


@dataclass(frozen=True)
class Element:
    ambient: Presentation
    term: Term

    def __post_init__(self):
        if self.term.arity > self.ambient.arity:
            raise KindMismatch(
                f"element arity {self.term.arity} exceeds ambient arity {self.ambient.arity}"
            )


@dataclass(frozen=True)
class IdealCertificate:
    """Multipliers h_1..h_t witnessing: target = sum h_l * relation_l."""

    multipliers: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "multipliers", tuple(self.multipliers))


def trivial_certificate(relations: Sequence[Term], index: int) -> IdealCertificate:
    return IdealCertificate(
        tuple(ONE if j == index else Const(0) for j in range(len(relations)))
    )


def certificate_residual(target: Term, relations: Sequence[Term], cert: IdealCertificate) -> Term:
    acc: Term = target
    for h, g in zip(cert.multipliers, relations):
        acc = Add(acc, Neg(Mul(h, g)))
    return acc


@dataclass(frozen=True)
class Morphism:
    """A smooth homomorphism between presentations.

    `components[i]` is the image of generator i, a term over the target's
    generators.  `certificates[j]`, when present, witnesses that relation j of
    the source lands in the target's relation ideal.
    """

    source: Presentation
    target: Presentation
    components: tuple[Term, ...]
    certificates: tuple[IdealCertificate | None, ...] = ()
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != self.source.arity:
            raise KindMismatch(
                f"morphism needs {self.source.arity} components, got {len(self.components)}"
            )
        for c in self.components:
            if c.arity > self.target.arity:
                raise KindMismatch("component arity exceeds target arity")
        certs = tuple(self.certificates)
        if not certs:
            certs = (None,) * len(self.source.relations)
        if len(certs) != len(self.source.relations):
            raise KindMismatch("one certificate slot per source relation")
        object.__setattr__(self, "certificates", certs)

    def apply(self, t: Term) -> Term:
        """Image of a source term under the morphism."""
        if t.arity > self.source.arity:
            raise KindMismatch("term does not live in the source presentation")
        padded = self.components + tuple(
            Var(i) for i in range(len(self.components), t.arity)
        )
        return substitute(t, padded)

    def apply_element(self, e: Element) -> Element:
        if e.ambient != self.source:
            raise KindMismatch("element does not live in the source presentation")
        return Element(self.target, self.apply(e.term))

    def verify(self, cfg: SampleConfig) -> Verdict:
        """Re-check that every source relation maps into the target ideal."""
        verdicts = []
        for j, rel in enumerate(self.source.relations):
            image = self.apply(rel)
            cert = self.certificates[j]
            verdicts.append(
                _ideal_membership(
                    image,
                    self.target,
                    cert,
                    cfg.child(f"morphism-rel{j}"),
                )
            )
        return merge_verdicts(verdicts, detail=f"morphism into {self.target.label()}")


def identity_morphism(p: Presentation) -> Morphism:
    return Morphism(
        p,
        p,
        tuple(Var(i) for i in range(p.arity)),
        tuple(trivial_certificate(p.relations, j) for j in range(len(p.relations))),
        name="id",
    )


def compose_morphisms(outer: Morphism, inner: Morphism) -> Morphism:
    """outer o inner; composes certificates whenever both sides carry them."""
    if inner.target != outer.source:
        raise SourceMismatch("composition needs inner.target == outer.source")
    components = tuple(outer.apply(c) for c in inner.components)
    certs: list[IdealCertificate | None] = []
    mid_rels = inner.target.relations
    out_rels = outer.target.relations
    for j in range(len(inner.source.relations)):
        h = inner.certificates[j]
        if h is None or any(outer.certificates[l] is None for l in range(len(mid_rels))):
            certs.append(None)
            continue
        total = [Const(0)] * len(out_rels)
        for l in range(len(mid_rels)):
            h_img = outer.apply(h.multipliers[l])
            mu = outer.certificates[l]
            for r in range(len(out_rels)):
                total[r] = Add(total[r], Mul(h_img, mu.multipliers[r]))
        certs.append(IdealCertificate(tuple(normalize(t) for t in total)))
    return Morphism(inner.source, outer.target, components, tuple(certs))


# ---------------------------------------------------------------------------
# equality modulo the ideal


def _zero_noise_floor(relations: Sequence[Term], arr: np.ndarray) -> np.ndarray:
    """Per-point accuracy of sampled zero-set points.

    An ideal member evaluates to a multiplier combination of the relation
    residuals at an approximate zero, so judgements must stay above this
    floor to avoid refuting true members on solver round-off."""
    if not relations:
        return np.zeros(arr.shape[0])
    F = np.stack([evaluate_batch(r, arr) for r in relations], axis=1)
    F = np.where(np.isfinite(F), F, 0.0)
    return np.sqrt(np.sum(F * F, axis=1))


def _ideal_membership(
    target: Term,
    ambient: Presentation,
    cert: IdealCertificate | None,
    cfg: SampleConfig,
) -> Verdict:
    """Three-valued check that `target` lies in the relation ideal."""
    if is_zero_identity(target):
        return Verdict.proven("normalizes to zero")
    rels = ambient.relations
    if cert is not None:
        if len(cert.multipliers) != len(rels):
            raise KindMismatch("certificate length must match relation count")
        if is_zero_identity(certificate_residual(target, rels, cert)):
            return Verdict.proven("certificate folds to zero")
    if rels:
        found = find_linear_combination(rels, target, ambient.arity,
                                        cfg.max_degree, cfg.budget)
        if found is not None:
            return Verdict.proven("certificate found by bounded search")
    pts = zero_set_points(rels, ambient.arity, cfg)
    if not pts:
        return Verdict.supported(
            0, 0.0, detail="no zero-set samples found (ring may be trivial)",
            flags=("no-zero-set-samples",),
        )
    arr = np.array(pts, dtype=float).reshape(len(pts), ambient.arity)
    vals = evaluate_batch(target, arr)
    finite = np.isfinite(vals)
    if not np.any(finite):
        return Verdict.supported(0, 0.0, detail="all samples overflowed",
                                 flags=("all-samples-non-finite",))
    residuals = np.abs(vals[finite])
    floors = np.maximum(cfg.tol, 1e4 * _zero_noise_floor(rels, arr)[finite])
    worst = int(np.argmax(residuals - floors))
    if residuals[worst] > floors[worst]:
        witness = tuple(map(float, arr[finite][worst]))
        return Verdict.refuted(witness, float(residuals[worst]),
                               detail="separating zero-set sample")
    return Verdict.supported(int(np.sum(finite)), float(np.max(residuals)),
                             detail="vanishes on sampled zero set")


def equal_mod_ideal(
    a: Element,
    b: Element,
    cert: IdealCertificate | None = None,
    cfg: SampleConfig | None = None,
) -> Verdict:
    """Decide a = b in the quotient ring, three-valued.

    Proven comes from normalization equality or from certificate algebra
    (supplied or found by bounded search) folding the difference to a
    syntactic ideal combination.  Otherwise the difference is tested on
    sampled points of the relation zero set: a separating sample refutes, and
    agreement everywhere is reported as numerically supported.
    """
    if a.ambient != b.ambient:
        raise KindMismatch("elements live in different presentations")
    if cfg is None:
        raise KindMismatch("equal_mod_ideal needs a sampling config")
    ambient = a.ambient
    diff = Add(a.term, Neg(b.term))
    if is_zero_identity(diff):
        return Verdict.proven("normalization equality")
    if cert is not None:
        if is_zero_identity(certificate_residual(diff, ambient.relations, cert)):
            return Verdict.proven("certificate folds difference to zero")
    if ambient.relations:
        found = find_linear_combination(ambient.relations, diff, ambient.arity,
                                        cfg.max_degree, cfg.budget)
        if found is not None:
            return Verdict.proven("certificate found by bounded search")
    pts = zero_set_points(ambient.relations, ambient.arity, cfg)
    if not pts:
        return Verdict.supported(
            0, 0.0, detail="no zero-set samples found (ring may be trivial)",
            flags=("no-zero-set-samples",),
        )
    arr = np.array(pts, dtype=float).reshape(len(pts), ambient.arity)
    diff_vals = evaluate_batch(diff, arr)
    a_vals = evaluate_batch(a.term, arr)
    b_vals = evaluate_batch(b.term, arr)
    finite = np.isfinite(diff_vals) & np.isfinite(a_vals) & np.isfinite(b_vals)
    if not np.any(finite):
        return Verdict.supported(0, 0.0, detail="all samples overflowed",
                                 flags=("all-samples-non-finite",))
    scale = np.abs(a_vals[finite]) + np.abs(b_vals[finite])
    rel_res = np.abs(diff_vals[finite]) / (1.0 + scale)
    floors = np.maximum(cfg.tol, 1e4 * _zero_noise_floor(ambient.relations, arr)[finite])
    worst = int(np.argmax(rel_res - floors))
    if rel_res[worst] > floors[worst]:
        witness = tuple(map(float, arr[finite][worst]))
        return Verdict.refuted(witness, float(rel_res[worst]),
                               detail="zero-set sample separates the elements")
    return Verdict.supported(int(np.sum(finite)), float(np.max(rel_res)),
                             detail="equal at all sampled zero-set points")


def morphisms_equal(f: Morphism, g: Morphism, cfg: SampleConfig) -> Verdict:
    if f.source != g.source or f.target != g.target:
        raise KindMismatch("morphisms do not share source and target")
    verdicts = [
        equal_mod_ideal(
            Element(f.target, fc),
            Element(g.target, gc),
            cfg=cfg.child(f"moreq-{i}"),
        )
        for i, (fc, gc) in enumerate(zip(f.components, g.components))
    ]
    return merge_verdicts(verdicts, detail="componentwise equality mod target ideal")


def roundtrip_verdict(forward: Morphism, backward: Morphism, cfg: SampleConfig) -> Verdict:
    """Both composites equal the identities, as a merged verdict."""
    there = morphisms_equal(
        compose_morphisms(backward, forward), identity_morphism(forward.source),
        cfg.child("roundtrip-there"),
    )
    back = morphisms_equal(
        compose_morphisms(forward, backward), identity_morphism(backward.source),
        cfg.child("roundtrip-back"),
    )
    return merge_verdicts([there, back], detail="round trips against identities")


# ---------------------------------------------------------------------------
# colimits


class CoproductResult(NamedTuple):
    presentation: Presentation
    left: Morphism
    right: Morphism


def coproduct(a: Presentation, b: Presentation) -> CoproductResult:
    """Juxtaposition: arity n+m, relations of A plus shifted relations of B."""
    n, m = a.arity, b.arity
    relations = tuple(a.relations) + tuple(shift_vars(r, n) for r in b.relations)
    name = None
    if a.name and b.name:
        name = f"({a.name}(x){b.name})"
    p = Presentation(n + m, relations, name)
    left = Morphism(
        a, p, tuple(Var(i) for i in range(n)),
        tuple(trivial_certificate(relations, j) for j in range(len(a.relations))),
    )
    right = Morphism(
        b, p, tuple(Var(n + i) for i in range(m)),
        tuple(
            trivial_certificate(relations, len(a.relations) + j)
            for j in range(len(b.relations))
        ),
    )
    return CoproductResult(p, left, right)


class CoequalizerResult(NamedTuple):
    presentation: Presentation
    quotient: Morphism


def coequalizer(s: Morphism, t: Morphism) -> CoequalizerResult:
    """Target presentation augmented with s_i - t_i per source generator."""
    if s.source != t.source or s.target != t.target:
        raise ParallelismViolation("coequalizer needs a parallel pair")
    base = s.target
    added = tuple(
        normalize(Add(si, Neg(ti))) for si, ti in zip(s.components, t.components)
    )
    relations = tuple(base.relations) + added
    p = Presentation(base.arity, relations)
    q = Morphism(
        base, p, tuple(Var(i) for i in range(base.arity)),
        tuple(trivial_certificate(relations, j) for j in range(len(base.relations))),
    )
    return CoequalizerResult(p, q)


class PushoutResult(NamedTuple):
    presentation: Presentation
    left_leg: Morphism
    right_leg: Morphism
    square: Verdict


def pushout(f: Morphism, g: Morphism, cfg: SampleConfig) -> PushoutResult:
    """Coequalizer of the two composites into the coproduct of the targets."""
    if f.source != g.source:
        raise SourceMismatch("pushout needs a shared source")
    cop = coproduct(f.target, g.target)
    ceq = coequalizer(
        compose_morphisms(cop.left, f), compose_morphisms(cop.right, g)
    )
    left_leg = compose_morphisms(ceq.quotient, cop.left)
    right_leg = compose_morphisms(ceq.quotient, cop.right)
    square = morphisms_equal(
        compose_morphisms(left_leg, f),
        compose_morphisms(right_leg, g),
        cfg.child("pushout-square"),
    )
    return PushoutResult(ceq.presentation, left_leg, right_leg, square)


# ---------------------------------------------------------------------------
# rings of fractions


class LocalizationResult(NamedTuple):
    presentation: Presentation
    inclusion: Morphism
    inverse: Term  # the adjoined generator


def localize(a: Presentation, elem: Element | Term) -> LocalizationResult:
    """Invert one element: adjoin x with relation elem * x - 1."""
    t = elem.term if isinstance(elem, Element) else elem
    if isinstance(elem, Element) and elem.ambient != a:
        raise KindMismatch("element does not live in the presentation being localized")
    if t.arity > a.arity:
        raise KindMismatch("element arity exceeds presentation arity")
    n = a.arity
    inv = Var(n)
    relation = normalize(Add(Mul(t, inv), Neg(ONE)))
    relations = tuple(a.relations) + (relation,)
    name = f"{a.name}{{inv}}" if a.name else None
    p = Presentation(n + 1, relations, name)
    eta = Morphism(
        a, p, tuple(Var(i) for i in range(n)),
        tuple(trivial_certificate(relations, j) for j in range(len(a.relations))),
    )
    return LocalizationResult(p, eta, inv)


class IsoResult(NamedTuple):
    localization: LocalizationResult
    forward: Morphism
    backward: Morphism
    verdict: Verdict


def unit_localization_iso(a: Presentation, cfg: SampleConfig) -> IsoResult:
    """Inverting 1 changes nothing: explicit mutually inverse morphisms."""
    loc = localize(a, ONE)
    backward = Morphism(
        loc.presentation, a, tuple(Var(i) for i in range(a.arity)) + (ONE,)
    )
    verdict = roundtrip_verdict(loc.inclusion, backward, cfg.child("unit-loc"))
    return IsoResult(loc, loc.inclusion, backward, verdict)


class FlattenResult(NamedTuple):
    iterated: Presentation
    single: Presentation
    theta: Morphism
    theta_inverse: Morphism
    verdict: Verdict


def flatten_localization(
    a: Presentation,
    elem_a: Element | Term,
    elem_b: Element | Term,
    cfg: SampleConfig,
    denominator: Term = ONE,
) -> FlattenResult:
    """Collapse (A{a^-1}){b^-1} onto A{(a*b)^-1} by explicit inverse pairs.

    Only unit denominators are supported: the second inverted element must be
    the image of an element of A, which is all the pretopology machinery ever
    needs (transitivity composes exactly the products a*b).
    """
    if normalize(denominator) != ONE:
        raise UnsupportedDenominator(
            "only denominator 1 is supported for flattening"
        )
    ta = elem_a.term if isinstance(elem_a, Element) else elem_a
    tb = elem_b.term if isinstance(elem_b, Element) else elem_b
    if ta.arity > a.arity or tb.arity > a.arity:
        raise KindMismatch("both elements must live in the base presentation")
    n = a.arity
    first = localize(a, ta)
    iterated = localize(first.presentation, tb)
    single = localize(a, normalize(Mul(ta, tb)))
    # x_n inverts a, x_{n+1} inverts b in the iterated ring; in the single
    # ring x_n inverts a*b, so a^-1 = b*x_n and b^-1 = a*x_n.
    theta = Morphism(
        iterated.presentation,
        single.presentation,
        tuple(Var(i) for i in range(n)) + (Mul(tb, Var(n)), Mul(ta, Var(n))),
    )
    theta_inverse = Morphism(
        single.presentation,
        iterated.presentation,
        tuple(Var(i) for i in range(n)) + (Mul(Var(n), Var(n + 1)),),
    )
    checks = [
        theta.verify(cfg.child("flatten-theta")),
        theta_inverse.verify(cfg.child("flatten-theta-inv")),
        roundtrip_verdict(theta, theta_inverse, cfg.child("flatten-roundtrip")),
    ]
    # triangle: theta o (eta_b o eta_a) agrees with eta_{a*b}
    eta_ab = single.inclusion
    composite = compose_morphisms(theta, compose_morphisms(iterated.inclusion, first.inclusion))
    checks.append(morphisms_equal(composite, eta_ab, cfg.child("flatten-triangle")))
    return FlattenResult(
        iterated.presentation, single.presentation, theta, theta_inverse,
        merge_verdicts(checks, detail="flattening isomorphism"),
    )


class SaturationResult(NamedTuple):
    verdict: Verdict
    inverse: Term | None  # term over the localized presentation when proven


def saturation_member(
    a: Presentation,
    elem_a: Element | Term,
    elem_s: Element | Term,
    cfg: SampleConfig,
) -> SaturationResult:
    """Is s mapped to a unit of A{a^-1}?  (Membership in the saturation.)

    Proven: bounded template search finds an explicit inverse z together with
    an ideal certificate for s*z - 1.  Refuted: a sampled point of the
    localized zero set annihilates s.  Otherwise numerically supported as
    inconclusive, with the minimum sampled |s| recorded.
    """
    ta = elem_a.term if isinstance(elem_a, Element) else elem_a
    ts = elem_s.term if isinstance(elem_s, Element) else elem_s
    loc = localize(a, ta)
    rels = loc.presentation.relations
    arity = loc.presentation.arity
    found = find_linear_combination((ts,) + rels, ONE, arity,
                                    cfg.max_degree, cfg.budget)
    if found is not None:
        return SaturationResult(
            Verdict.proven("explicit inverse found by bounded search"), found[0]
        )
    # look for a localized zero-set point where s vanishes
    witness_pts = zero_set_points(rels + (ts,), arity, cfg.child("saturation-witness"))
    if witness_pts:
        return SaturationResult(
            Verdict.refuted(witness_pts[0], 0.0,
                            detail="localized point annihilates the element"),
            None,
        )
    pts = zero_set_points(rels, arity, cfg.child("saturation-scan"))
    if not pts:
        return SaturationResult(
            Verdict.supported(0, 0.0, detail="no localized samples found",
                              flags=("no-zero-set-samples",)),
            None,
        )
    arr = np.array(pts, dtype=float)
    vals = np.abs(evaluate_batch(ts, arr))
    return SaturationResult(
        Verdict.supported(len(pts), float(np.min(vals)),
                          detail="element nonzero at all sampled localized points",
                          flags=("inconclusive",)),
        None,
    )


class LocalizedMorphismResult(NamedTuple):
    source_localization: LocalizationResult
    target_localization: LocalizationResult
    localized: Morphism
    square: Verdict


def localize_morphism(g: Morphism, elem: Element | Term, cfg: SampleConfig) -> LocalizedMorphismResult:
    """The canonical map A{a^-1} -> B{g(a)^-1} and its commuting square."""
    t = elem.term if isinstance(elem, Element) else elem
    if t.arity > g.source.arity:
        raise KindMismatch("element does not live in the morphism source")
    loc_a = localize(g.source, t)
    loc_b = localize(g.target, g.apply(t))
    localized = Morphism(
        loc_a.presentation,
        loc_b.presentation,
        tuple(g.components) + (Var(g.target.arity),),
    )
    square = morphisms_equal(
        compose_morphisms(loc_b.inclusion, g),
        compose_morphisms(localized, loc_a.inclusion),
        cfg.child("localization-square"),
    )
    return LocalizedMorphismResult(loc_a, loc_b, localized, square)


# ---------------------------------------------------------------------------
# solution-set helpers shared by the site and model layers


def real_points(p: Presentation, cfg: SampleConfig) -> list[tuple[float, ...]]:
    """Sampled real points of the relation zero set."""
    return zero_set_points(p.relations, p.arity, cfg)


def enumerate_real_points(p: Presentation, cfg: SampleConfig) -> tuple[list[tuple[float, ...]], bool]:
    return enumerate_zero_set(p.relations, p.arity, cfg)
