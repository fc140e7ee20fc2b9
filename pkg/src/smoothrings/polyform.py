"""Exact expansion of smooth terms as polynomials over opaque atoms.

Atoms are generators and primitive applications (with canonically expanded
arguments).  Expansion distributes products over sums and collects like
monomials with exact rational coefficients, so it decides exactly the ring
identities that hold for formal polynomial reasons; transcendental identities
(sin^2 + cos^2 = 1 and friends) are out of reach by design and fall through
to the sampling layer.

On top of the expansion sits a bounded certificate search:
`find_linear_combination` looks for multipliers h_l, polynomial in a template
atom set up to a degree bound, with sum h_l * t_l = rhs as an exact identity.
The unknowns enter linearly, so the search is exact Gaussian elimination over
the rationals; a returned certificate always folds back to a syntactic zero.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ArityMismatch, EnumerationOverflow
from .terms import (
    Add,
    Const,
    Mul,
    Neg,
    Prim,
    Star,
    Term,
    Var,
    _fold_product,
    _rebuild_lincomb,
    contains_star,
    sort_key,
)

# ((atom, exponent), ...) sorted by the atom's sort key
Monomial = tuple[tuple[Term, int], ...]
Poly = dict[Monomial, Fraction]

_MONOMIAL_CAP = 200_000

_PRIM_AT_ZERO = {"exp": Fraction(1), "sin": Fraction(0), "cos": Fraction(1),
                 "atan": Fraction(0), "tanh": Fraction(0)}


def poly_zero() -> Poly:
    return {}


def poly_const(c: Fraction) -> Poly:
    return {(): c} if c else {}


def poly_atom(atom: Term) -> Poly:
    return {((atom, 1),): Fraction(1)}


def poly_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, Fraction(0)) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def poly_scale(a: Poly, c: Fraction) -> Poly:
    if not c:
        return {}
    return {m: v * c for m, v in a.items()}


def _merge_monomials(m1: Monomial, m2: Monomial) -> Monomial:
    counts: dict[Term, int] = {}
    for atom, e in m1 + m2:
        counts[atom] = counts.get(atom, 0) + e
    return tuple(sorted(counts.items(), key=lambda kv: sort_key(kv[0])))

def poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _merge_monomials(m1, m2)
            s = out.get(m, Fraction(0)) + c1 * c2
            if s:
                out[m] = s
            else:
                out.pop(m, None)
            if len(out) > _MONOMIAL_CAP:
                raise EnumerationOverflow("polynomial expansion exceeded monomial cap")
    return out


def poly_is_zero(p: Poly) -> bool:
    return not p


def monomial_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def monomial_term(m: Monomial) -> Term:
    atoms = [atom for atom, e in m for _ in range(e)]
    return _fold_product(atoms)


def poly_to_term(p: Poly) -> Term:
    constant = p.get((), Fraction(0))
    units = {monomial_term(m): c for m, c in p.items() if m}
    return _rebuild_lincomb(constant, units)


def expand(t: Term) -> Poly:
    """Fully distributed form; rejects star terms."""
    if contains_star(t):
        raise ArityMismatch("expansion is undefined for quasi-inverse terms")
    return _expand(t)


def _expand(t: Term) -> Poly:
    if isinstance(t, Var):
        return poly_atom(t)
    if isinstance(t, Const):
        return poly_const(t.value)
    if isinstance(t, Add):
        return poly_add(_expand(t.left), _expand(t.right))
    if isinstance(t, Mul):
        return poly_mul(_expand(t.left), _expand(t.right))
    if isinstance(t, Neg):
        return poly_scale(_expand(t.arg), Fraction(-1))
    if isinstance(t, Prim):
        arg = poly_to_term(_expand(t.args[0]))
        if isinstance(arg, Const):
            if t.symbol == "recip1psq":
                return poly_const(Fraction(1) / (1 + arg.value * arg.value))
            if arg.value == 0 and t.symbol in _PRIM_AT_ZERO:
                return poly_const(_PRIM_AT_ZERO[t.symbol])
        return poly_atom(Prim(t.symbol, (arg,)))
    raise ArityMismatch(f"cannot expand {type(t).__name__}")


def is_zero_identity(t: Term) -> bool:
    """Exact syntactic zero test after full expansion."""
    return poly_is_zero(expand(t))


def terms_identical(a: Term, b: Term) -> bool:
    return is_zero_identity(Add(a, Neg(b)))


# ---------------------------------------------------------------------------
# bounded certificate search


def _collect_atoms(polys: Iterable[Poly], arity: int) -> list[Term]:
    atoms: dict[Term, None] = {Var(i): None for i in range(arity)}
    for p in polys:
        for m in p:
            for atom, _ in m:
                atoms[atom] = None
    return sorted(atoms, key=sort_key)


def _templates_of_degree(atoms: Sequence[Term], degree: int) -> list[Monomial]:
    if degree == 0:
        return [()]
    out: list[Monomial] = []

    def rec(start: int, remaining: int, acc: list[tuple[Term, int]]):
        if remaining == 0:
            out.append(tuple(acc))
            return
        for i in range(start, len(atoms)):
            for e in range(remaining, 0, -1):
                acc.append((atoms[i], e))
                rec(i + 1, remaining - e, acc)
                acc.pop()

    rec(0, degree, [])
    return [tuple(sorted(m, key=lambda kv: sort_key(kv[0]))) for m in out]


def _solve_exact(rows: list[tuple[dict[int, Fraction], Fraction]], ncols: int) -> list[Fraction] | None:
    """Any exact solution of a sparse rational linear system, or None."""
    pivots: dict[int, dict[int, Fraction]] = {}
    pivot_rhs: dict[int, Fraction] = {}
    for row, rhs in rows:
        row = dict(row)
        for col in sorted(pivots):
            coeff = row.pop(col, None)
            if coeff:
                prow = pivots[col]
                for c2, v2 in prow.items():
                    s = row.get(c2, Fraction(0)) - coeff * v2
                    if s:
                        row[c2] = s
                    else:
                        row.pop(c2, None)
                rhs = rhs - coeff * pivot_rhs[col]
        if not row:
            if rhs:
                return None
            continue
        col = min(row)
        inv = Fraction(1) / row.pop(col)
        prow = {c: v * inv for c, v in row.items()}
        pivots[col] = prow
        pivot_rhs[col] = rhs * inv
    solution = [Fraction(0)] * ncols
    for col in sorted(pivots, reverse=True):
        value = pivot_rhs[col]
        for c2, v2 in pivots[col].items():
            value -= v2 * solution[c2]
        solution[col] = value
    return solution


def find_linear_combination(
    targets: Sequence[Term],
    rhs: Term,
    arity: int,
    max_degree: int = 4,
    budget: int = 10_000,
) -> list[Term] | None:
    """Multipliers h_l with sum h_l * targets[l] = rhs exactly, or None.

    Tries template degrees in increasing order, so the simplest certificate
    wins and the common cases exit fast.  The search is sound (a result is an
    exact identity) but deliberately incomplete.
    """
    target_polys = [expand(t) for t in targets]
    rhs_poly = expand(rhs)
    atoms = _collect_atoms(target_polys + [rhs_poly], arity)
    max_unknowns = min(budget, 900)
    for degree in range(max_degree + 1):
        templates: list[Monomial] = []
        for d in range(degree + 1):
            templates.extend(_templates_of_degree(atoms, d))
        unknowns = len(templates) * len(targets)
        if unknowns == 0:
            continue
        if unknowns > max_unknowns:
            break
        columns: list[tuple[int, Monomial, Poly]] = []
        for l, tp in enumerate(target_polys):
            for template in templates:
                contrib = poly_mul({template: Fraction(1)}, tp)
                columns.append((l, template, contrib))
        row_keys: dict[Monomial, int] = {}
        for _, _, contrib in columns:
            for m in contrib:
                row_keys.setdefault(m, len(row_keys))
        for m in rhs_poly:
            row_keys.setdefault(m, len(row_keys))
        rows: list[dict[int, Fraction]] = [dict() for _ in range(len(row_keys))]
        for ci, (_, _, contrib) in enumerate(columns):
            for m, c in contrib.items():
                rows[row_keys[m]][ci] = c
        system = [
            (rows[ri], rhs_poly.get(m, Fraction(0))) for m, ri in row_keys.items()
        ]
        solution = _solve_exact(system, len(columns))
        if solution is None:
            continue
        multipliers: list[Poly] = [poly_zero() for _ in targets]
        for (l, template, _), x in zip(columns, solution):
            if x:
                multipliers[l] = poly_add(multipliers[l], {template: x})
        return [poly_to_term(p) for p in multipliers]
    return None
