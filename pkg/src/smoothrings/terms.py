"""Expression trees over a fixed library of globally smooth primitives.

Terms are immutable values built from generators, exact rational constants,
ring operations, and six unary primitives that are total and smooth on all of
the real line (so no partial operations like division ever enter the syntax;
inverses are adjoined structurally by the ring layer).

The module provides plain and vectorized evaluation, capture-free
substitution, and a canonicalizing rewrite (`normalize`) used to strengthen
syntactic equality: constant folding, double-negation removal, flattening of
sums/products with a fixed operand order, identity/absorption laws, and
collection of like summands with exact rational coefficients.  Products are
never distributed over sums here; full expansion lives in `polyform`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import ArityMismatch, NonFiniteResult

RationalLike = Union[int, str, Fraction]

# name -> (scalar function, vectorized function)
PRIMITIVES: dict[str, tuple[Callable[[float], float], Callable[[np.ndarray], np.ndarray]]] = {
    "exp": (math.exp, np.exp),
    "sin": (math.sin, np.sin),
    "cos": (math.cos, np.cos),
    "atan": (math.atan, np.arctan),
    "tanh": (math.tanh, np.tanh),
    "recip1psq": (lambda x: 1.0 / (1.0 + x * x), lambda x: 1.0 / (1.0 + x * x)),
}

PRIMITIVE_ARITY = {name: 1 for name in PRIMITIVES}


class Term:
    """Base class; all nodes carry their minimum ambient arity."""

    arity: int

    def __add__(self, other: "Term") -> "Term":
        return Add(self, other)

    def __mul__(self, other: "Term") -> "Term":
        return Mul(self, other)

    def __sub__(self, other: "Term") -> "Term":
        return Add(self, Neg(other))

    def __neg__(self) -> "Term":
        return Neg(self)


@dataclass(frozen=True, slots=True)
class Var(Term):
    index: int
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        if self.index < 0:
            raise ArityMismatch(f"negative generator index {self.index}")
        object.__setattr__(self, "arity", self.index + 1)


@dataclass(frozen=True, slots=True)
class Const(Term):
    value: Fraction
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "arity", 0)


@dataclass(frozen=True, slots=True)
class Add(Term):
    left: Term
    right: Term
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arity", max(self.left.arity, self.right.arity))


@dataclass(frozen=True, slots=True)
class Mul(Term):
    left: Term
    right: Term
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arity", max(self.left.arity, self.right.arity))


@dataclass(frozen=True, slots=True)
class Neg(Term):
    arg: Term
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arity", self.arg.arity)


@dataclass(frozen=True, slots=True)
class Prim(Term):
    symbol: str
    args: tuple[Term, ...]
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        if self.symbol not in PRIMITIVE_ARITY:
            raise ArityMismatch(f"unknown primitive {self.symbol!r}")
        if len(self.args) != PRIMITIVE_ARITY[self.symbol]:
            raise ArityMismatch(
                f"{self.symbol} expects {PRIMITIVE_ARITY[self.symbol]} args, got {len(self.args)}"
            )
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "arity", max((a.arity for a in self.args), default=0))


@dataclass(frozen=True, slots=True)
class Star(Term):
    """Quasi-inverse node; only the vn calculus interprets it."""

    arg: Term
    arity: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "arity", self.arg.arity)


def const(value: RationalLike) -> Const:
    return Const(Fraction(value))


def prim(symbol: str, *args: Term) -> Prim:
    return Prim(symbol, tuple(args))


ZERO = const(0)
ONE = const(1)


def contains_star(t: Term) -> bool:
    if isinstance(t, Star):
        return True
    if isinstance(t, (Add, Mul)):
        return contains_star(t.left) or contains_star(t.right)
    if isinstance(t, Neg):
        return contains_star(t.arg)
    if isinstance(t, Prim):
        return any(contains_star(a) for a in t.args)
    return False


# ---------------------------------------------------------------------------
# evaluation


def evaluate(t: Term, point: Sequence[float]) -> float:
    """Evaluate over the reals; raises NonFiniteResult on overflow."""
    if t.arity > len(point):
        raise ArityMismatch(f"term arity {t.arity} exceeds point length {len(point)}")
    try:
        value = _eval(t, point)
    except OverflowError as exc:
        raise NonFiniteResult(str(exc)) from exc
    if not math.isfinite(value):
        raise NonFiniteResult(f"evaluation produced {value}")
    return value


def _eval(t: Term, point: Sequence[float]) -> float:
    if isinstance(t, Var):
        return float(point[t.index])
    if isinstance(t, Const):
        return float(t.value)
    if isinstance(t, Add):
        return _eval(t.left, point) + _eval(t.right, point)
    if isinstance(t, Mul):
        return _eval(t.left, point) * _eval(t.right, point)
    if isinstance(t, Neg):
        return -_eval(t.arg, point)
    if isinstance(t, Prim):
        return PRIMITIVES[t.symbol][0](_eval(t.args[0], point))
    raise ArityMismatch(f"cannot evaluate {type(t).__name__} over the reals")


def evaluate_batch(t: Term, points: np.ndarray) -> np.ndarray:
    """Evaluate at many points at once.

    `points` has shape (m, n); the result has shape (m,) and may contain
    non-finite entries, which callers are expected to filter out.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ArityMismatch("points must be a 2-d array")
    if t.arity > points.shape[1]:
        raise ArityMismatch(f"term arity {t.arity} exceeds point width {points.shape[1]}")
    with np.errstate(all="ignore"):
        return _eval_batch(t, points)


def _eval_batch(t: Term, points: np.ndarray) -> np.ndarray:
    if isinstance(t, Var):
        return points[:, t.index]
    if isinstance(t, Const):
        return np.full(points.shape[0], float(t.value))
    if isinstance(t, Add):
        return _eval_batch(t.left, points) + _eval_batch(t.right, points)
    if isinstance(t, Mul):
        return _eval_batch(t.left, points) * _eval_batch(t.right, points)
    if isinstance(t, Neg):
        return -_eval_batch(t.arg, points)
    if isinstance(t, Prim):
        return PRIMITIVES[t.symbol][1](_eval_batch(t.args[0], points))
    raise ArityMismatch(f"cannot evaluate {type(t).__name__} over the reals")


_PRIM_DERIV: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "sin": np.cos,
    "cos": lambda v: -np.sin(v),
    "atan": lambda v: 1.0 / (1.0 + v * v),
    "tanh": lambda v: 1.0 / np.cosh(v) ** 2,
    "recip1psq": lambda v: -2.0 * v / (1.0 + v * v) ** 2,
}


def evaluate_batch_grad(t: Term, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-mode values and gradients at many points.

    Returns (values (m,), gradients (m, n)); non-finite rows are the
    caller's problem, as in `evaluate_batch`.
    """
    points = np.asarray(points, dtype=float)
    if t.arity > points.shape[1]:
        raise ArityMismatch(f"term arity {t.arity} exceeds point width {points.shape[1]}")
    with np.errstate(all="ignore"):
        return _eval_batch_grad(t, points)


def _eval_batch_grad(t: Term, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m, n = points.shape
    if isinstance(t, Var):
        grad = np.zeros((m, n))
        grad[:, t.index] = 1.0
        return points[:, t.index], grad
    if isinstance(t, Const):
        return np.full(m, float(t.value)), np.zeros((m, n))
    if isinstance(t, Add):
        va, ga = _eval_batch_grad(t.left, points)
        vb, gb = _eval_batch_grad(t.right, points)
        return va + vb, ga + gb
    if isinstance(t, Mul):
        va, ga = _eval_batch_grad(t.left, points)
        vb, gb = _eval_batch_grad(t.right, points)
        return va * vb, ga * vb[:, None] + gb * va[:, None]
    if isinstance(t, Neg):
        v, g = _eval_batch_grad(t.arg, points)
        return -v, -g
    if isinstance(t, Prim):
        v, g = _eval_batch_grad(t.args[0], points)
        return PRIMITIVES[t.symbol][1](v), _PRIM_DERIV[t.symbol](v)[:, None] * g
    raise ArityMismatch(f"cannot differentiate {type(t).__name__} over the reals")


# ---------------------------------------------------------------------------
# substitution


def substitute(t: Term, replacement: Sequence[Term]) -> Term:
    """Simultaneous substitution of Var i by replacement[i] (capture-free:
    generator indices are positional, there is no binding)."""
    if t.arity > len(replacement):
        raise ArityMismatch(
            f"term arity {t.arity} exceeds replacement tuple length {len(replacement)}"
        )
    return _subst(t, tuple(replacement))


def _subst(t: Term, repl: tuple[Term, ...]) -> Term:
    if isinstance(t, Var):
        return repl[t.index]
    if isinstance(t, Const):
        return t
    if isinstance(t, Add):
        return Add(_subst(t.left, repl), _subst(t.right, repl))
    if isinstance(t, Mul):
        return Mul(_subst(t.left, repl), _subst(t.right, repl))
    if isinstance(t, Neg):
        return Neg(_subst(t.arg, repl))
    if isinstance(t, Prim):
        return Prim(t.symbol, tuple(_subst(a, repl) for a in t.args))
    if isinstance(t, Star):
        return Star(_subst(t.arg, repl))
    raise ArityMismatch(f"cannot substitute into {type(t).__name__}")


def shift_vars(t: Term, offset: int) -> Term:
    """Rename Var i to Var (i + offset)."""
    if offset == 0 or t.arity == 0:
        return t
    return substitute(t, tuple(Var(i + offset) for i in range(t.arity)))


# ---------------------------------------------------------------------------
# canonical ordering


def sort_key(t: Term) -> tuple:
    if isinstance(t, Const):
        return (0, t.value.numerator, t.value.denominator)
    if isinstance(t, Var):
        return (1, t.index)
    if isinstance(t, Prim):
        return (2, t.symbol, tuple(sort_key(a) for a in t.args))
    if isinstance(t, Star):
        return (3, sort_key(t.arg))
    if isinstance(t, Mul):
        return (4, sort_key(t.left), sort_key(t.right))
    if isinstance(t, Add):
        return (5, sort_key(t.left), sort_key(t.right))
    if isinstance(t, Neg):
        return (6, sort_key(t.arg))
    raise ArityMismatch(f"no sort key for {type(t).__name__}")


# ---------------------------------------------------------------------------
# normalization

# Exact constant folds for primitives: values at 0 are exact integers, and
# recip1psq is rational at every rational argument.
_PRIM_AT_ZERO = {"exp": Fraction(1), "sin": Fraction(0), "cos": Fraction(1),
                 "atan": Fraction(0), "tanh": Fraction(0)}


def normalize(t: Term) -> Term:
    """Canonical form: idempotent and evaluation-preserving."""
    return _canon(t, star_rules=False)


def _canon(t: Term, star_rules: bool) -> Term:
    if isinstance(t, (Var, Const)):
        return t
    if isinstance(t, Neg):
        inner = _canon(t.arg, star_rules)
        const_part, units = _as_lincomb(inner)
        return _rebuild_lincomb(-const_part, {u: -c for u, c in units.items()})
    if isinstance(t, Add):
        left = _canon(t.left, star_rules)
        right = _canon(t.right, star_rules)
        c0, u0 = _as_lincomb(left)
        c1, u1 = _as_lincomb(right)
        units = dict(u0)
        for u, c in u1.items():
            units[u] = units.get(u, Fraction(0)) + c
        return _rebuild_lincomb(c0 + c1, units)
    if isinstance(t, Mul):
        left = _canon(t.left, star_rules)
        right = _canon(t.right, star_rules)
        coeff_l, atoms_l = _as_product(left)
        coeff_r, atoms_r = _as_product(right)
        return _rebuild_product(coeff_l * coeff_r, atoms_l + atoms_r, star_rules)
    if isinstance(t, Prim):
        args = tuple(_canon(a, star_rules) for a in t.args)
        arg = args[0]
        if isinstance(arg, Const):
            if t.symbol == "recip1psq":
                return Const(Fraction(1) / (1 + arg.value * arg.value))
            if arg.value == 0 and t.symbol in _PRIM_AT_ZERO:
                return Const(_PRIM_AT_ZERO[t.symbol])
        return Prim(t.symbol, args)
    if isinstance(t, Star):
        arg = _canon(t.arg, star_rules)
        if star_rules and isinstance(arg, Const):
            if arg.value == 0:
                return ZERO
            return Const(Fraction(1) / arg.value)
        return Star(arg)
    raise ArityMismatch(f"cannot normalize {type(t).__name__}")


def _as_product(t: Term) -> tuple[Fraction, tuple[Term, ...]]:
    """Decompose a canonical term as coefficient * product of atoms.

    Atoms are canonical terms headed by Var, Prim, Star, or Add; a sum of
    more than one summand stays opaque (no distribution).
    """
    if isinstance(t, Const):
        return t.value, ()
    if isinstance(t, Neg):
        c, atoms = _as_product(t.arg)
        return -c, atoms
    if isinstance(t, Mul):
        cl, al = _as_product(t.left)
        cr, ar = _as_product(t.right)
        return cl * cr, al + ar
    return Fraction(1), (t,)


def _as_lincomb(t: Term) -> tuple[Fraction, dict[Term, Fraction]]:
    """Decompose a canonical term as constant + sum of coeff * unit."""
    constant = Fraction(0)
    units: dict[Term, Fraction] = {}
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Add):
            stack.append(node.left)
            stack.append(node.right)
            continue
        coeff, atoms = _as_product(node)
        if not atoms:
            constant += coeff
            continue
        unit = _fold_product(atoms)
        units[unit] = units.get(unit, Fraction(0)) + coeff
    return constant, units


def _fold_product(atoms: Iterable[Term]) -> Term:
    ordered = sorted(atoms, key=sort_key)
    result = ordered[0]
    for a in ordered[1:]:
        result = Mul(result, a)
    return result


def _sigma_reduce(counts: dict[Term, int]) -> dict[Term, int]:
    """Left-to-right quasi-inverse rewrites on a product's atom multiset:
    x*x**x -> x  and  x**x*x* -> x*."""
    changed = True
    while changed:
        changed = False
        for atom in sorted(counts, key=sort_key):
            if not isinstance(atom, Star):
                continue
            base = atom.arg
            nb = counts.get(base, 0)
            ns = counts.get(atom, 0)
            while nb >= 2 and ns >= 1:
                nb -= 1
                ns -= 1
                changed = True
            while ns >= 2 and nb >= 1:
                nb -= 1
                ns -= 1
                changed = True
            for key, val in ((base, nb), (atom, ns)):
                if val:
                    counts[key] = val
                else:
                    counts.pop(key, None)
    return counts


def _rebuild_product(coeff: Fraction, atoms: tuple[Term, ...], star_rules: bool) -> Term:
    if coeff == 0:
        return ZERO
    if star_rules and atoms:
        counts: dict[Term, int] = {}
        for a in atoms:
            counts[a] = counts.get(a, 0) + 1
        counts = _sigma_reduce(counts)
        atoms = tuple(a for a in sorted(counts, key=sort_key) for _ in range(counts[a]))
    if not atoms:
        return Const(coeff)
    body = _fold_product(atoms)
    if coeff == 1:
        return body
    if coeff == -1:
        return Neg(body)
    return Mul(Const(coeff), body)


def _rebuild_lincomb(constant: Fraction, units: dict[Term, Fraction]) -> Term:
    summands: list[Term] = []
    for unit in sorted(units, key=sort_key):
        c = units[unit]
        if c == 0:
            continue
        if c == 1:
            summands.append(unit)
        elif c == -1:
            summands.append(Neg(unit))
        else:
            summands.append(Mul(Const(c), unit))
    if constant != 0 or not summands:
        summands.insert(0, Const(constant))
    result = summands[0]
    for s in summands[1:]:
        result = Add(result, s)
    return result
