"""Seeded random term generators for property checks and regressions."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .terms import Add, Const, Mul, Neg, Prim, Star, Term, Var, PRIMITIVES

_PRIM_NAMES = tuple(sorted(PRIMITIVES))


def random_term(rng: np.random.Generator, arity: int, depth: int,
                allow_prims: bool = True) -> Term:
    """A random smooth term of ambient arity `arity` and depth <= `depth`."""
    if depth <= 0 or rng.random() < 0.25:
        if arity > 0 and rng.random() < 0.7:
            return Var(int(rng.integers(0, arity)))
        num = int(rng.integers(-4, 5))
        den = int(rng.integers(1, 4))
        return Const(Fraction(num, den))
    kinds = ["add", "mul", "neg"] + (["prim"] if allow_prims else [])
    kind = kinds[int(rng.integers(0, len(kinds)))]
    if kind == "add":
        return Add(random_term(rng, arity, depth - 1, allow_prims),
                   random_term(rng, arity, depth - 1, allow_prims))
    if kind == "mul":
        return Mul(random_term(rng, arity, depth - 1, allow_prims),
                   random_term(rng, arity, depth - 1, allow_prims))
    if kind == "neg":
        return Neg(random_term(rng, arity, depth - 1, allow_prims))
    symbol = _PRIM_NAMES[int(rng.integers(0, len(_PRIM_NAMES)))]
    return Prim(symbol, (random_term(rng, arity, depth - 1, allow_prims),))


def random_star_term(rng: np.random.Generator, arity: int, depth: int,
                     allow_prims: bool = False) -> Term:
    """A random quasi-inverse term.

    Primitives are off by default: the exact-evaluation soundness checks run
    on the field fragment (+, *, -, constants, star), where quasi-inverse
    semantics is exact on rational carriers.
    """
    if depth <= 0 or rng.random() < 0.22:
        if arity > 0 and rng.random() < 0.75:
            return Var(int(rng.integers(0, arity)))
        num = int(rng.integers(-3, 4))
        den = int(rng.integers(1, 3))
        return Const(Fraction(num, den))
    kinds = ["add", "mul", "neg", "star", "star", "mulstar"]
    if allow_prims:
        kinds.append("prim")
    kind = kinds[int(rng.integers(0, len(kinds)))]
    if kind == "add":
        return Add(random_star_term(rng, arity, depth - 1, allow_prims),
                   random_star_term(rng, arity, depth - 1, allow_prims))
    if kind == "mul":
        return Mul(random_star_term(rng, arity, depth - 1, allow_prims),
                   random_star_term(rng, arity, depth - 1, allow_prims))
    if kind == "neg":
        return Neg(random_star_term(rng, arity, depth - 1, allow_prims))
    if kind == "star":
        return Star(random_star_term(rng, arity, depth - 1, allow_prims))
    if kind == "mulstar":
        # bias toward sigma redexes: t * t^* * t shapes
        t = random_star_term(rng, arity, depth - 2 if depth > 1 else 0, allow_prims)
        return Mul(t, Mul(Star(t), t))
    symbol = _PRIM_NAMES[int(rng.integers(0, len(_PRIM_NAMES)))]
    return Prim(symbol, (random_star_term(rng, arity, depth - 1, allow_prims),))
