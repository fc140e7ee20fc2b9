"""Truncated multivariate Taylor arithmetic.

A jet of order k at a base point records all Taylor coefficients of total
degree <= k.  Smooth primitives act on jets by expanding their univariate
Taylor series around the constant part of the argument, which is exactly how
smooth functions act on Weil-style truncated algebras; the ring layer and the
jet-algebra models both route through this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ArityMismatch, NonFiniteResult
from .terms import Add, Const, Mul, Neg, Prim, Term, Var


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> "JetSpace":
    return JetSpace(nvars, order)


class JetSpace:
    """Dense coefficient layout for truncated polynomials in `nvars`
    variables up to total degree `order`, graded-lexicographic."""

    def __init__(self, nvars: int, order: int):
        if nvars < 0 or order < 0:
            raise ArityMismatch("jet space needs nvars >= 0 and order >= 0")
        self.nvars = nvars
        self.order = order
        self.monomials: tuple[tuple[int, ...], ...] = tuple(
            m for deg in range(order + 1) for m in _monomials_of_degree(nvars, deg)
        )
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.size = len(self.monomials)
        ii, jj, kk = [], [], []
        for i, a in enumerate(self.monomials):
            for j, b in enumerate(self.monomials):
                if sum(a) + sum(b) > order:
                    continue
                s = tuple(x + y for x, y in zip(a, b))
                ii.append(i)
                jj.append(j)
                kk.append(self.index[s])
        self._mul_i = np.array(ii, dtype=np.intp)
        self._mul_j = np.array(jj, dtype=np.intp)
        self._mul_k = np.array(kk, dtype=np.intp)

    def constant(self, value: float) -> "TaylorSeries":
        coeffs = np.zeros(self.size)
        coeffs[0] = value
        return TaylorSeries(self, coeffs)

    def variable(self, i: int, base: float) -> "TaylorSeries":
        """The series base + h_i."""
        if not 0 <= i < self.nvars:
            raise ArityMismatch(f"variable {i} outside jet space of {self.nvars} vars")
        coeffs = np.zeros(self.size)
        coeffs[0] = base
        if self.order >= 1:
            unit = tuple(1 if j == i else 0 for j in range(self.nvars))
            coeffs[self.index[unit]] = 1.0
        return TaylorSeries(self, coeffs)

    def multiply(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.zeros(self.size)
        np.add.at(out, self._mul_k, a[self._mul_i] * b[self._mul_j])
        return out


def _monomials_of_degree(nvars: int, degree: int):
    if nvars == 0:
        if degree == 0:
            yield ()
        return
    if nvars == 1:
        yield (degree,)
        return
    for head in range(degree, -1, -1):
        for rest in _monomials_of_degree(nvars - 1, degree - head):
            yield (head,) + rest


@dataclass(frozen=True)
class TaylorSeries:
    space: JetSpace
    coeffs: np.ndarray

    @property
    def constant(self) -> float:
        return float(self.coeffs[0])

    def __add__(self, other: "TaylorSeries") -> "TaylorSeries":
        return TaylorSeries(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "TaylorSeries") -> "TaylorSeries":
        return TaylorSeries(self.space, self.coeffs - other.coeffs)

    def __neg__(self) -> "TaylorSeries":
        return TaylorSeries(self.space, -self.coeffs)

    def __mul__(self, other: "TaylorSeries") -> "TaylorSeries":
        return TaylorSeries(self.space, self.space.multiply(self.coeffs, other.coeffs))

    def shift(self, value: float) -> "TaylorSeries":
        coeffs = self.coeffs.copy()
        coeffs[0] += value
        return TaylorSeries(self.space, coeffs)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.size else 0.0

    @property
    def size(self) -> int:
        return self.space.size

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.coeffs)))


# ---------------------------------------------------------------------------
# univariate Taylor coefficients of the primitive library


def _recip_series(q: Sequence[float], order: int) -> list[float]:
    """Coefficients of 1/q(h) up to degree `order` for a polynomial q with
    q[0] != 0, by the standard division recurrence."""
    r = [1.0 / q[0]]
    for m in range(1, order + 1):
        acc = 0.0
        for j in range(1, min(m, len(q) - 1) + 1):
            acc += q[j] * r[m - j]
        r.append(-acc / q[0])
    return r


def taylor_coefficients(symbol: str, x0: float, order: int) -> list[float]:
    """c_i = f^(i)(x0) / i! for i = 0..order."""
    if symbol == "exp":
        e = math.exp(x0)
        return [e / math.factorial(i) for i in range(order + 1)]
    if symbol in ("sin", "cos"):
        s, c = math.sin(x0), math.cos(x0)
        cycle = [s, c, -s, -c] if symbol == "sin" else [c, -s, -c, s]
        return [cycle[i % 4] / math.factorial(i) for i in range(order + 1)]
    if symbol == "atan":
        out = [math.atan(x0)]
        if order >= 1:
            r = _recip_series([1.0 + x0 * x0, 2.0 * x0, 1.0], order - 1)
            out.extend(r[m - 1] / m for m in range(1, order + 1))
        return out
    if symbol == "tanh":
        t = [math.tanh(x0)]
        for m in range(order):
            square = sum(t[j] * t[m - j] for j in range(m + 1))
            t.append(((1.0 if m == 0 else 0.0) - square) / (m + 1))
        return t
    if symbol == "recip1psq":
        return _recip_series([1.0 + x0 * x0, 2.0 * x0, 1.0], order)
    raise ArityMismatch(f"unknown primitive {symbol!r}")


def apply_primitive(symbol: str, series: TaylorSeries) -> TaylorSeries:
    space = series.space
    try:
        coeffs = taylor_coefficients(symbol, series.constant, space.order)
    except OverflowError as exc:
        raise NonFiniteResult(str(exc)) from exc
    delta = series.shift(-series.constant)
    result = space.constant(coeffs[-1])
    for i in range(space.order - 1, -1, -1):
        result = result * delta + space.constant(coeffs[i])
    return result


# ---------------------------------------------------------------------------
# interpretation of terms on jets


def interpret_series(t: Term, args: Sequence[TaylorSeries], space: JetSpace) -> TaylorSeries:
    if t.arity > len(args):
        raise ArityMismatch(f"term arity {t.arity} exceeds {len(args)} jet arguments")
    return _interp(t, tuple(args), space)


def _interp(t: Term, args: tuple[TaylorSeries, ...], space: JetSpace) -> TaylorSeries:
    if isinstance(t, Var):
        return args[t.index]
    if isinstance(t, Const):
        return space.constant(float(t.value))
    if isinstance(t, Add):
        return _interp(t.left, args, space) + _interp(t.right, args, space)
    if isinstance(t, Mul):
        return _interp(t.left, args, space) * _interp(t.right, args, space)
    if isinstance(t, Neg):
        return -_interp(t.arg, args, space)
    if isinstance(t, Prim):
        return apply_primitive(t.symbol, _interp(t.args[0], args, space))
    raise ArityMismatch(f"cannot interpret {type(t).__name__} on jets")


@dataclass(frozen=True)
class Jet:
    """Taylor data of one evaluated quantity: dense coefficients indexed by
    multi-index of total degree <= order; the order-0 slice is the value."""

    base: tuple[float, ...]
    order: int
    series: TaylorSeries

    @property
    def value(self) -> float:
        return self.series.constant

    def coefficient(self, alpha: tuple[int, ...]) -> float:
        return float(self.series.coeffs[self.series.space.index[tuple(alpha)]])

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {
            m: float(c) for m, c in zip(self.series.space.monomials, self.series.coeffs)
        }

    def univariate_coefficients(self) -> tuple[float, ...]:
        """Convenience accessor for 1-variable jets: (c_0, c_1, ..., c_k)."""
        if len(self.base) != 1:
            raise ArityMismatch("univariate accessor on a multivariate jet")
        return tuple(self.coefficient((d,)) for d in range(self.order + 1))


def jet_eval(t: Term, base: Sequence[float], order: int) -> Jet:
    """Degree-<= order Taylor expansion of the term at the base point."""
    base = tuple(float(b) for b in base)
    if any(not math.isfinite(b) for b in base):
        raise NonFiniteResult("non-finite base point")
    if t.arity > len(base):
        raise ArityMismatch(f"term arity {t.arity} exceeds base point length {len(base)}")
    space = jet_space(len(base), order)
    args = [space.variable(i, b) for i, b in enumerate(base)]
    series = interpret_series(t, args, space)
    if not series.is_finite():
        raise NonFiniteResult("jet evaluation produced non-finite coefficients")
    return Jet(base, order, series)
