"""Seeded sampling and numeric zero-set search.

All sampling is driven by an explicit seed carried in a `SampleConfig`; the
same config (and therefore the same seed) always produces the same points, and
derived seeds for sub-searches are computed deterministically from a string
tag, so concurrent use never changes results.

Zero sets of relation systems are sampled by multi-start damped Gauss-Newton
descent on the sum of squared relations, vectorized over all restarts with
numpy.  Acceptance never silently fails: a search that finds nothing reports
nothing, and callers are expected to flag that outcome.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .terms import Term, evaluate_batch, evaluate_batch_grad


@dataclass(frozen=True)
class SampleConfig:
    seed: int
    samples: int = 64
    tol: float = 1e-9
    box: float = 3.0
    newton_accept: float = 1e-9
    newton_iters: int = 60
    restarts: int = 96
    dedup_radius: float = 1e-6
    max_degree: int = 4
    budget: int = 10_000

    def child(self, tag: str) -> "SampleConfig":
        derived = (self.seed * 1_000_003 + zlib.crc32(tag.encode("utf-8"))) % (2**63)
        return replace(self, seed=derived)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def uniform_box(rng: np.random.Generator, count: int, dim: int, box: float) -> np.ndarray:
    return rng.uniform(-box, box, size=(count, dim))


def _residual_stack(relations: Sequence[Term], points: np.ndarray) -> np.ndarray:
    if not relations:
        return np.zeros((points.shape[0], 0))
    return np.stack([evaluate_batch(r, points) for r in relations], axis=1)


def _objective(relations: Sequence[Term], points: np.ndarray) -> np.ndarray:
    F = _residual_stack(relations, points)
    obj = np.sum(F * F, axis=1)
    return np.where(np.isfinite(obj), obj, np.inf)


def _newton_polish(relations: Sequence[Term], X: np.ndarray, cfg: SampleConfig) -> np.ndarray:
    n = X.shape[1]
    k = len(relations)
    eye = np.eye(n)
    obj = _objective(relations, X)
    steps = np.array([1.0, 0.5, 0.1, 0.02])
    for _ in range(cfg.newton_iters):
        active = obj > 1e-24
        if not np.any(active):
            break
        Xa = X[active]
        vals, grads = [], []
        for r in relations:
            v, g = evaluate_batch_grad(r, Xa)
            vals.append(v)
            grads.append(g)
        F = np.stack(vals, axis=1)
        J = np.stack(grads, axis=1).reshape(Xa.shape[0], k, n)
        bad = ~(np.all(np.isfinite(F), axis=1) & np.all(np.isfinite(J.reshape(Xa.shape[0], -1)), axis=1))
        F = np.where(np.isfinite(F), F, 0.0)
        J = np.where(np.isfinite(J), J, 0.0)
        H = np.einsum("mki,mkj->mij", J, J)
        damping = 1e-12 + 1e-8 * obj[active]
        H = H + damping[:, None, None] * eye
        g = np.einsum("mki,mk->mi", J, F)
        try:
            step = -np.linalg.solve(H, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -np.stack([np.linalg.lstsq(Hm, gm, rcond=None)[0] for Hm, gm in zip(H, g)])
        step = np.where(np.isfinite(step), step, 0.0)
        step[bad] = 0.0
        best_obj = obj[active].copy()
        best_X = Xa.copy()
        for t in steps:
            cand = Xa + t * step
            cand = np.clip(cand, -1e8, 1e8)
            cand_obj = _objective(relations, cand)
            better = cand_obj < best_obj
            best_obj = np.where(better, cand_obj, best_obj)
            best_X = np.where(better[:, None], cand, best_X)
        X[active] = best_X
        obj[active] = best_obj
    return X


def zero_set_points(relations: Sequence[Term], arity: int, cfg: SampleConfig) -> list[tuple[float, ...]]:
    """Sampled points of the real zero set of the relations.

    With no relations this is a seeded box sample; otherwise multi-start
    Gauss-Newton, keeping points whose squared-residual sum passes the
    acceptance threshold.  May legitimately return an empty list (e.g. the
    relations have no real zeros), which callers must report, not ignore.
    """
    rng = cfg.rng()
    if arity == 0:
        obj = _objective(relations, np.zeros((1, 0)))
        return [()] if obj[0] <= cfg.newton_accept else []
    if not relations:
        pts = uniform_box(rng, cfg.samples, arity, cfg.box)
        return [tuple(map(float, p)) for p in pts]
    starts = uniform_box(rng, max(cfg.restarts, cfg.samples), arity, cfg.box)
    X = _newton_polish(relations, starts, cfg)
    obj = _objective(relations, X)
    keep = obj <= cfg.newton_accept
    pts = sorted(tuple(map(float, p)) for p in X[keep])
    return pts[: cfg.samples]


def dedup_points(points: Sequence[tuple[float, ...]], radius: float) -> list[tuple[float, ...]]:
    kept: list[tuple[float, ...]] = []
    for p in sorted(points):
        arr = np.array(p)
        if all(np.linalg.norm(arr - np.array(q)) > radius for q in kept):
            kept.append(p)
    return kept


def enumerate_zero_set(
    relations: Sequence[Term], arity: int, cfg: SampleConfig
) -> tuple[list[tuple[float, ...]], bool]:
    """Deduplicated solution list plus an exhaustiveness guess.

    The guess is True only when every found solution is isolated (full-rank
    Jacobian) and the count stayed small relative to the restart budget;
    callers keep the membership predicate around precisely because this can
    be wrong.
    """
    if arity == 0:
        pts = zero_set_points(relations, arity, cfg)
        return pts, True
    if not relations:
        return zero_set_points(relations, arity, cfg), False
    wide = replace(cfg, restarts=max(cfg.restarts * 2, 128), samples=max(cfg.samples * 4, 256))
    raw = zero_set_points(relations, arity, wide)
    points = dedup_points(raw, cfg.dedup_radius)
    if not points:
        return [], False
    if len(points) > max(4, len(raw) // 4):
        # too many distinct points for the restart count: likely a positive-
        # dimensional zero set, keep them as samples but do not claim a list
        return points, False
    exhaustive = len(relations) >= arity
    if exhaustive:
        for p in points:
            arr = np.array([p])
            grads = [evaluate_batch_grad(r, arr)[1][0] for r in relations]
            J = np.stack(grads)
            if np.linalg.matrix_rank(J, tol=1e-6) < arity:
                exhaustive = False
                break
    return points, exhaustive
