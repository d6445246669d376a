"""LIL-normalized maximal functions and Monte Carlo estimates of their L^p norms.

For a grid anchored at 1 the maximal function is

    M = max_{n} |S_n| / sqrt(|n| LL(|n|)),   S_n = sum_{1 <= i <= n} X_i,

with n ranging over the whole grid (``full``) or over indices whose
coordinates are powers of two (``dyadic``).  The supremum over N^d is
truncated at the grid extent; ``saturation_curve`` tracks that truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import simulate_block
from .innovations import derive_seed
from .lattice import DomainError, Rect, ValueGrid, build_prefix_table, prefix_sums, sum_over_rect
from .parallel import ordered_map
from .sets import RectUnion


@dataclass(frozen=True)
class MaxEstimate:
    lp_estimate: float
    se: float
    reps: int
    truncation: int
    p: float = 1.5


def lil_normalizer(cardinality):
    """sqrt(l LL(l)) for l >= 1 (scalar or array)."""
    ell = np.asarray(cardinality, dtype=np.float64)
    if np.any(ell < 1):
        raise ValueError("cardinality must be >= 1")
    ll = np.maximum(np.log(np.maximum(np.log(ell), 1.0)), 1.0)
    out = np.sqrt(ell * ll)
    return float(out) if out.ndim == 0 else out


def _normalizer_grid(shape) -> np.ndarray:
    """sqrt(|n| LL(|n|)) for every n in [1, shape]."""
    card = np.ones(shape, dtype=np.float64)
    for q, e in enumerate(shape):
        ax = np.arange(1, e + 1, dtype=np.float64).reshape([-1 if k == q else 1 for k in range(len(shape))])
        card = card * ax
    return lil_normalizer(card)


_NORM_CACHE: dict = {}


def _cached_normalizer(shape) -> np.ndarray:
    shape = tuple(shape)
    if shape not in _NORM_CACHE:
        _NORM_CACHE[shape] = _normalizer_grid(shape)
    return _NORM_CACHE[shape]


def _dyadic_slices(shape):
    return tuple(np.array([2**k - 1 for k in range(int(math.log2(e)) + 1)]) for e in shape)


def normalized_partial_sums(values: np.ndarray) -> np.ndarray:
    return np.abs(prefix_sums(values)) / _cached_normalizer(values.shape)


def maximal_function_rect(grid: ValueGrid, mode: str = "full") -> float:
    if any(o != 1 for o in grid.origin):
        raise DomainError(f"maximal functions need a grid anchored at (1, ..., 1), got origin {grid.origin}")
    ratio = normalized_partial_sums(grid.values)
    if mode == "full":
        return float(ratio.max())
    if mode == "dyadic":
        return float(ratio[np.ix_(*_dyadic_slices(ratio.shape))].max())
    raise ValueError(f"unknown mode {mode!r}")


def maximal_function_sets(model, seq, seed: int) -> float:
    """max_n |sum over region n| / sqrt(l_n LL(l_n)) on one realization.

    ``seq`` is a SetSequence or a plain list of regions.  Box unions are
    summed through one prefix table; explicit point lists directly.
    """
    regions = seq.regions if hasattr(seq, "regions") else list(seq)
    boxes, pts = [], []
    for reg in regions:
        if isinstance(reg, RectUnion):
            boxes.extend(reg.boxes)
        else:
            pts.extend(tuple(p) for p in reg)
    d = model.d
    lo = [min([b.lo[q] for b in boxes] + [p[q] for p in pts]) for q in range(d)]
    hi = [max([b.hi[q] for b in boxes] + [p[q] for p in pts]) for q in range(d)]
    grid = simulate_block(model, Rect(tuple(lo), tuple(hi)), seed)
    table = build_prefix_table(grid)
    best = 0.0
    for reg in regions:
        if isinstance(reg, RectUnion):
            total, card = sum(sum_over_rect(table, b) for b in reg.boxes), reg.cardinality
        else:
            uniq = sorted(set(tuple(p) for p in reg))
            total, card = sum(grid.value_at(p) for p in uniq), len(uniq)
        best = max(best, abs(total) / lil_normalizer(card))
    return best


def lp_from_values(values, p: float):
    """(mean M^p)^(1/p) with a delta-method standard error."""
    m = np.asarray(values, dtype=np.float64)
    mp = m**p
    mean = float(mp.mean())
    if mean == 0.0 or m.size < 2:
        return mean ** (1.0 / p), 0.0
    se_mean = float(mp.std(ddof=1) / math.sqrt(m.size))
    est = mean ** (1.0 / p)
    return est, est / (p * mean) * se_mean


def estimate_lp_norm(sampler, p: float, reps: int, seed: int, threads: int = 1, truncation: int = 0) -> MaxEstimate:
    """L^p norm of ``sampler(child_seed)`` over ``reps`` replications.

    Replication r gets ``derive_seed(seed, r)``; results are collected in
    replication order, so the estimate does not depend on ``threads``.
    """
    if reps < 30:
        raise ValueError("need at least 30 replications")
    vals = ordered_map(sampler, [derive_seed(seed, r) for r in range(reps)], threads)
    est, se = lp_from_values(vals, p)
    return MaxEstimate(est, se, reps, truncation, p)


def prefix_maxima(values: np.ndarray, exponents, mode: str = "full") -> np.ndarray:
    """Maximal function over [1, 2^k]^d for each k from one anchored grid."""
    ratio = normalized_partial_sums(values)
    out = []
    for k in exponents:
        sub = ratio[(slice(0, 2**k),) * values.ndim]
        if mode == "dyadic":
            sub = sub[np.ix_(*_dyadic_slices(sub.shape))]
        out.append(float(sub.max()))
    return np.array(out)


def curve_samples(model, exponents, reps: int, seed: int, mode: str = "full", threads: int = 1) -> np.ndarray:
    """Array (reps, len(exponents)) of maximal values under common random numbers."""
    exponents = list(exponents)
    if any(b <= a for a, b in zip(exponents, exponents[1:])):
        raise ValueError("exponents must increase")
    block = Rect((1,) * model.d, (2 ** exponents[-1],) * model.d)

    def one(child):
        return prefix_maxima(simulate_block(model, block, child).values, exponents, mode)

    return np.array(ordered_map(one, [derive_seed(seed, r) for r in range(reps)], threads))


def saturation_curve(model, p: float, exponents, reps: int, seed: int, mode: str = "full", threads: int = 1):
    """Estimates of ||M_{N = 2^k}||_p for each k, common random numbers across k."""
    samples = curve_samples(model, exponents, reps, seed, mode, threads)
    out = []
    for col, k in enumerate(exponents):
        est, se = lp_from_values(samples[:, col], p)
        out.append(MaxEstimate(est, se, reps, 2**k, p))
    return out
