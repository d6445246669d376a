"""Index arithmetic on Z^d and rectangle sums through prefix-sum tables.

Lattice points are plain tuples of ints.  Boxes are closed in every
coordinate, so ``Rect((1, 1), (2, 3))`` holds six points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

LatticeIndex = tuple


class DomainError(ValueError):
    """A lattice point or box falls outside the region it is used on."""


def as_index(coords) -> tuple:
    out = tuple(int(c) for c in coords)
    if len(out) == 0:
        raise ValueError("lattice index needs at least one coordinate")
    return out


def precedes(i, j) -> bool:
    """Coordinatewise order: ``i`` precedes ``j`` iff i_q <= j_q for all q."""
    if len(i) != len(j):
        raise ValueError(f"dimension mismatch: {len(i)} vs {len(j)}")
    return all(a <= b for a, b in zip(i, j))


def sup_norm(i) -> int:
    return max(abs(c) for c in i)


@dataclass(frozen=True)
class Rect:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = as_index(self.lo), as_index(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi have different dimensions")
        if not precedes(lo, hi):
            raise ValueError(f"empty box: lo={lo} does not precede hi={hi}")

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def extents(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def cardinality(self) -> int:
        return int(np.prod(self.extents, dtype=np.int64))

    def contains(self, i) -> bool:
        return precedes(self.lo, i) and precedes(i, self.hi)

    def inflate(self, radius: int) -> "Rect":
        return Rect(tuple(c - radius for c in self.lo), tuple(c + radius for c in self.hi))

    def points(self):
        """Iterate over the points in lexicographic order."""
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class ValueGrid:
    """Real values on the box ``[origin, origin + extents - 1]``."""

    origin: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        origin = as_index(self.origin)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != len(origin):
            raise ValueError(f"values have {values.ndim} axes but origin has {len(origin)} coordinates")
        if values.size == 0:
            raise ValueError("empty grid")
        values.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return len(self.origin)

    @property
    def extents(self) -> tuple:
        return tuple(self.values.shape)

    @property
    def rect(self) -> Rect:
        return Rect(self.origin, tuple(o + e - 1 for o, e in zip(self.origin, self.extents)))

    def value_at(self, i) -> float:
        i = as_index(i)
        if not self.rect.contains(i):
            raise DomainError(f"point {i} outside grid {self.rect}")
        return float(self.values[tuple(a - o for a, o in zip(i, self.origin))])

    def sub_grid(self, r: Rect) -> "ValueGrid":
        _check_inside(r, self.rect)
        sl = tuple(slice(l - o, h - o + 1) for l, h, o in zip(r.lo, r.hi, self.origin))
        return ValueGrid(r.lo, self.values[sl])


@dataclass(frozen=True)
class PrefixTable:
    """Anchored partial sums: entry n holds the sum over [origin, n]."""

    origin: tuple
    table: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return len(self.origin)

    @property
    def rect(self) -> Rect:
        return Rect(self.origin, tuple(o + e - 1 for o, e in zip(self.origin, self.table.shape)))


def prefix_sums(values: np.ndarray, axes=None) -> np.ndarray:
    """Cumulative sums along ``axes`` (default: all), dimension 1 first."""
    out = np.array(values, dtype=np.float64, copy=True)
    if axes is None:
        axes = range(out.ndim)
    for ax in axes:
        np.cumsum(out, axis=ax, out=out)
    return out


def build_prefix_table(grid: ValueGrid) -> PrefixTable:
    table = prefix_sums(grid.values)
    table.setflags(write=False)
    return PrefixTable(grid.origin, table)


def _check_inside(r: Rect, domain: Rect) -> None:
    if r.d != domain.d:
        raise DomainError(f"box has dimension {r.d}, domain has {domain.d}")
    for q in range(r.d):
        if r.lo[q] < domain.lo[q] or r.hi[q] > domain.hi[q]:
            raise DomainError(
                f"coordinate {q + 1}: box range [{r.lo[q]}, {r.hi[q]}] "
                f"leaves domain range [{domain.lo[q]}, {domain.hi[q]}]"
            )


def sum_over_rect(table: PrefixTable, r: Rect) -> float:
    """Sum of the grid over ``r`` by 2^d-term inclusion-exclusion."""
    _check_inside(r, table.rect)
    hi = [h - o for h, o in zip(r.hi, table.origin)]
    lo = [l - o - 1 for l, o in zip(r.lo, table.origin)]
    total = 0.0
    for lowered in itertools.product((False, True), repeat=r.d):
        corner = tuple(lo[q] if lowered[q] else hi[q] for q in range(r.d))
        # a lowered face below the origin contributes nothing
        if min(corner) < 0:
            continue
        sign = -1.0 if sum(lowered) % 2 else 1.0
        total += sign * table.table[corner]
    return float(total)


def dyadic_indices(max_exponent: int, d: int) -> list:
    """All n with every coordinate in {1, 2, 4, ..., 2^max_exponent}."""
    if max_exponent < 0:
        raise ValueError("max_exponent must be >= 0")
    powers = [2**k for k in range(max_exponent + 1)]
    return list(itertools.product(powers, repeat=d))
