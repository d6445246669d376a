"""Summation region sequences: growth certificates and residue partitions.

A region sequence is admissible for the set-indexed bounds when its
cardinalities satisfy l_{n+1} >= l_n >= exp(n^delta) together with a
domination condition on sum_k sqrt(l_k / LL(l_k)).  The domination
condition is checked in two readings: with l_n / LL(l_n) on the right
(``C_linear``) and with its square root (``C_sqrt``).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import Rect
from .scalars import slow_log_log


class GrowthError(ValueError):
    """The cardinalities violate the growth conditions."""


# -- regions ------------------------------------------------------------------


@dataclass(frozen=True)
class RectUnion:
    boxes: tuple

    def __post_init__(self):
        boxes = tuple(b if isinstance(b, Rect) else Rect(*b) for b in self.boxes)
        if not boxes:
            raise ValueError("a union needs at least one box")
        d = boxes[0].d
        if any(b.d != d for b in boxes):
            raise ValueError("boxes of mixed dimension")
        for a, b in itertools.combinations(boxes, 2):
            if all(max(a.lo[q], b.lo[q]) <= min(a.hi[q], b.hi[q]) for q in range(d)):
                raise ValueError(f"boxes {a} and {b} overlap")
        object.__setattr__(self, "boxes", boxes)

    @property
    def d(self) -> int:
        return self.boxes[0].d

    @property
    def J(self) -> int:
        return len(self.boxes)

    @property
    def cardinality(self) -> int:
        return sum(b.cardinality for b in self.boxes)

    @property
    def min_side(self) -> int:
        """Smallest hi_q - lo_q over all boxes and coordinates."""
        return min(h - l for b in self.boxes for l, h in zip(b.lo, b.hi))

    @property
    def bounding_box(self) -> Rect:
        lo = tuple(min(b.lo[q] for b in self.boxes) for q in range(self.d))
        hi = tuple(max(b.hi[q] for b in self.boxes) for q in range(self.d))
        return Rect(lo, hi)

    def points(self):
        for b in self.boxes:
            yield from b.points()

    def to_json(self) -> str:
        return json.dumps({"d": self.d, "boxes": [b.to_dict() for b in self.boxes]})

    @classmethod
    def from_json(cls, text: str) -> "RectUnion":
        obj = json.loads(text)
        u = cls(tuple(Rect(tuple(b["lo"]), tuple(b["hi"])) for b in obj["boxes"]))
        if u.d != obj["d"]:
            raise ValueError(f"declared d={obj['d']} but boxes are {u.d}-dimensional")
        return u


@dataclass(frozen=True)
class GrowthCertificate:
    delta: float
    C_sqrt: float
    C_linear: float
    horizon: int
    delta_grid: float = None


@dataclass
class SetSequence:
    """Regions Lambda_1, Lambda_2, ... (RectUnion or explicit point lists)."""

    regions: list
    certificate: GrowthCertificate = None

    @property
    def cardinalities(self) -> list:
        return [r.cardinality if isinstance(r, RectUnion) else len(set(map(tuple, r))) for r in self.regions]


# -- growth conditions ----------------------------------------------------------


def _required_constants(cards):
    ell = np.asarray(cards, dtype=np.float64)
    ll = np.array([slow_log_log(v) for v in ell])
    partial = np.cumsum(np.sqrt(ell / ll))
    return partial / (ell / ll), partial / np.sqrt(ell / ll)


def validate_growth(cards, horizon: int = None, allow_reindex: bool = False) -> GrowthCertificate:
    """Best delta and both domination constants for l_1, ..., l_horizon.

    delta_best = min over 2 <= n <= horizon of ln(ln l_n) / ln n, clamped
    to (0, 1].  At n = 1 the condition reads l_1 >= e for every delta.
    A sequence that never grows over the horizon is rejected: its log-log
    slope tends to 0, so no fixed delta survives a longer horizon.

    With ``allow_reindex`` leading terms below e are dropped first.
    """
    cards = [int(c) for c in cards]
    if horizon is not None:
        cards = cards[:horizon]
    if not cards:
        raise GrowthError("no cardinalities")
    if min(cards) < 1:
        raise GrowthError("cardinalities must be >= 1")
    for n in range(1, len(cards)):
        if cards[n] < cards[n - 1]:
            raise GrowthError(f"cardinalities decrease at n={n + 1}: {cards[n - 1]} > {cards[n]}")
    if allow_reindex:
        while cards and cards[0] < math.e:
            cards = cards[1:]
        if not cards:
            raise GrowthError("every term is below e")
    if cards[0] < math.e:
        raise GrowthError(f"fails at n=1: l_1 = {cards[0]} < e = exp(1^delta)")
    if len(cards) >= 2 and cards[-1] == cards[0]:
        raise GrowthError(f"sequence is constant ({cards[0]}) over the horizon; exp(n^delta) growth impossible")
    ratios = []
    for n in range(2, len(cards) + 1):
        lnl = math.log(cards[n - 1])
        if lnl <= 1.0:
            raise GrowthError(f"fails at n={n}: ln ln l_n <= 0")
        ratios.append(math.log(math.log(cards[n - 1])) / math.log(n))
    delta = min(1.0, min(ratios)) if ratios else 1.0
    if delta <= 0:
        raise GrowthError("nonpositive log-log slope")
    c_lin, c_sqrt = _required_constants(cards)
    grid = _delta_grid(cards)
    return GrowthCertificate(delta, float(c_sqrt.max()), float(c_lin.max()), len(cards), grid)


def _delta_grid(cards, step: float = 1e-4) -> float:
    """Largest delta on a 1e-4 grid of (0, 1] with l_n >= exp(n^delta) for all n."""
    n = np.arange(1, len(cards) + 1, dtype=np.float64)
    lnl = np.log(np.asarray(cards, dtype=np.float64))
    grid = np.arange(1, int(round(1 / step)) + 1) * step
    ok = np.all(n[None, :] ** grid[:, None] <= lnl[None, :] * (1 + 1e-12), axis=1)
    return float(grid[ok].max()) if ok.any() else 0.0


def check_growth(cards, cert: GrowthCertificate) -> bool:
    """Replay both conditions with the certified constants."""
    cards = [int(c) for c in cards][: cert.horizon]
    for n, l in enumerate(cards, start=1):
        if math.log(l) < n**cert.delta * (1 - 1e-12):
            return False
    c_lin, c_sqrt = _required_constants(cards)
    return bool(np.all(c_lin <= cert.C_linear * (1 + 1e-12)) and np.all(c_sqrt <= cert.C_sqrt * (1 + 1e-12)))


def _box_with_card(d: int, target: int, min_points: int = 5) -> tuple:
    side = max(min_points, int(math.floor(target ** (1.0 / d))))
    sides = [side] * (d - 1)
    rest = int(np.prod(sides, dtype=np.int64)) if sides else 1
    sides.append(max(min_points, -(-target // rest)))
    return tuple(sides)


def geometric_union_sequence(d: int, a: float, count: int, allow_reindex: bool = False) -> SetSequence:
    """Nested boxes anchored at 1 with cardinalities tracking floor(a^n).

    Every side spans at least 5 points, so small n are padded up; the
    cardinality of term n lies in [floor(a^n), max(5^d, c floor(a^n))].
    """
    if not a > 1:
        raise ValueError("need a > 1")
    if count < 1:
        raise ValueError("need at least one region")
    regions, prev = [], None
    for n in range(1, count + 1):
        sides = _box_with_card(d, int(math.floor(a**n)))
        if prev is not None:
            sides = tuple(max(s, p) for s, p in zip(sides, prev))
        prev = sides
        regions.append(RectUnion((Rect((1,) * d, sides),)))
    seq = SetSequence(regions)
    try:
        seq.certificate = validate_growth(seq.cardinalities, allow_reindex=allow_reindex)
    except GrowthError as exc:
        raise GrowthError(f"constructed sequence has no growth certificate: {exc}") from exc
    return seq


# -- residue partition ----------------------------------------------------------


def _class_count(lo: int, hi: int, a: int, m: int) -> int:
    """Number of x in [lo, hi] with x = a mod m."""
    return max(0, (hi - a) // m - (lo - 1 - a) // m)


def printed_class_count(lo: int, hi: int, a: int, m: int) -> int:
    """floor((hi-a)/m) - floor((lo-a)/m) + 1, which overcounts unless m divides lo - a."""
    return max(0, (hi - a) // m - (lo - a) // m + 1)


def residue_partition(u: RectUnion, j: int, a) -> list:
    """Points i with (4j+2) i + a in u, in lexicographic order per box."""
    if j < 1:
        raise ValueError("residue partitions use j >= 1")
    m = 4 * j + 2
    a = tuple(int(c) for c in a)
    if len(a) != u.d or any(not 0 <= c <= m - 1 for c in a):
        raise ValueError(f"residue {a} outside [0, {m - 1}]^{u.d}")
    out = []
    for b in u.boxes:
        ranges = [range(-((a[q] - b.lo[q]) // m), (b.hi[q] - a[q]) // m + 1) for q in range(u.d)]
        out.extend(itertools.product(*ranges))
    return out


def residue_card(u: RectUnion, j: int, a, printed: bool = False) -> int:
    """Cardinality of a residue class from the per-axis product formula."""
    m = 4 * j + 2
    count = printed_class_count if printed else _class_count
    total = 0
    for b in u.boxes:
        total += int(np.prod([count(b.lo[q], b.hi[q], a[q], m) for q in range(u.d)], dtype=np.int64))
    return total


@dataclass
class PartitionReport:
    j: int
    modulus: int
    ell: int
    lower_bound: float
    upper_bound: float
    cards: dict = field(default_factory=dict)
    lower_ok: dict = field(default_factory=dict)
    upper_ok: dict = field(default_factory=dict)
    sides_ge_modulus: bool = False
    upper_bound_guaranteed: bool = False

    @property
    def violations(self) -> list:
        return [a for a in self.cards if not (self.lower_ok[a] and self.upper_ok[a])]

    @property
    def all_pass(self) -> bool:
        return not self.violations


def check_partition_bounds(u: RectUnion, j: int) -> PartitionReport:
    """Compare every residue class size with l/((4j+2)^d 4^d) and l/(4j+2)^d.

    ``sides_ge_modulus``: every box spans at least 4j+2 points per axis.
    ``upper_bound_guaranteed``: every span is a multiple of 4j+2, the only
    case in which all classes have exactly l/(4j+2)^d points.
    """
    if u.min_side < 4:
        raise ValueError("boxes need hi_q - lo_q >= 4")
    m = 4 * j + 2
    ell = u.cardinality
    rep = PartitionReport(j, m, ell, ell / (m**u.d * 4**u.d), ell / m**u.d)
    for a in itertools.product(range(m), repeat=u.d):
        c = residue_card(u, j, a)
        rep.cards[a] = c
        rep.lower_ok[a] = c >= rep.lower_bound
        rep.upper_ok[a] = c <= rep.upper_bound
    spans = [h - l + 1 for b in u.boxes for l, h in zip(b.lo, b.hi)]
    rep.sides_ge_modulus = all(s >= m for s in spans)
    rep.upper_bound_guaranteed = all(s % m == 0 for s in spans)
    return rep
