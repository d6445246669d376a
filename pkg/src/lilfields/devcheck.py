"""Monte Carlo checks of the deviation inequalities and the maximal ergodic bound.

Each check evaluates the empirical probability at every grid point from
one shared set of replications (common random numbers), so empirical
probabilities are exactly monotone along the grid.  A point passes when
empirical <= bound + 3 SE.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fields import simulate_block
from .innovations import CapabilityError, InnovationSpec, derive_seed
from .lattice import Rect, prefix_sums
from .parallel import ordered_map


@dataclass
class VerifyReport:
    name: str
    points: list
    empirical: list
    se: list
    bound: list
    passed: list
    reps: int
    params: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return all(self.passed)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "point", "empirical", "se", "bound", "pass"])
        for row in zip(self.points, self.empirical, self.se, self.bound, self.passed):
            w.writerow([self.name, *(repr(v) if isinstance(v, float) else v for v in row)])
        return buf.getvalue()


def _report(name, points, hits, reps, bounds, params) -> VerifyReport:
    emp = [float(h) / reps for h in hits]
    se = [math.sqrt(p * (1 - p) / reps) for p in emp]
    ok = [bool(e <= b + 3 * s) for e, s, b in zip(emp, se, bounds)]
    return VerifyReport(name, [float(x) for x in points], emp, se, [float(b) for b in bounds], ok, reps, params)


def _sums(innov: InnovationSpec, n: int, reps: int, seed: int, chunk: int = 20_000):
    """Sums and sums of squares of n innovations, reps times, generated in chunks."""
    rng = np.random.default_rng(seed)
    s, q = np.empty(reps), np.empty(reps)
    for start in range(0, reps, chunk):
        stop = min(reps, start + chunk)
        d = innov.sample(rng, (stop - start, n))
        s[start:stop] = d.sum(axis=1)
        q[start:stop] = (d * d).sum(axis=1)
    return s, q


def bercu_touati_bound(x, y: float, v2: float):
    return 2.0 * np.exp(-np.asarray(x, dtype=np.float64) ** 2 / (2.0 * (y + v2)))


def check_bercu_touati(innov: InnovationSpec, n: int, x_grid, y: float, reps: int, seed: int) -> VerifyReport:
    """P(|sum d_j| > x, sum d_j^2 <= y) against 2 exp(-x^2 / (2 (y + V^2)))."""
    x_grid = np.asarray(x_grid, dtype=np.float64)
    v2 = n * innov.variance
    s, q = _sums(innov, n, reps, seed)
    inside = q <= y
    hits = [int(np.count_nonzero((np.abs(s) > x) & inside)) for x in x_grid]
    return _report("bercu_touati", x_grid, hits, reps, bercu_touati_bound(x_grid, y, v2),
                   {"innovation": innov.to_dict(), "n": n, "y": y, "V2": v2, "seed": seed})


def bennett_h(u):
    u = np.asarray(u, dtype=np.float64)
    return (1 + u) * np.log1p(u) - u


def freedman_bound(x, y: float, c: float):
    return 2.0 * np.exp(-(y / c**2) * bennett_h(np.asarray(x, dtype=np.float64) * c / y))


def check_freedman(innov: InnovationSpec, n: int, x_grid, y: float, reps: int, seed: int, c: float = None) -> VerifyReport:
    """P(|sum d_i| > x) against 2 exp(-(y/c^2) h(x c / y)) for |d_i| <= c."""
    if not innov.bounded:
        raise CapabilityError("Freedman's inequality needs |d_j| <= c almost surely: there exists a c>0 ...; "
                              f"{innov.tag} is unbounded")
    c = innov.bound if c is None else c
    if c < innov.bound:
        raise ValueError(f"c={c} is below the almost sure bound {innov.bound}")
    if y < n * innov.variance:
        raise ValueError("y must dominate sum E d_i^2")
    x_grid = np.asarray(x_grid, dtype=np.float64)
    s, _ = _sums(innov, n, reps, seed)
    hits = [int(np.count_nonzero(np.abs(s) > x)) for x in x_grid]
    return _report("freedman", x_grid, hits, reps, freedman_bound(x_grid, y, c),
                   {"innovation": innov.to_dict(), "n": n, "y": y, "c": c, "seed": seed})


# -- maximal ergodic bound ---------------------------------------------------------


def log_power_primitive(u, m: int):
    """G(u) = int_1^u (log t)^m dt for u >= 1."""
    u = np.asarray(u, dtype=np.float64)
    lu = np.log(u)
    total = np.zeros_like(u)
    for k in range(m + 1):
        total += (-1) ** (m - k) * math.factorial(m) / math.factorial(k) * lu**k
    return u * total - (-1) ** m * math.factorial(m)


def ergodic_bound(tail_sample, y: float, d: int) -> float:
    """int_1^inf P^(Y > y u 2^{-d}) (log u)^{d-1} du for the empirical law of ``tail_sample``.

    For a step-function tail the integral is exact:
    mean over samples of G(max(Y_s / c, 1)) with c = y 2^{-d}.
    """
    ys = np.asarray(tail_sample, dtype=np.float64).ravel()
    c = y * 2.0**-d
    return float(np.mean(log_power_primitive(np.maximum(ys / c, 1.0), d - 1)))


_TRANSFORMS = {
    "abs": np.abs,
    "square": np.square,
    "none": lambda v: v,
}


def _field_values(field_model, block: Rect, seed: int, transform: str) -> np.ndarray:
    if callable(field_model) and not hasattr(field_model, "support_radius"):
        vals = np.asarray(field_model(block, seed), dtype=np.float64)
    else:
        vals = simulate_block(field_model, block, seed).values
    vals = _TRANSFORMS[transform](vals)
    if np.any(vals < 0):
        raise ValueError("maximal ergodic check needs nonnegative values; apply transform='abs' or 'square'")
    return vals


def max_average(values: np.ndarray) -> float:
    """sup over n in the grid of the average over [1, n]."""
    card = np.ones(values.shape)
    for q, e in enumerate(values.shape):
        card = card * np.arange(1, e + 1).reshape([-1 if k == q else 1 for k in range(values.ndim)])
    return float((prefix_sums(values) / card).max())


def check_maximal_ergodic(field_model, d: int, n_max: int, y_grid, reps: int, seed: int,
                          transform: str = "abs", tail_blocks: int = None, threads: int = 1) -> VerifyReport:
    """P(sup_{n <= n_max 1} average > y) against the integrated single-site tail.

    ``field_model`` is a FieldModel or a callable (block, seed) -> array.
    The tail on the right side comes from independent blocks (split sample).
    """
    if transform not in _TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    y_grid = np.asarray(y_grid, dtype=np.float64)
    block = Rect((1,) * d, (n_max,) * d)

    def one(child):
        return max_average(_field_values(field_model, block, child, transform))

    maxima = np.array(ordered_map(one, [derive_seed(seed, 0, r) for r in range(reps)], threads))
    if tail_blocks is None:
        tail_blocks = max(1, min(reps, 10**6 // block.cardinality))
    tail = np.concatenate([
        _field_values(field_model, block, derive_seed(seed, 1, r), transform).ravel() for r in range(tail_blocks)
    ])
    hits = [int(np.count_nonzero(maxima > y)) for y in y_grid]
    bounds = [ergodic_bound(tail, y, d) for y in y_grid]
    return _report("maximal_ergodic", y_grid, hits, reps, bounds,
                   {"d": d, "n_max": n_max, "transform": transform, "tail_samples": int(tail.size), "seed": seed})
