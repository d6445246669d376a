"""Martingale projections X_{0,j} and physical dependence coefficients.

Level j of X_0 is

    X_{0,j} = E[X_0 | eps_u, ||u|| <= j] - E[X_0 | eps_u, ||u|| <= j-1],   j >= 1,
    X_{0,0} = E[X_0 | eps_0].

For finite support radius R the levels vanish beyond R and sum to X_0.
All levels of one draw are computed from a single innovation window, so
the telescoping identity holds pathwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .chaos import scaled_hermite
from .fields import (
    IID,
    HermiteFunctional,
    HolderOfLinear,
    Linear,
    Volterra,
    sample_windows,
    value_at_origin,
    window_position,
)
from .innovations import derive_seed
from .lattice import as_index, sup_norm
from .scalars import OrliczParams, orlicz_norm_quadrature, orlicz_norm_with_se

INNER_SIZE = 256


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings shared by the estimators.

    ``n_max`` is the block extent per coordinate used by the maximal
    function estimators; ``p`` is the moment exponent in (1, 2).
    """

    reps: int = 10_000
    seed: int = 0
    n_max: int = 64
    p: float = 1.5
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 1.0 < self.p < 2.0:
            raise ValueError("p must lie in (1, 2)")


def _conditional_tables(model, j_max: int):
    """Boolean masks over window positions selecting ||v|| <= j."""
    R = model.support_radius
    grids = np.meshgrid(*[np.arange(-R, R + 1)] * model.d, indexing="ij")
    radius = np.max(np.abs(np.stack(grids)), axis=0)
    return [radius <= j for j in range(j_max + 1)]


def conditional_means(model, windows: np.ndarray, inner_size: int = INNER_SIZE, seed: int = 0):
    """E[X_0 | eps_u, ||u|| <= j] for j = 0..R, one row per level.

    Returns (array of shape (R+1, reps), method) where method is
    "closed_form", "quadrature" or "nested_mc".
    """
    R = model.support_radius
    reps = windows.shape[0]
    out = np.empty((R + 1, reps))
    if isinstance(model, (IID, Linear)):
        coeffs = {(0,) * model.d: 1.0} if isinstance(model, IID) else model.coeffs.entries
        for j in range(R + 1):
            acc = np.zeros(reps)
            for i, a in coeffs.items():
                if sup_norm(i) <= j:
                    acc += a * windows[(slice(None), *window_position(model, tuple(-c for c in i)))]
            out[j] = acc
        return out, "closed_form"
    if isinstance(model, Volterra):
        for j in range(R + 1):
            acc = np.zeros(reps)
            for (s1, s2), a in model.pairs.entries.items():
                if max(sup_norm(s1), sup_norm(s2)) <= j:
                    e1 = windows[(slice(None), *window_position(model, tuple(-c for c in s1)))]
                    e2 = windows[(slice(None), *window_position(model, tuple(-c for c in s2)))]
                    acc += a * e1 * e2
            out[j] = acc
        return out, "closed_form"
    if isinstance(model, HermiteFunctional):
        for j in range(R + 1):
            a_j, s2 = _partial_linear(model, windows, j)
            acc = np.zeros(reps)
            for q, cq in enumerate(model.hermite, start=1):
                if cq:
                    acc += cq * scaled_hermite(q, a_j, s2)
            out[j] = acc
        return out, "closed_form"
    if isinstance(model, HolderOfLinear):
        gaussian = model.innov.tag == "standard_normal"
        if gaussian:
            nodes, weights = np.polynomial.hermite_e.hermegauss(96)
            weights = weights / math.sqrt(2.0 * math.pi)
        else:
            rng = np.random.default_rng(derive_seed(seed, 1))
            tail_probe = Linear(model.coeffs, model.innov)
            inner = sample_windows(tail_probe, rng, inner_size)
        for j in range(R + 1):
            a_j, s2 = _partial_linear(model, windows, j)
            if j == R:
                out[j] = model.g(a_j) - model.center
                continue
            if gaussian:
                tail_sd = math.sqrt(max(model.coeffs.sum_sq - s2, 0.0))
                vals = model.g(a_j[:, None] + tail_sd * nodes[None, :])
                out[j] = vals @ weights - model.center
            else:
                tail = _partial_linear(model, inner, j, complement=True)[0]
                acc = np.zeros(reps)
                for t in tail:
                    acc += model.g(a_j + t)
                out[j] = acc / inner_size - model.center
        return out, ("quadrature" if gaussian else "nested_mc")
    raise TypeError(f"unsupported model {type(model).__name__}")


def _partial_linear(model, windows, j, complement=False):
    """sum a_i eps_{-i} over ||i|| <= j (or > j) and the matching sum of a_i^2."""
    acc = np.zeros(windows.shape[0])
    s2 = 0.0
    for i, a in model.coeffs.entries.items():
        inside = sup_norm(i) <= j
        if inside != complement:
            acc += a * windows[(slice(None), *window_position(model, tuple(-c for c in i)))]
            s2 += a * a
    return acc, s2


def projection_levels(model, windows: np.ndarray, inner_size: int = INNER_SIZE, seed: int = 0):
    """All levels X_{0,j}, j = 0..R, from one batch of windows: shape (R+1, reps)."""
    cond, method = conditional_means(model, windows, inner_size, seed)
    levels = cond.copy()
    levels[1:] -= cond[:-1]
    return levels, method


@dataclass(frozen=True)
class ProjectionLevel:
    model: object
    j: int
    closed_form: bool
    method: str
    inner_size: int = INNER_SIZE
    notes: tuple = field(default=())

    def sample(self, reps: int, seed: int) -> np.ndarray:
        if self.j > self.model.support_radius:
            return np.zeros(reps)
        rng = np.random.default_rng(seed)
        windows = sample_windows(self.model, rng, reps)
        return projection_levels(self.model, windows, self.inner_size, seed)[0][self.j]


def projection_sampler(model, j: int, inner_size: int = INNER_SIZE) -> ProjectionLevel:
    if j < 0:
        raise ValueError("projection level j must be >= 0")
    if isinstance(model, (IID, Linear, Volterra, HermiteFunctional)):
        return ProjectionLevel(model, j, True, "closed_form", inner_size)
    if isinstance(model, HolderOfLinear):
        if model.innov.tag == "standard_normal":
            return ProjectionLevel(model, j, False, "quadrature", inner_size)
        return ProjectionLevel(
            model, j, False, "nested_mc", inner_size,
            (f"nested Monte Carlo with inner size {inner_size}: conditional means carry O(1/{inner_size}) bias",),
        )
    raise TypeError(f"unsupported model {type(model).__name__}")


def exact_projection_l2(model, j: int):
    """Closed-form ||X_{0,j}||_2 for Linear, IID and Volterra models (None otherwise)."""
    if j > model.support_radius:
        return 0.0
    if isinstance(model, IID):
        return 1.0 if j == 0 else 0.0
    if isinstance(model, Linear):
        return math.sqrt(sum(a * a for a in model.coeffs.shell(j).values()))
    if isinstance(model, Volterra):
        # distinct unordered pairs give orthogonal products eps_{-s1} eps_{-s2}
        merged = {}
        for (s1, s2), a in model.pairs.entries.items():
            if max(sup_norm(s1), sup_norm(s2)) == j:
                key = tuple(sorted((s1, s2)))
                merged[key] = merged.get(key, 0.0) + a
        return math.sqrt(sum(v * v for v in merged.values()))
    return None


def projection_norm(level: ProjectionLevel, params: OrliczParams, mc: McConfig, exact: bool = True):
    """Orlicz norm of X_{0,j}; returns (value, se).

    Linear and Volterra levels have closed forms in L^2; Linear levels with
    Gaussian innovations are Gaussian, so any Orlicz norm is the shell
    standard deviation times the norm of N(0, 1).
    """
    model, j = level.model, level.j
    if j > model.support_radius:
        return 0.0, 0.0
    if exact:
        if (params.p, params.r) == (2.0, 0.0):
            v = exact_projection_l2(model, j)
            if v is not None:
                return v, 0.0
        if isinstance(model, (IID, Linear)) and model.innov.tag == "standard_normal":
            return exact_projection_l2(model, j) * orlicz_norm_quadrature(model.innov, params), 0.0
    if mc.reps < 1000:
        raise ValueError("projection norms need at least 1000 replications")
    samples = level.sample(mc.reps, mc.seed)
    return orlicz_norm_with_se(samples, params)


# -- physical dependence -------------------------------------------------------


@dataclass
class DependenceProfile:
    """Estimates of delta_{2,r}(i) keyed by lattice point."""

    r: float
    delta: dict = field(default_factory=dict)
    se: dict = field(default_factory=dict)
    reps: int = 0

    def to_csv(self, path) -> None:
        d = len(next(iter(self.delta))) if self.delta else 0
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"i{q + 1}" for q in range(d)] + ["delta", "se", "reps"])
            for i in sorted(self.delta):
                w.writerow([*i, repr(self.delta[i]), repr(self.se.get(i, 0.0)), self.reps])

    @classmethod
    def from_csv(cls, path, r: float) -> "DependenceProfile":
        prof = cls(r)
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                idx = tuple(int(row[k]) for k in row if k.startswith("i"))
                prof.delta[idx] = float(row["delta"])
                prof.se[idx] = float(row["se"])
                prof.reps = int(row["reps"])
        return prof


def coupled_differences(model, i, reps: int, seed: int) -> np.ndarray:
    """Draws of X_i - X_i^* with the innovation at the origin redrawn.

    By stationarity this is X_0 minus X_0 with eps_{-i} redrawn, which is
    what the window batch computes.
    """
    i = as_index(i)
    rng = np.random.default_rng(seed)
    windows = sample_windows(model, rng, reps)
    base = value_at_origin(model, windows)
    pos = (slice(None), *window_position(model, tuple(-c for c in i)))
    windows[pos] = model.innov.sample(rng, reps)
    return base - value_at_origin(model, windows)


def physical_dependence(model, i, r: float, mc: McConfig):
    """delta_{2,r}(i) and its standard error; exactly 0 outside the support."""
    i = as_index(i)
    if sup_norm(i) > model.support_radius:
        return 0.0, 0.0
    diffs = coupled_differences(model, i, mc.reps, mc.seed)
    return orlicz_norm_with_se(diffs, OrliczParams(2.0, r))


def dependence_profile(model, r: float, mc: McConfig) -> DependenceProfile:
    R = model.support_radius
    prof = DependenceProfile(r, reps=mc.reps)
    for k, i in enumerate(np.ndindex(*(2 * R + 1,) * model.d)):
        idx = tuple(c - R for c in i)
        sub = McConfig(mc.reps, derive_seed(mc.seed, k), mc.n_max, mc.p)
        prof.delta[idx], prof.se[idx] = physical_dependence(model, idx, r, sub)
    return prof


def shell_aggregate(profile: DependenceProfile, j: int) -> float:
    """sqrt(sum of delta(i)^2 over ||i|| = j); every shell point must be present."""
    d = len(next(iter(profile.delta)))
    shell = [i for i in np.ndindex(*(2 * j + 1,) * d)]
    shell = [tuple(c - j for c in i) for i in shell]
    shell = [i for i in shell if sup_norm(i) == j]
    missing = [i for i in shell if i not in profile.delta]
    if missing:
        raise ValueError(f"profile lacks shell {j} sites: {missing[:10]}{' ...' if len(missing) > 10 else ''}")
    return math.sqrt(sum(profile.delta[i] ** 2 for i in shell))


def holder_dependence_bound(model: HolderOfLinear, i, r: float, nodes: int = 200) -> float:
    """|| H |a_i|^gamma |eps - eps'|^gamma ||_{2,r}, which dominates delta_{2,r}(i) pointwise."""
    from .scalars import orlicz_norm_law

    a = abs(model.coeffs.entries.get(as_index(i), 0.0))
    if a == 0.0:
        return 0.0
    x, w = model.innov.difference_quadrature(nodes)
    vals = model.g.holder_constant * a**model.gamma * np.abs(x) ** model.gamma
    return orlicz_norm_law(vals, w, OrliczParams(2.0, r))
