"""Model families and their simulation on finite lattice blocks.

Every model is a finite-window functional of an i.i.d. innovation field,
X_j = f(eps_{j-u} : ||u||_inf <= R).  Simulating a block therefore needs the
innovations on the block inflated by the support radius R.

The same model maps also run on *windows*: arrays of shape
``(reps, 2R+1, ..., 2R+1)`` where index ``v + R`` holds eps_v.  A window is
exactly the padded innovation block of the single site 0, so Monte Carlo
routines that only need X_0 draw batches of windows from a numpy Generator
instead of simulating whole blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .innovations import CapabilityError, InnovationSpec
from .lattice import DomainError, Rect, ValueGrid, as_index, sup_norm


class ModelError(ValueError):
    """Inconsistent model definition."""


# -- coefficient fields -------------------------------------------------------


@dataclass(frozen=True)
class CoefficientField:
    """Finitely supported real coefficients a_i on Z^d."""

    entries: dict
    d: int

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.entries).items():
            k = as_index(k)
            if len(k) != self.d:
                raise ModelError(f"index {k} is not {self.d}-dimensional")
            if not np.isfinite(v):
                raise ModelError(f"non-finite coefficient at {k}")
            clean[k] = float(v)
        if not clean:
            raise ModelError("coefficient field is empty")
        object.__setattr__(self, "entries", clean)

    @property
    def support_radius(self) -> int:
        return max(sup_norm(i) for i in self.entries)

    @property
    def sum_abs(self) -> float:
        return float(sum(abs(v) for v in self.entries.values()))

    @property
    def sum_sq(self) -> float:
        return float(sum(v * v for v in self.entries.values()))

    def shell(self, j: int) -> dict:
        return {i: a for i, a in self.entries.items() if sup_norm(i) == j}

    def scaled(self, alpha: float) -> "CoefficientField":
        return CoefficientField({i: alpha * a for i, a in self.entries.items()}, self.d)

    def to_list(self) -> list:
        return [{"index": list(i), "value": a} for i, a in sorted(self.entries.items())]


@dataclass(frozen=True)
class PairCoefficientField:
    """Coefficients a_{s1,s2} of a second order Volterra field; zero diagonal."""

    entries: dict
    d: int

    def __post_init__(self):
        clean = {}
        for (s1, s2), v in dict(self.entries).items():
            s1, s2 = as_index(s1), as_index(s2)
            if len(s1) != self.d or len(s2) != self.d:
                raise ModelError(f"pair ({s1}, {s2}) is not {self.d}-dimensional")
            if s1 == s2 and v != 0:
                raise ModelError(f"diagonal coefficient a_{{s,s}} at s={s1} must vanish")
            if not np.isfinite(v):
                raise ModelError("non-finite coefficient")
            if s1 != s2:
                clean[(s1, s2)] = float(v)
        if not clean:
            raise ModelError("pair coefficient field is empty")
        object.__setattr__(self, "entries", clean)

    @property
    def support_radius(self) -> int:
        return max(max(sup_norm(s1), sup_norm(s2)) for s1, s2 in self.entries)

    @property
    def sum_sq(self) -> float:
        return float(sum(v * v for v in self.entries.values()))

    def get(self, s1, s2) -> float:
        return self.entries.get((tuple(s1), tuple(s2)), 0.0)

    def scaled(self, alpha: float) -> "PairCoefficientField":
        return PairCoefficientField({k: alpha * v for k, v in self.entries.items()}, self.d)

    def to_list(self) -> list:
        return [{"s1": list(a), "s2": list(b), "value": v} for (a, b), v in sorted(self.entries.items())]


# -- Hoelder transforms -------------------------------------------------------

G_TAGS = ("abs_power", "signed_power", "clip", "soft_threshold")


@dataclass(frozen=True)
class GSpec:
    """A Hoelder continuous g from the built-in catalog.

    abs_power and signed_power use ``gamma``; clip uses ``lo``/``hi``;
    soft_threshold uses ``tau``.  clip and soft_threshold are Lipschitz.
    """

    tag: str
    gamma: float = 1.0
    lo: float = -1.0
    hi: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        if self.tag not in G_TAGS:
            raise CapabilityError(f"unknown g tag {self.tag!r}; expected one of {G_TAGS}")
        if self.tag in ("abs_power", "signed_power") and not 0 < self.gamma <= 1:
            raise ModelError("gamma must lie in (0, 1]")
        if self.tag == "clip" and not self.lo <= self.hi:
            raise ModelError("clip needs lo <= hi")
        if self.tag == "soft_threshold" and self.tau < 0:
            raise ModelError("tau must be nonnegative")

    @property
    def exponent(self) -> float:
        return self.gamma if self.tag in ("abs_power", "signed_power") else 1.0

    @property
    def holder_constant(self) -> float:
        if self.tag == "signed_power":
            return 2.0 ** (1.0 - self.gamma)
        return 1.0

    @property
    def odd(self) -> bool:
        return self.tag in ("signed_power", "soft_threshold") or (self.tag == "clip" and self.lo == -self.hi)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.tag == "abs_power":
            return np.abs(x) ** self.gamma
        if self.tag == "signed_power":
            return np.sign(x) * np.abs(x) ** self.gamma
        if self.tag == "clip":
            return np.clip(x, self.lo, self.hi)
        return np.sign(x) * np.maximum(np.abs(x) - self.tau, 0.0)

    def to_dict(self) -> dict:
        out = {"tag": self.tag}
        if self.tag in ("abs_power", "signed_power"):
            out["gamma"] = self.gamma
        elif self.tag == "clip":
            out.update(lo=self.lo, hi=self.hi)
        else:
            out["tau"] = self.tau
        return out


# -- models -------------------------------------------------------------------


def _shifted(eps: np.ndarray, R: int, shift, extents) -> np.ndarray:
    """View of eps_{j - shift} for j over the block, from the R-padded array."""
    sl = tuple(slice(R - s, R - s + e) for s, e in zip(shift, extents))
    return eps[(Ellipsis, *sl)]


def _linear_map(coeffs: CoefficientField, eps, R, extents):
    out = None
    for i, a in sorted(coeffs.entries.items()):
        term = a * _shifted(eps, R, i, extents)
        out = term if out is None else out + term
    return out


@dataclass(frozen=True)
class IID:
    innov: InnovationSpec
    d: int
    tag = "iid"

    @property
    def support_radius(self) -> int:
        return 0

    def apply(self, eps, R, extents):
        return _shifted(eps, R, (0,) * self.d, extents).copy()


@dataclass(frozen=True)
class Linear:
    coeffs: CoefficientField
    innov: InnovationSpec
    tag = "linear"

    @property
    def d(self) -> int:
        return self.coeffs.d

    @property
    def support_radius(self) -> int:
        return self.coeffs.support_radius

    def apply(self, eps, R, extents):
        return _linear_map(self.coeffs, eps, R, extents)


@dataclass(frozen=True)
class HolderOfLinear:
    """X_j = g(Y_j) - E g(Y_0) with Y the linear field of ``coeffs``.

    The centering constant is computed on construction when not supplied.
    """

    coeffs: CoefficientField
    innov: InnovationSpec
    g: GSpec
    center: float = None
    center_se: float = 0.0
    tag = "holder"

    def __post_init__(self):
        if self.center is None:
            c, se = holder_center(self.g, self.coeffs, self.innov)
            object.__setattr__(self, "center", c)
            object.__setattr__(self, "center_se", se)

    @property
    def gamma(self) -> float:
        return self.g.exponent

    @property
    def d(self) -> int:
        return self.coeffs.d

    @property
    def support_radius(self) -> int:
        return self.coeffs.support_radius

    def apply(self, eps, R, extents):
        return self.g(_linear_map(self.coeffs, eps, R, extents)) - self.center


@dataclass(frozen=True)
class Volterra:
    pairs: PairCoefficientField
    innov: InnovationSpec
    tag = "volterra"

    @property
    def d(self) -> int:
        return self.pairs.d

    @property
    def support_radius(self) -> int:
        return self.pairs.support_radius

    def apply(self, eps, R, extents):
        out = None
        for (s1, s2), a in sorted(self.pairs.entries.items()):
            term = a * _shifted(eps, R, s1, extents) * _shifted(eps, R, s2, extents)
            out = term if out is None else out + term
        return out


@dataclass(frozen=True)
class HermiteFunctional:
    """X_j = sum_{q>=1} c_q H_q(Y_j), Y a unit-variance Gaussian linear field.

    ``hermite[q-1]`` holds c_q.
    """

    coeffs: CoefficientField
    hermite: tuple
    innov: InnovationSpec = field(default_factory=InnovationSpec)
    tag = "hermite"

    def __post_init__(self):
        if self.innov.tag != "standard_normal":
            raise ModelError("Hermite functionals need standard normal innovations")
        if abs(self.coeffs.sum_sq - 1.0) > 1e-12:
            raise ModelError(f"coefficients must satisfy sum a_i^2 = 1, got {self.coeffs.sum_sq!r}")
        object.__setattr__(self, "hermite", tuple(float(c) for c in self.hermite))
        if not self.hermite:
            raise ModelError("need at least one Hermite coefficient")

    @property
    def d(self) -> int:
        return self.coeffs.d

    @property
    def support_radius(self) -> int:
        return self.coeffs.support_radius

    def apply(self, eps, R, extents):
        y = _linear_map(self.coeffs, eps, R, extents)
        return hermite_series(self.hermite, y)


def hermite_series(c, y) -> np.ndarray:
    """sum_{q=1}^Q c_q H_q(y) by the three-term recurrence."""
    y = np.asarray(y, dtype=np.float64)
    h_prev, h = np.ones_like(y), y.copy()
    out = np.zeros_like(y)
    for q, cq in enumerate(c, start=1):
        if cq:
            out += cq * h
        h_prev, h = h, y * h - q * h_prev
    return out


MODEL_TYPES = (IID, Linear, HolderOfLinear, Volterra, HermiteFunctional)


# -- simulation ---------------------------------------------------------------


def innovation_block(innov: InnovationSpec, rect: Rect, seed: int, stream: int = 0) -> np.ndarray:
    axes = [np.arange(l, h + 1, dtype=np.int64) for l, h in zip(rect.lo, rect.hi)]
    coords = np.meshgrid(*axes, indexing="ij", sparse=True)
    return innov.at_sites(seed, coords, stream)


def simulate_block(model, block: Rect, seed: int) -> ValueGrid:
    """Realization of ``model`` on ``block``; a pure function of (model, block, seed)."""
    if block.d != model.d:
        raise DomainError(f"block is {block.d}-dimensional, model is {model.d}-dimensional")
    R = model.support_radius
    eps = innovation_block(model.innov, block.inflate(R), seed)
    return ValueGrid(block.lo, model.apply(eps, R, block.extents))


def simulate_coupled_pair(model, block: Rect, seed: int, swap_site):
    """Two realizations that share every innovation except the one at ``swap_site``."""
    swap_site = as_index(swap_site)
    first = simulate_block(model, block, seed)
    R = model.support_radius
    padded = block.inflate(R)
    eps = innovation_block(model.innov, padded, seed)
    if padded.contains(swap_site):
        idx = tuple(s - l for s, l in zip(swap_site, padded.lo))
        fresh = model.innov.at_sites(seed, [np.array(c) for c in swap_site], stream=1)
        eps[idx] = float(fresh)
    second = ValueGrid(block.lo, model.apply(eps, R, block.extents))
    return first, second


def sample_windows(model, rng: np.random.Generator, reps: int) -> np.ndarray:
    """``reps`` independent innovation windows around the origin."""
    w = 2 * model.support_radius + 1
    return model.innov.sample(rng, (reps,) + (w,) * model.d)


def value_at_origin(model, windows: np.ndarray) -> np.ndarray:
    """X_0 for each window of a batch (shape (reps,))."""
    R = model.support_radius
    out = model.apply(windows, R, (1,) * model.d)
    return out.reshape(windows.shape[0])


def window_position(model, v) -> tuple:
    """Array index of lattice point v inside a window (batch axis excluded)."""
    R = model.support_radius
    if sup_norm(v) > R:
        raise DomainError(f"point {v} outside the window of radius {R}")
    return tuple(c + R for c in v)


# -- centering of Hoelder functionals ----------------------------------------


def holder_center(g: GSpec, coeffs: CoefficientField, innov: InnovationSpec,
                  method: str = "auto", reps: int = 400_000, seed: int = 0):
    """E g(Y_0) for the linear field Y of ``coeffs``; returns (value, se).

    Gaussian innovations make Y_0 normal and the expectation is computed by
    adaptive quadrature (se = 0).  Otherwise it is a Monte Carlo mean.
    """
    if not isinstance(g, GSpec):
        raise CapabilityError(f"g must come from the catalog {G_TAGS}")
    if method == "auto":
        method = "quadrature" if innov.tag == "standard_normal" else "mc"
    if method == "quadrature":
        if innov.tag != "standard_normal":
            raise CapabilityError("quadrature centering needs Gaussian innovations")
        if g.odd:
            return 0.0, 0.0
        sd = math.sqrt(coeffs.sum_sq)

        def integrand(x):
            return float(g(sd * x)) * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)

        left, _ = integrate.quad(integrand, -np.inf, 0.0, epsabs=1e-13, epsrel=1e-12, limit=200)
        right, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
        return left + right, 0.0
    if method != "mc":
        raise ValueError(f"unknown centering method {method!r}")
    rng = np.random.default_rng(seed)
    probe = Linear(coeffs, innov)
    vals = g(value_at_origin(probe, sample_windows(probe, rng, reps)))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(reps))


# -- export -------------------------------------------------------------------


def write_grid_binary(grid: ValueGrid, path) -> None:
    """Header of int64 LE (d, origin..., extents...) then float64 LE values, dimension 1 major."""
    header = np.array([grid.d, *grid.origin, *grid.extents], dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(grid.values, dtype="<f8").tobytes(order="C"))


def read_grid_binary(path) -> ValueGrid:
    raw = open(path, "rb").read()
    d = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    head = np.frombuffer(raw[: 8 * (1 + 2 * d)], dtype="<i8")
    origin, extents = tuple(int(v) for v in head[1 : 1 + d]), tuple(int(v) for v in head[1 + d :])
    values = np.frombuffer(raw[8 * (1 + 2 * d) :], dtype="<f8").reshape(extents)
    return ValueGrid(origin, values.copy())


def write_grid_csv(grid: ValueGrid, path) -> None:
    cols = [f"i{q + 1}" for q in range(grid.d)] + ["value"]
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for pt in grid.rect.points():
            fh.write(",".join(str(c) for c in pt) + "," + repr(grid.value_at(pt)) + "\n")


# -- dict round trip (used by the experiment configs) ----------------------------


def _coeffs_from(obj, d) -> CoefficientField:
    return CoefficientField({tuple(e["index"]): e["value"] for e in obj}, d)


def model_from_dict(obj: dict):
    """Build a model from its JSON description.

    ``{"family": "linear", "d": 2, "innovation": {"tag": "rademacher"},
    "coefficients": [{"index": [0, 0], "value": 1.0}]}``; Volterra models
    use ``"pairs": [{"s1": [...], "s2": [...], "value": v}]``, Hoelder
    models add ``"g": {"tag": "abs_power", "gamma": 0.5}`` and Hermite
    functionals ``"hermite": [c_1, c_2, ...]``.
    """
    family = obj.get("family")
    d = int(obj["d"])
    innov = InnovationSpec(**obj.get("innovation", {"tag": "standard_normal"}))
    if family == "iid":
        return IID(innov, d)
    if family == "linear":
        return Linear(_coeffs_from(obj["coefficients"], d), innov)
    if family == "holder":
        return HolderOfLinear(_coeffs_from(obj["coefficients"], d), innov, GSpec(**obj["g"]),
                              obj.get("center"))
    if family == "volterra":
        pairs = {(tuple(e["s1"]), tuple(e["s2"])): e["value"] for e in obj["pairs"]}
        return Volterra(PairCoefficientField(pairs, d), innov)
    if family == "hermite":
        return HermiteFunctional(_coeffs_from(obj["coefficients"], d), tuple(obj["hermite"]), innov)
    raise ModelError(f"unknown model family {family!r}")


def model_to_dict(model) -> dict:
    out = {"family": model.tag, "d": model.d, "innovation": model.innov.to_dict(),
           "support_radius": model.support_radius}
    if isinstance(model, (Linear, HolderOfLinear, HermiteFunctional)):
        out["coefficients"] = model.coeffs.to_list()
    if isinstance(model, HolderOfLinear):
        out["g"] = model.g.to_dict()
        out["center"] = model.center
        out["center_se"] = model.center_se
    if isinstance(model, Volterra):
        out["pairs"] = model.pairs.to_list()
    if isinstance(model, HermiteFunctional):
        out["hermite"] = list(model.hermite)
    return out
