"""Right-hand sides of the maximal inequalities, without their absolute constants.

The constants c_{p,d}, K(p), K(p, d, C, delta) and the Hoelder constant of
g are not known explicitly, so every value here is the constant-free
series; reports carry ``constant_free=True`` to make that explicit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .chaos import series_constant
from .fields import IID, CoefficientField, HermiteFunctional, HolderOfLinear, Linear, Volterra
from .lattice import sup_norm
from .projections import DependenceProfile, shell_aggregate
from .scalars import OrliczParams, orlicz_norm_quadrature, slow_log

PROFILES = ("rect_d_half", "union_d_logp")

# homogeneity of each shell factor under a -> alpha a
SCALING_DEGREE = {"linear": "1", "holder": "gamma", "volterra": "1", "hermite": "1", "phys_dep": "1"}


@dataclass(frozen=True)
class WeightProfile:
    """rect_d_half: (j+1)^{d/2}; union_d_logp: (j+1)^d L(max(j, 1))^{1/p}."""

    tag: str
    d: int
    p: float = 1.5

    def __post_init__(self):
        if self.tag not in PROFILES:
            raise ValueError(f"unknown weight profile {self.tag!r}")

    def weight(self, j: int) -> float:
        if self.tag == "rect_d_half":
            return (j + 1) ** (self.d / 2)
        return (j + 1) ** self.d * slow_log(max(j, 1)) ** (1.0 / self.p)

    @property
    def r(self) -> float:
        """Logarithmic exponent of the Orlicz norms used with this profile."""
        return self.d - 1.0 if self.tag == "rect_d_half" else 0.0


@dataclass
class BoundReport:
    terms: list
    weights: list
    shell_norms: list
    partial_sums: list
    total: float
    tail_flag: bool
    constant_free: bool = True
    inputs: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def bound_series(weights: WeightProfile, shell_norms, J_max: int = None, inputs: dict = None,
                 support_radius: int = None) -> BoundReport:
    """sum_{j <= J_max} weight(j) shell_norm(j).

    The tail flag marks a last term above 1e-6 of the sum, unless
    ``support_radius`` is given and J_max reaches it (the series is then
    exact).
    """
    norms = [float(v) for v in shell_norms]
    if any(v < 0 or not math.isfinite(v) for v in norms):
        raise ValueError("shell norms must be finite and nonnegative")
    if J_max is None:
        J_max = len(norms) - 1
    norms = (norms + [0.0] * (J_max + 1))[: J_max + 1]
    w = [weights.weight(j) for j in range(J_max + 1)]
    terms = [a * b for a, b in zip(w, norms)]
    partial = list(np.cumsum(terms))
    total = float(partial[-1])
    tail = bool(total > 0 and terms[-1] > 1e-6 * total)
    if support_radius is not None and J_max >= support_radius:
        tail = False
    return BoundReport(terms, w, norms, [float(s) for s in partial], total, tail, True,
                       {"profile": weights.tag, "d": weights.d, "p": weights.p, "J_max": J_max, **(inputs or {})})


def bound_linear_sets(sum_abs_a: float, C: float, delta: float, p: float, eps_l2: float) -> float:
    """C^{1/p} delta^{-1/2} ||eps_0||_2 sum|a_j| (the factor K(p) is omitted)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if C <= 0:
        raise ValueError("C must be positive")
    if not 1 < p < 2:
        raise ValueError("p must lie in (1, 2)")
    return C ** (1.0 / p) * delta**-0.5 * eps_l2 * sum_abs_a


# -- shell factors --------------------------------------------------------------


def holder_shell(coeffs, gamma: float, innov, j: int, r: float) -> float:
    """(sum_{||i||=j} |a_i|^{2 gamma})^{1/2} ||eps_0||_{2 gamma, r}."""
    s = sum(abs(a) ** (2 * gamma) for a in coeffs.shell(j).values())
    if s == 0:
        return 0.0
    return math.sqrt(s) * orlicz_norm_quadrature(innov, OrliczParams(2 * gamma, r))


def hermite_shell(coeffs, c_f: float, j: int) -> float:
    """(sum_{||i||=j} a_i^2)^{1/2} C(f)."""
    return math.sqrt(sum(a * a for a in coeffs.shell(j).values())) * c_f


def volterra_shell(pairs, innov, j: int, r: float) -> float:
    """(sum_{||s1||=j} sum_{||s2||<=j} (a_{s1,s2}^2 + a_{s2,s1}^2))^{1/2} ||eps_0||_{2,r}^2."""
    total = 0.0
    for (s1, s2), a in pairs.entries.items():
        n1, n2 = sup_norm(s1), sup_norm(s2)
        # a_{s1,s2}^2 is counted once for each ordering that lands in the sum
        if n1 == j and n2 <= j:
            total += a * a
        if n2 == j and n1 <= j:
            total += a * a
    if total == 0:
        return 0.0
    return math.sqrt(total) * orlicz_norm_quadrature(innov, OrliczParams(2.0, r)) ** 2


def shell_coefficients(model, kind: str, j: int, profile: str = "rect_d_half",
                       dependence: DependenceProfile = None) -> float:
    """Shell factor of level j for the corollary matching ``kind``.

    ``profile`` selects the rectangle version (Orlicz exponent r = d - 1,
    series exponent d - 1/2) or the set-sequence version (r = 0, exponent
    1/2).
    """
    rect = profile == "rect_d_half"
    r = model.d - 1.0 if rect else 0.0
    if kind == "holder":
        if isinstance(model, HolderOfLinear):
            return holder_shell(model.coeffs, model.gamma, model.innov, j, r)
        if isinstance(model, Linear):
            return holder_shell(model.coeffs, 1.0, model.innov, j, r)
        if isinstance(model, IID):
            return holder_shell(CoefficientField({(0,) * model.d: 1.0}, model.d), 1.0, model.innov, j, r)
    elif kind == "hermite" and isinstance(model, HermiteFunctional):
        c_f, _ = series_constant(model.hermite, model.d, "rectangles" if rect else "set_sequence")
        return hermite_shell(model.coeffs, c_f, j)
    elif kind == "volterra" and isinstance(model, Volterra):
        return volterra_shell(model.pairs, model.innov, j, r)
    elif kind == "phys_dep":
        if dependence is None:
            raise ValueError("phys_dep needs a DependenceProfile")
        if dependence.r != r:
            raise ValueError(f"profile {profile} needs delta_(2,{r}), got r={dependence.r}")
        return shell_aggregate(dependence, j)
    raise ValueError(f"kind {kind!r} does not match model {type(model).__name__}")


def default_kind(model) -> str:
    return {IID: "holder", Linear: "holder", HolderOfLinear: "holder", HermiteFunctional: "hermite", Volterra: "volterra"}.get(
        type(model), "phys_dep"
    )


def model_bound(model, profile: str = "rect_d_half", p: float = 1.5, kind: str = None,
                dependence: DependenceProfile = None) -> BoundReport:
    """Constant-free bound series of a finite-support model, exact at J_max = R."""
    kind = kind or default_kind(model)
    R = model.support_radius
    norms = [shell_coefficients(model, kind, j, profile, dependence) for j in range(R + 1)]
    rep = bound_series(WeightProfile(profile, model.d, p), norms, R,
                       {"kind": kind, "model": model.tag, "support_radius": R,
                        "scaling_degree": SCALING_DEGREE[kind]}, support_radius=R)
    return rep
