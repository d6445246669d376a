"""Innovation laws and site-addressable random numbers.

All innovation laws are centered with unit variance.  Random draws at a
lattice site are a pure function of ``(seed, stream, site)``: a splitmix64
style mixer hashes the key into 53 uniform bits which are then pushed
through the inverse distribution function.  Overlapping blocks therefore
agree pointwise and blocks can be simulated in any order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

TAGS = ("standard_normal", "rademacher", "centered_uniform", "two_point")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SQRT3 = np.sqrt(3.0)
_NORMAL_CUT = 12.0


class CapabilityError(ValueError):
    """The requested operation is not available for this law or model."""


def _mix(z):
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def site_uniforms(seed: int, coords, stream: int = 0) -> np.ndarray:
    """Uniform(0, 1) variates keyed on (seed, stream, site).

    ``coords`` is a sequence of d integer arrays broadcastable to a common
    shape; the result has that shape.
    """
    coords = np.broadcast_arrays(*[np.asarray(c, dtype=np.int64) for c in coords])
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        h = _mix(h ^ (np.uint64(stream & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + _M2))
        h = np.full(coords[0].shape, h, dtype=np.uint64)
        for c in coords:
            h = _mix(h + c.view(np.uint64) * _M1 + _GOLDEN)
    # (k + 0.5) / 2^53 never hits 0 or 1
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for replication ``keys`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *[k & 0xFFFFFFFF for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class InnovationSpec:
    """Centered unit-variance law of the i.i.d. innovations.

    ``q`` is only used by ``two_point``: the law puts mass q on
    sqrt((1-q)/q) and mass 1-q on -sqrt(q/(1-q)).
    """

    tag: str = "standard_normal"
    q: float = 0.5

    def __post_init__(self):
        if self.tag not in TAGS:
            raise CapabilityError(f"unknown innovation tag {self.tag!r}; expected one of {TAGS}")
        if self.tag == "two_point" and not 0.0 < self.q < 1.0:
            raise ValueError("two_point needs 0 < q < 1")

    @property
    def variance(self) -> float:
        return 1.0

    @property
    def bounded(self) -> bool:
        return self.tag != "standard_normal"

    @property
    def bound(self) -> float:
        """Almost sure bound on |eps| (inf for the normal law)."""
        if self.tag == "standard_normal":
            return np.inf
        if self.tag == "centered_uniform":
            return float(_SQRT3)
        if self.tag == "rademacher":
            return 1.0
        return float(max(np.sqrt((1 - self.q) / self.q), np.sqrt(self.q / (1 - self.q))))

    def atoms(self):
        if self.tag == "rademacher":
            return np.array([1.0, -1.0]), np.array([0.5, 0.5])
        if self.tag == "two_point":
            q = self.q
            return np.array([np.sqrt((1 - q) / q), -np.sqrt(q / (1 - q))]), np.array([q, 1 - q])
        raise CapabilityError(f"{self.tag} has no atoms")

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        if self.tag == "standard_normal":
            return ndtri(u)
        if self.tag == "centered_uniform":
            return _SQRT3 * (2.0 * u - 1.0)
        vals, probs = self.atoms()
        return np.where(u < probs[0], vals[0], vals[1])

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.tag == "standard_normal":
            return rng.standard_normal(shape)
        return self.from_uniform(rng.random(shape))

    def at_sites(self, seed: int, coords, stream: int = 0) -> np.ndarray:
        return self.from_uniform(site_uniforms(seed, coords, stream))

    def quadrature(self, nodes: int = 200):
        """Nodes and weights representing the law, split at 0 for |x| kinks."""
        if self.tag == "standard_normal":
            return _normal_rule(nodes, 1.0)
        if self.tag == "centered_uniform":
            x, w = _split_legendre(nodes, float(_SQRT3))
            return x, w / (2.0 * _SQRT3)
        return self.atoms()

    def difference_quadrature(self, nodes: int = 200):
        """Nodes and weights for the law of eps - eps' with eps' an independent copy."""
        if self.tag == "standard_normal":
            return _normal_rule(nodes, np.sqrt(2.0))
        if self.tag == "centered_uniform":
            width = 2.0 * _SQRT3
            x, w = _split_legendre(nodes, width)
            # triangular density on [-width, width]
            return x, w * (width - np.abs(x)) / (width * width)
        vals, probs = self.atoms()
        diffs = np.subtract.outer(vals, vals).ravel()
        weights = np.multiply.outer(probs, probs).ravel()
        return diffs, weights

    def to_dict(self) -> dict:
        out = {"tag": self.tag}
        if self.tag == "two_point":
            out["q"] = self.q
        return out


@lru_cache(maxsize=32)
def _legendre(nodes: int):
    return np.polynomial.legendre.leggauss(nodes)


def _split_legendre(nodes: int, half_width: float):
    """Gauss-Legendre on [-a, 0] and [0, a], nodes points on each half."""
    t, w = _legendre(nodes)
    x = 0.5 * half_width * (t + 1.0)
    wx = 0.5 * half_width * w
    return np.concatenate([-x[::-1], x]), np.concatenate([wx[::-1], wx])


def _normal_rule(nodes: int, scale: float):
    x, w = _split_legendre(nodes, _NORMAL_CUT)
    dens = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
    return scale * x, w * dens
