"""Probabilists' Hermite polynomials and Hermite expansions of f(N(0, 1)).

H_0 = 1, H_1 = x, H_{q+1} = x H_q - q H_{q-1}, so that E[H_q(N)^2] = q!.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_Q = 20
DEFAULT_NODES = 128


def hermite_eval(q: int, x):
    if q < 0:
        raise ValueError("q must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    h_prev, h = np.ones_like(x), x.copy()
    if q == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, q):
        h_prev, h = h, x * h - k * h_prev
    return h if h.ndim else float(h)


def scaled_hermite(q: int, a, s2):
    """s^q H_q(a / s) with s^2 = ``s2``, written as a polynomial in (a, s^2).

    Uses G_{k+1} = a G_k - k s^2 G_{k-1}; well defined at s = 0, where it
    equals a^q (and a = 0 whenever the conditioning carries no information).
    """
    a = np.asarray(a, dtype=np.float64)
    g_prev, g = np.ones_like(a), a.copy()
    if q == 0:
        return g_prev
    for k in range(1, q):
        g_prev, g = g, a * g - k * s2 * g_prev
    return g


def conditional_hermite_projection(q: int, s: float, u):
    """E[H_q(sU + tV) | U = u] = s^q H_q(u) for independent standard U, V and s^2 + t^2 = 1."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    if q >= 1 and s == 0.0:
        return np.zeros_like(np.asarray(u, dtype=np.float64)) + 0.0
    return s**q * hermite_eval(q, u)


@lru_cache(maxsize=16)
def _gauss_hermite(nodes: int):
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def gaussian_expectation(f, nodes: int = DEFAULT_NODES) -> float:
    """E f(N) by Gauss-Hermite quadrature for the standard normal weight."""
    x, w = _gauss_hermite(nodes)
    return float(np.dot(w, f(x)))


@dataclass(frozen=True)
class HermiteCoeffs:
    """c_1..c_Q in ``c[0..Q-1]``; ``c0`` is E f, the centering term."""

    c: np.ndarray
    c0: float = 0.0
    nodes: int = DEFAULT_NODES
    warnings: tuple = field(default=())

    @property
    def Q(self) -> int:
        return len(self.c)

    def coefficient(self, q: int) -> float:
        if q == 0:
            return self.c0
        return float(self.c[q - 1])

    def resynthesize(self, x):
        from .fields import hermite_series

        return self.c0 + hermite_series(self.c, x)


def hermite_coeffs(f, Q: int = DEFAULT_Q, nodes: int = DEFAULT_NODES) -> HermiteCoeffs:
    """c_q(f) = E[f(N) H_q(N)] / q! by Gauss-Hermite quadrature."""
    if Q < 1:
        raise ValueError("Q must be >= 1")
    warnings = []
    if nodes < 2 * Q:
        warnings.append(f"nodes={nodes} < 2Q={2 * Q}: high-order coefficients lose exactness")
    x, w = _gauss_hermite(nodes)
    fx = np.asarray(f(x), dtype=np.float64)
    c0 = float(np.dot(w, fx))
    out = np.empty(Q)
    h_prev, h = np.ones_like(x), x.copy()
    for q in range(1, Q + 1):
        out[q - 1] = np.dot(w, fx * h) / math.factorial(q)
        h_prev, h = h, x * h - q * h_prev
    return HermiteCoeffs(out, c0, nodes, tuple(warnings))


def series_exponent(d: int, profile: str) -> float:
    if profile == "rectangles":
        return d - 0.5
    if profile == "set_sequence":
        return 0.5
    raise ValueError(f"unknown profile {profile!r}")


def series_terms(c, d: int, profile: str) -> np.ndarray:
    """sqrt(q!) q^e |c_q| for q = 1..Q, assembled in log space."""
    e = series_exponent(d, profile)
    c = np.abs(np.asarray(c, dtype=np.float64))
    q = np.arange(1, len(c) + 1, dtype=np.float64)
    out = np.zeros_like(c)
    nz = c > 0
    lg = np.array([math.lgamma(k + 1.0) for k in q])
    out[nz] = np.exp(0.5 * lg[nz] + e * np.log(q[nz]) + np.log(c[nz]))
    return out


def series_constant(coeffs, d: int, profile: str = "rectangles"):
    """Truncated C(f) = sum_q sqrt(q!) q^e |c_q|; returns (value, tail_flag).

    e = d - 1/2 for sums over rectangles and 1/2 for set sequences.  The
    tail flag is raised when the last term exceeds 1e-6 of the sum.
    """
    c = coeffs.c if isinstance(coeffs, HermiteCoeffs) else coeffs
    terms = series_terms(c, d, profile)
    total = float(terms.sum())
    tail = bool(total > 0 and terms[-1] > 1e-6 * total)
    return total, tail
