"""Slowly varying normalizers, the Young functions x^p (1 + log(1 + x))^r,
Luxemburg norms and weak-L^p norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .innovations import InnovationSpec


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its stated accuracy."""


def slow_log(x):
    """L(x) = max(ln x, 1) for x > 0."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x <= 0) or np.any(np.isnan(x)):
        raise ValueError("L is defined on (0, inf)")
    out = np.maximum(np.log(x), 1.0)
    return float(out) if out.ndim == 0 else out


def slow_log_log(x):
    """LL(x) = L(L(x))."""
    return slow_log(slow_log(x))


@dataclass(frozen=True)
class OrliczParams:
    """Exponents of phi(x) = x^p (1 + log(1 + x))^r.

    The norm statements use p > 1.  The Hoelder corollaries also need
    p = 2 * gamma, which can drop to (0, 1]; the Luxemburg functional is
    still well defined there (it is a quasi-norm), so only p > 0 is
    enforced.
    """

    p: float = 2.0
    r: float = 0.0

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError(f"p must be positive, got {self.p}")
        if not self.r >= 0:
            raise ValueError(f"r must be nonnegative, got {self.r}")


def phi(params: OrliczParams, x):
    x = np.asarray(x, dtype=np.float64)
    out = x**params.p
    if params.r:
        out = out * (1.0 + np.log1p(x)) ** params.r
    return float(out) if out.ndim == 0 else out


def _luxemburg(values: np.ndarray, weights, params: OrliczParams, tol: float) -> float:
    """Root of sum_k w_k phi(|v_k| / lam) = 1 by bisection on log(lam)."""
    a = np.abs(values)
    if weights is not None:
        keep = weights > 0
        a, weights = a[keep], weights[keep]
    scale = a.max() if a.size else 0.0
    if scale == 0.0:
        return 0.0
    y = a / scale

    if weights is None:
        def mean_phi(lam):
            return float(np.mean(phi(params, y / lam)))
    else:
        def mean_phi(lam):
            return float(np.dot(weights, phi(params, y / lam)))

    lo, hi = 1e-12, 4.0 * (1.0 + params.r)
    while mean_phi(hi) > 1.0:
        hi *= 4.0
    while mean_phi(lo) < 1.0:
        lo /= 1e3
        if lo < 1e-300:
            raise NumericError("could not bracket the Luxemburg norm")
    for _ in range(300):
        mid = np.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            break
        if mean_phi(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    lam = hi
    if abs(mean_phi(lam) - 1.0) > tol:
        raise NumericError(f"bisection ended with |E phi - 1| = {abs(mean_phi(lam) - 1.0):.3g} > {tol}")
    return float(scale * lam)


def orlicz_norm_samples(samples, params: OrliczParams, tol: float = 1e-10) -> float:
    """Luxemburg norm of the empirical law of ``samples``.

    Bisection runs to the resolution of double precision; ``tol`` is the
    accuracy demanded on the expectation scale and is checked at the end.
    All-zero samples have norm 0.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite sample value")
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _luxemburg(x, None, params, tol)


def orlicz_norm_law(values, weights, params: OrliczParams, tol: float = 1e-10) -> float:
    """Luxemburg norm of the discrete law sum_k w_k delta_{v_k}."""
    v = np.asarray(values, dtype=np.float64).ravel()
    w = np.asarray(weights, dtype=np.float64).ravel()
    if v.shape != w.shape:
        raise ValueError("values and weights differ in length")
    return _luxemburg(v, w / w.sum(), params, tol)


def orlicz_norm_quadrature(dist: InnovationSpec, params: OrliczParams, nodes: int = 200) -> float:
    x, w = dist.quadrature(nodes)
    return orlicz_norm_law(x, w, params)


def orlicz_norm_with_se(samples, params: OrliczParams, batches: int = 20):
    """Norm of the pooled samples and a batch-means standard error."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    est = orlicz_norm_samples(x, params)
    if x.size < 2 * batches:
        return est, float("nan")
    parts = [orlicz_norm_samples(b, params) for b in np.array_split(x, batches)]
    return est, float(np.std(parts, ddof=1) / np.sqrt(batches))


def weak_lp_norm_samples(samples, p: float) -> float:
    """(sup_t t^p P(|X| > t))^(1/p) under the empirical law.

    The supremum sits just below an order statistic, so with |x| sorted in
    decreasing order it equals max_k |x|_(k)^p k / n.
    """
    x = np.abs(np.asarray(samples, dtype=np.float64).ravel())
    if x.size == 0:
        raise ValueError("no samples")
    if not 1.0 < p < 2.0:
        raise ValueError("weak L^p norm is used for 1 < p < 2")
    a = np.sort(x)[::-1]
    k = np.arange(1, a.size + 1)
    return float(np.max(a**p * k / a.size) ** (1.0 / p))


def lp_norm_samples(samples, p: float) -> float:
    x = np.abs(np.asarray(samples, dtype=np.float64).ravel())
    return float(np.mean(x**p) ** (1.0 / p))
