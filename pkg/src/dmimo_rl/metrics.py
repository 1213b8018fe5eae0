"""Scalar performance metrics over per-user throughput vectors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricSpec:
    """What to reduce a throughput vector to.

    kind: "percentile" (nearest-rank, uses `percentile`), "mean", "jain",
    "product" (mean x Jain index), or "linear" (weights over (mean, jain)).
    """

    kind: str
    percentile: float = 30.0
    weights: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("percentile", "mean", "jain", "product", "linear"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "percentile" and not 0.0 < self.percentile < 100.0:
            raise ValueError("percentile must lie strictly between 0 and 100")
        if not all(np.isfinite(w) for w in self.weights):
            raise ValueError("linear weights must be finite")

    def label(self) -> str:
        if self.kind == "percentile":
            return f"p{self.percentile:g} throughput"
        if self.kind == "product":
            return "mean x Jain"
        if self.kind == "linear":
            return f"{self.weights[0]:g}*mean + {self.weights[1]:g}*jain"
        return self.kind


def _checked(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("metric input must be non-empty")
    if (x < 0).any():
        raise ValueError("throughputs must be non-negative")
    return x


def percentile_throughput(x, p: float) -> float:
    """Nearest-rank percentile: value at rank ceil(p/100 * n) of the sorted vector."""
    x = _checked(x)
    if not 0.0 < p < 100.0:
        raise ValueError("percentile must lie strictly between 0 and 100")
    rank = int(np.ceil(p / 100.0 * x.size))
    return float(np.sort(x)[max(rank, 1) - 1])


def jain_fairness(x) -> float:
    """Jain's fairness index (sum x)^2 / (n * sum x^2), in [1/n, 1].

    An all-zero vector is degenerate 0/0; it is defined as perfectly fair.
    """
    x = _checked(x)
    total_sq = float(np.sum(x)) ** 2
    denom = x.size * float(np.sum(x * x))
    if denom == 0.0:
        warnings.warn("all-zero throughput vector; Jain index defined as 1", stacklevel=2)
        return 1.0
    return total_sq / denom


def scalarize(x, spec: MetricSpec) -> float:
    """Reduce a throughput vector to the scalar the given spec describes."""
    x = _checked(x)
    if spec.kind == "percentile":
        return percentile_throughput(x, spec.percentile)
    if spec.kind == "mean":
        return float(np.mean(x))
    if spec.kind == "jain":
        return jain_fairness(x)
    if spec.kind == "product":
        return float(np.mean(x)) * jain_fairness(x)
    w_mean, w_jain = spec.weights
    return w_mean * float(np.mean(x)) + w_jain * jain_fairness(x)


def moving_average(series, window: int = 50) -> np.ndarray:
    """Trailing mean over the last `window` points (fewer at the start).

    Output has the same length as the input.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        return s.copy()
    csum = np.cumsum(s)
    out = np.empty_like(s)
    head = min(window, s.size)
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if s.size > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out
