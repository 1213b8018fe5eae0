"""Shared test helpers."""

from statistics import NormalDist

import numpy as np


def chi2_critical(dof: int, alpha: float = 0.01) -> float:
    """Upper critical value via the Wilson-Hilferty approximation (dof >= 30)."""
    z = NormalDist().inv_cdf(1.0 - alpha)
    return dof * (1.0 - 2.0 / (9.0 * dof) + z * np.sqrt(2.0 / (9.0 * dof))) ** 3


def chi2_statistic(counts, expected) -> float:
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(expected, dtype=float)
    return float(((counts - expected) ** 2 / expected).sum())
