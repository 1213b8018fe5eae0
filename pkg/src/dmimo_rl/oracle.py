"""Brute-force reference solvers for small instances.

These exist to check the learners and heuristics against exhaustive optima;
they refuse instances large enough to make enumeration silly.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .mac import GroupTables, MacParams, throughput_from_tables
from .metrics import MetricSpec, scalarize

ENUMERATION_LIMIT = 200_000


def enumerate_channel_plans(n_groups: int, channels: int):
    """All channel plans in lexicographic order, as int arrays."""
    if channels**n_groups > ENUMERATION_LIMIT:
        raise ValueError(f"{channels}^{n_groups} plans is beyond the enumeration limit")
    for combo in product(range(1, channels + 1), repeat=n_groups):
        yield np.array(combo, dtype=int)


def best_channel_plan(
    tables: GroupTables,
    metric: MetricSpec,
    mac: MacParams = MacParams(),
    bandwidth_hz: float = 80e6,
):
    """Exhaustively score every plan for one episode's tables.

    Returns (best_plan, best_value, scored) with `scored` the full list of
    (plan, value) in enumeration order. Ties keep the first (lexicographically
    smallest) plan.
    """
    n_groups = tables.users_per_group.size
    best_plan, best_value, scored = None, -np.inf, []
    for plan in enumerate_channel_plans(n_groups, tables.channels):
        value = scalarize(throughput_from_tables(tables, plan, mac, bandwidth_hz).per_user_throughput_mbps, metric)
        scored.append((plan, value))
        if value > best_value:
            best_plan, best_value = plan, value
    return best_plan, best_value, scored


def coloring_objective(weights: np.ndarray, colors, kind: str = "sum") -> float:
    """Total (or max) same-color edge weight of a coloring."""
    colors = np.asarray(colors, dtype=int)
    same = np.triu(colors[:, None] == colors[None, :], 1) * np.asarray(weights, dtype=float)
    return float(same.max()) if kind == "max" else float(same.sum())


def brute_force_coloring(weights: np.ndarray, colors: int, kind: str = "sum"):
    """Exhaustive minimum over all colorings. Returns (best coloring, objective).

    Vectorized over the full coloring grid; ties keep the lexicographically
    first coloring.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if colors**n > ENUMERATION_LIMIT:
        raise ValueError(f"{colors}^{n} colorings is beyond the enumeration limit")
    grid = np.indices((colors,) * n).reshape(n, -1).T + 1  # (colors^n, n), lexicographic
    objective = np.zeros(grid.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            if w[i, j] > 0:
                same = (grid[:, i] == grid[:, j]) * w[i, j]
                objective = np.maximum(objective, same) if kind == "max" else objective + same
    best = int(np.argmin(objective))
    return grid[best].copy(), float(objective[best])


def random_weighted_graph(rng: np.random.Generator, n: int, edge_prob: float = 1.0) -> np.ndarray:
    """Symmetric non-negative weights with a zero diagonal; weights ~ U(0, 1)."""
    w = np.triu(rng.uniform(0.0, 1.0, size=(n, n)), 1)
    if edge_prob < 1.0:
        w *= np.triu(rng.uniform(size=(n, n)) < edge_prob, 1)
    return w + w.T
