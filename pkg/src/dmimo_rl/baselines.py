"""Non-learning comparison policies for channel assignment and grouping."""

from __future__ import annotations

import numpy as np

from .radio import (
    LinkGains,
    RadioParams,
    Topology,
    _segment_max,
    as_group_vector,
    associate_users,
    dbm_to_mw,
    group_coupling_mw,
)


def assign_all_same(n_groups: int) -> np.ndarray:
    """Every group on channel 1 (the worst-case starting plan)."""
    return np.ones(n_groups, dtype=int)


def assign_random(rng: np.random.Generator, n_groups: int, channels: int) -> np.ndarray:
    """I.i.d. uniform channel per group."""
    return rng.integers(1, channels + 1, size=n_groups)


def _group_grid(rh_positions: np.ndarray, gvec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(row, col) of each group on the lattice of group centroids."""
    n_groups = int(gvec.max()) + 1
    cx = np.zeros(n_groups)
    cy = np.zeros(n_groups)
    for g in range(n_groups):
        pts = rh_positions[gvec == g]
        cx[g], cy[g] = pts[:, 0].mean(), pts[:, 1].mean()
    xs = np.unique(np.round(cx, 6))
    ys = np.unique(np.round(cy, 6))
    if xs.size * ys.size != n_groups:
        raise ValueError("groups do not sit on a regular grid")
    col = np.searchsorted(xs, np.round(cx, 6))
    row = np.searchsorted(ys, np.round(cy, 6))
    return row, col


def reuse_pattern_plan(rh_positions: np.ndarray, gvec: np.ndarray, channels: int) -> np.ndarray:
    """Latin-square style frequency reuse over the group grid.

    With four channels this is channel = ((row + 2*col) mod 4) + 1, which
    gives no two edge-adjacent groups the same channel and uses each channel
    equally often on a 4x4 grid. Other channel counts fall back to diagonal
    striping (row + col) mod K.
    """
    row, col = _group_grid(rh_positions, gvec)
    if channels == 4:
        return ((row + 2 * col) % 4 + 1).astype(int)
    return ((row + col) % channels + 1).astype(int)


def assign_heuristic_pattern(topology: Topology, grouping=None) -> np.ndarray:
    gvec = topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)
    return reuse_pattern_plan(topology.rh_positions, gvec, topology.channels)


def assign_sensing(
    topology: Topology,
    gains: LinkGains,
    current_plan,
    grouping=None,
    radio: RadioParams = RadioParams(),
) -> np.ndarray:
    """One synchronous sensing round: every group moves to its quietest channel.

    Each group measures the strongest received power per channel (from
    user-serving co-channel groups under the current plan and from
    interferers, aggregated per channel) and picks the minimum-energy
    channel; ties break toward the lowest channel index.
    """
    gvec = topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)
    n_groups = int(gvec.max()) + 1
    plan = np.asarray(current_plan, dtype=int)
    if plan.shape != (n_groups,):
        raise ValueError(f"current plan must have shape ({n_groups},)")
    k = topology.channels

    # Directional received power between groups: at g's best-placed member
    # from h's strongest transmitting member.
    p = topology.rh_tx_mw[:, None] * gains.rh_rh
    np.fill_diagonal(p, 0.0)
    recv = _segment_max(_segment_max(p, gvec, n_groups, 0), gvec, n_groups, 1).T  # (listener g, talker h)
    np.fill_diagonal(recv, 0.0)

    serving = np.bincount(associate_users(topology, gains, gvec).user_group, minlength=n_groups) > 0
    energy = np.zeros((n_groups, k))
    for ch in range(1, k + 1):
        talkers = serving & (plan == ch)
        energy[:, ch - 1] = recv[:, talkers].sum(axis=1)
    if topology.n_interferers:
        intf_recv = _segment_max(
            topology.interferer_tx_mw[:, None] * gains.intf_rh, gvec, n_groups, 1
        ).T  # (g, interferer)
        for ch in range(1, k + 1):
            energy[:, ch - 1] += intf_recv[:, topology.interferer_channels == ch].sum(axis=1)
    return np.argmin(energy, axis=1) + 1


# --- weighted graph coloring (HSUM-style) -------------------------------------


def conflict_weights(topology: Topology, gains: LinkGains, grouping=None, radio: RadioParams = RadioParams()) -> np.ndarray:
    """Symmetric group-by-group interference metric.

    Weight = strongest coupled power between the pair times the number of
    users that receive both groups above the clear-channel threshold (the
    clients in the common interfering region).
    """
    gvec = topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)
    n_groups = int(gvec.max()) + 1
    gg, _ = group_coupling_mw(topology, gains, gvec)
    cca = dbm_to_mw(radio.cca_threshold_dbm)
    heard = _segment_max(topology.rh_tx_mw[:, None] * gains.rh_user, gvec, n_groups, 0) > cca  # (G, U)
    overlap = heard.astype(float) @ heard.astype(float).T
    w = gg * overlap
    np.fill_diagonal(w, 0.0)
    return w


def _coloring_objective(weights: np.ndarray, colors: np.ndarray, kind: str) -> float:
    same = colors[:, None] == colors[None, :]
    picked = np.triu(same, 1) * weights
    if kind == "max":
        return float(picked.max()) if picked.size else 0.0
    return float(picked.sum())


def _greedy_then_descend(w: np.ndarray, channels: int, order, fixed: dict[int, int], free, objective: str):
    n = w.shape[0]
    colors = np.zeros(n, dtype=int)
    for v, c in fixed.items():
        colors[v] = c
    for v in order:
        colored = colors > 0
        costs = [
            w[v, colored & (colors == c)].max(initial=0.0)
            if objective == "max"
            else w[v, colored & (colors == c)].sum()
            for c in range(1, channels + 1)
        ]
        colors[v] = int(np.argmin(costs)) + 1

    best = _coloring_objective(w, colors, objective)
    improved = True
    while improved:
        improved = False
        for v in free:
            current = colors[v]
            for c in range(1, channels + 1):
                if c == current:
                    continue
                colors[v] = c
                obj = _coloring_objective(w, colors, objective)
                if obj < best - 1e-15:
                    best = obj
                    current = c
                    improved = True
                else:
                    colors[v] = current
    return colors, best


def assign_hsum(
    weights: np.ndarray,
    channels: int,
    fixed: dict[int, int] | None = None,
    objective: str = "sum",
    restarts: int = 8,
) -> np.ndarray:
    """Greedy weighted coloring plus 1-vertex local search to a fixed point.

    The primary pass colors vertices in descending weighted-degree order,
    each taking the color with the least incremental same-color weight,
    then single-vertex moves descend the global objective until none
    improves. One descent start gets stuck on dense graphs, so further
    greedy orders (reversed, plus internally seeded shuffles; deterministic)
    are tried and the best fixed point wins. `fixed` pins colors of some
    vertices (interferers occupy a channel but cannot be recolored).
    objective: "sum" (default) or "max".
    """
    if channels < 1:
        raise ValueError("need at least one channel")
    if objective not in ("sum", "max"):
        raise ValueError("objective must be 'sum' or 'max'")
    if restarts < 1:
        raise ValueError("need at least one greedy start")
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n) or not np.allclose(w, w.T) or (w < 0).any():
        raise ValueError("weights must be a symmetric non-negative square matrix")
    fixed = dict(fixed or {})
    for v, c in fixed.items():
        if not 1 <= c <= channels:
            raise ValueError(f"fixed color {c} for vertex {v} out of range")
    free = [v for v in range(n) if v not in fixed]

    primary = sorted(free, key=lambda v: (-w[v].sum(), v))
    orders = [primary, primary[::-1]]
    shuffler = np.random.default_rng(0x5EED)
    while len(orders) < restarts:
        orders.append([free[i] for i in shuffler.permutation(len(free))])

    best_colors, best_obj = None, np.inf
    for order in orders[:restarts]:
        colors, obj = _greedy_then_descend(w, channels, order, fixed, free, objective)
        if obj < best_obj - 1e-15:
            best_colors, best_obj = colors, obj
    return best_colors


def hsum_plan_with_interferers(
    topology: Topology,
    gains: LinkGains,
    grouping=None,
    radio: RadioParams = RadioParams(),
    objective: str = "sum",
) -> np.ndarray:
    """HSUM-style plan where interferers are pre-colored pseudo-vertices."""
    gvec = topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)
    n_groups = int(gvec.max()) + 1
    n_intf = topology.n_interferers
    w_gg = conflict_weights(topology, gains, gvec, radio)
    if n_intf == 0:
        return assign_hsum(w_gg, topology.channels, objective=objective)

    cca = dbm_to_mw(radio.cca_threshold_dbm)
    _, gi = group_coupling_mw(topology, gains, gvec)
    heard_g = _segment_max(topology.rh_tx_mw[:, None] * gains.rh_user, gvec, n_groups, 0) > cca
    heard_i = (topology.interferer_tx_mw[:, None] * gains.intf_user) > cca
    overlap_gi = heard_g.astype(float) @ heard_i.astype(float).T  # (G, I)
    w_gi = gi * overlap_gi

    n = n_groups + n_intf
    w = np.zeros((n, n))
    w[:n_groups, :n_groups] = w_gg
    w[:n_groups, n_groups:] = w_gi
    w[n_groups:, :n_groups] = w_gi.T
    fixed = {n_groups + i: int(topology.interferer_channels[i]) for i in range(n_intf)}
    return assign_hsum(w, topology.channels, fixed=fixed, objective=objective)[:n_groups]


# --- radiohead groupings -------------------------------------------------------


def grouping_adjacent(topology: Topology, group_size: int = 4) -> np.ndarray:
    """Square spatial blocks, row-major, from the radiohead grid."""
    if topology.n_rhs % group_size:
        raise ValueError("radiohead count must be divisible by the group size")
    pos = topology.rh_positions
    xs = np.unique(np.round(pos[:, 0], 6))
    ys = np.unique(np.round(pos[:, 1], 6))
    if xs.size * ys.size != topology.n_rhs:
        raise ValueError("radioheads do not sit on a regular grid")
    side = int(round(group_size**0.5))
    if side * side != group_size or xs.size % side or ys.size % side:
        raise ValueError("grid does not tile into square blocks of the group size")
    col = np.searchsorted(xs, np.round(pos[:, 0], 6))
    row = np.searchsorted(ys, np.round(pos[:, 1], 6))
    return ((row // side) * (xs.size // side) + col // side).astype(int)


def grouping_random(rng: np.random.Generator, n_rhs: int, group_size: int = 4) -> np.ndarray:
    """Uniform random partition into equal groups."""
    if n_rhs % group_size:
        raise ValueError("radiohead count must be divisible by the group size")
    vec = np.empty(n_rhs, dtype=int)
    vec[rng.permutation(n_rhs)] = np.arange(n_rhs) // group_size
    return vec


def grouping_split_busiest(
    topology: Topology,
    gains: LinkGains,
    channel_plan,
    grouping=None,
    radio: RadioParams = RadioParams(),
) -> np.ndarray:
    """Split the most loaded group across two channels by swapping members.

    Constructive variant of what a good grouping policy discovers under a
    user hotspot: keep the busiest radiohead where it is, and trade the
    group's next-loaded members against the least-loaded members of the
    lightest group on a different channel, while that reduces the load gap.
    Group sizes are preserved.
    """
    gvec = (topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)).copy()
    plan = np.asarray(channel_plan, dtype=int)
    assoc = associate_users(topology, gains, gvec)
    rh_load = np.bincount(assoc.user_rh, minlength=topology.n_rhs)
    group_load = np.bincount(gvec[assoc.user_rh], minlength=int(gvec.max()) + 1)

    busy = int(np.argmax(group_load))
    partners = [g for g in range(group_load.size) if plan[g] != plan[busy]]
    if not partners:
        return gvec
    partner = min(partners, key=lambda g: (group_load[g], g))

    donors = sorted(np.flatnonzero(gvec == busy), key=lambda r: (-rh_load[r], r))[1:]
    takers = sorted(np.flatnonzero(gvec == partner), key=lambda r: (rh_load[r], r))
    load_b, load_p = group_load[busy], group_load[partner]
    for donor, taker in zip(donors, takers):
        new_b = load_b - rh_load[donor] + rh_load[taker]
        new_p = load_p + rh_load[donor] - rh_load[taker]
        if abs(new_b - new_p) >= abs(load_b - load_p):
            break
        gvec[donor], gvec[taker] = partner, busy
        load_b, load_p = new_b, new_p
    return gvec
