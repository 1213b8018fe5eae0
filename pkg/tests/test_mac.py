"""Conflict graphs, airtime shares, SINR, and the one-step throughput model."""

import numpy as np
import pytest

from dmimo_rl.mac import (
    ConflictGraph,
    MacParams,
    airtime_shares,
    build_conflict_graph,
    group_tables,
    per_user_sinr,
    rh_tables,
    simulate_step,
    throughput_from_tables,
)
from dmimo_rl.radio import (
    DMimoGroup,
    Interferer,
    Point,
    RadioHead,
    RadioParams,
    Topology,
    User,
    adjacent_block_groups,
    grid_radioheads,
    sample_link_gains,
)
from test_radio import unit_fading_gains

RADIO = RadioParams()


def graph_of(gg_edges, n_interferers=0, active=None):
    gg = np.asarray(gg_edges, dtype=bool)
    n = gg.shape[0]
    gi = np.zeros((n, n_interferers), dtype=bool)
    return ConflictGraph(
        active_groups=np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool),
        gg_edges=gg,
        gi_edges=gi,
        gg_weights=gg.astype(float),
        gi_weights=gi.astype(float),
    )


def full_topology(n_users=64, seed=0, n_interferers=0, intf_channels=(), cols=8, rows=8, floor=80.0):
    rhs = grid_radioheads(cols, rows, floor, floor, 10.0, RADIO)
    groups = adjacent_block_groups(cols, rows)
    rng = np.random.default_rng(seed)
    users = tuple(User(i, Point(*rng.uniform(0, floor, 2))) for i in range(n_users))
    interferers = tuple(
        Interferer(i, Point(-5.0, 10.0 * i + 5.0), channel=c) for i, c in enumerate(intf_channels[:n_interferers])
    )
    return Topology(floor, floor, rhs, groups, users, interferers, channels=4)


def lone_group_topology(n_users):
    rhs = tuple(RadioHead(i, Point(10.0 + 20.0 * i, 40.0)) for i in range(4))
    groups = (DMimoGroup(0, frozenset(range(4))),)
    users = tuple(User(i, Point(10.0 + 20.0 * (i % 4), 50.0)) for i in range(n_users))
    return Topology(80.0, 80.0, rhs, groups, users, channels=4)


class TestAirtimeShares:
    def test_isolated_vertex(self):
        g = graph_of(np.zeros((1, 1)))
        shares, _ = airtime_shares(g)
        assert shares[0] == 1.0

    def test_triangle(self):
        edges = np.ones((3, 3), dtype=bool)
        np.fill_diagonal(edges, False)
        shares, _ = airtime_shares(graph_of(edges))
        assert np.allclose(shares, 1.0 / 3.0)

    def test_path_of_three(self):
        edges = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
        shares, _ = airtime_shares(graph_of(edges))
        assert np.allclose(shares, [0.5, 1.0 / 3.0, 0.5])

    def test_clique_share_sums_bounded(self):
        # Any clique of co-channel mutually hearing vertices shares at most the whole channel.
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(2, 9))
            edges = np.zeros((n, n), dtype=bool)
            idx = rng.choice(n, size=rng.integers(2, n + 1), replace=False)
            for i in idx:
                for j in idx:
                    if i != j:
                        edges[i, j] = True
            shares, _ = airtime_shares(graph_of(edges))
            assert shares[idx].sum() <= 1.0 + 1e-12


class TestConflictGraph:
    def test_all_same_channel_is_connected(self):
        topo = full_topology(seed=1)
        gains = sample_link_gains(topo, np.random.default_rng(1), RADIO)
        graph = build_conflict_graph(topo, gains, [1] * 16, radio=RADIO)
        # walk the group-group adjacency from vertex 0
        seen = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for u in np.flatnonzero(graph.gg_edges[v]):
                if u not in seen:
                    seen.add(int(u))
                    frontier.append(int(u))
        active = set(np.flatnonzero(graph.active_groups).tolist())
        assert active <= seen | {0}

    def test_reuse_pattern_has_no_adjacent_edges(self):
        from dmimo_rl.baselines import assign_heuristic_pattern

        topo = full_topology(seed=2)
        gains = sample_link_gains(topo, np.random.default_rng(2), RADIO)
        plan = assign_heuristic_pattern(topo)
        graph = build_conflict_graph(topo, gains, plan, radio=RADIO)
        # grid-adjacent groups (block centers 20 m apart) never share a channel
        centers = np.array([topo.rh_positions[list(g.members)].mean(axis=0) for g in topo.groups])
        for g in range(16):
            for h in range(g + 1, 16):
                if np.linalg.norm(centers[g] - centers[h]) <= 20.0 + 1e-6:
                    assert not graph.gg_edges[g, h]

    def test_userless_groups_do_not_contend(self):
        topo = lone_group_topology(4)
        # second group far away with zero users
        rhs = topo.rhs + tuple(RadioHead(4 + i, Point(10.0 + 20.0 * i, 10.0)) for i in range(4))
        groups = (topo.groups[0], DMimoGroup(1, frozenset(range(4, 8))))
        topo2 = Topology(80.0, 80.0, rhs, groups, topo.users, channels=4)
        gains = unit_fading_gains(topo2)
        graph = build_conflict_graph(topo2, gains, [1, 1], radio=RADIO)
        assert not graph.active_groups[1]
        assert graph.group_degrees[0] == 0
        shares, _ = airtime_shares(graph)
        assert shares[1] == 0.0


class TestPerUserSinr:
    def test_lone_group_user_at_ten_meters(self):
        topo = lone_group_topology(4)
        gains = unit_fading_gains(topo)
        sinr = per_user_sinr(0, topo.groups[0], [], topo, gains, radio=RADIO)
        assert 10 * np.log10(sinr) == pytest.approx(21.13, abs=0.01)

    def test_heard_cochannel_group_contributes_nothing(self):
        rhs = tuple(RadioHead(i, Point(10.0 + 10.0 * i, 10.0)) for i in range(2))
        groups = (DMimoGroup(0, frozenset({0})), DMimoGroup(1, frozenset({1})))
        users = (User(0, Point(10.0, 20.0)),)
        topo = Topology(80.0, 80.0, rhs, groups, users, channels=4)
        gains = unit_fading_gains(topo)
        alone = per_user_sinr(0, groups[0], [], topo, gains, radio=RADIO)
        with_neighbor = per_user_sinr(0, groups[0], [(groups[1], 0.5)], topo, gains, radio=RADIO)
        assert with_neighbor == pytest.approx(alone)

    def test_interference_equal_to_noise_halves_sinr(self):
        # hidden interferer calibrated so its weighted power lands exactly on the noise floor
        rhs = (RadioHead(0, Point(40.0, 40.0)),)
        groups = (DMimoGroup(0, frozenset({0})),)
        users = (User(0, Point(40.0, 50.0)),)
        intf = (Interferer(0, Point(-10.0, 40.0), channel=1, tx_power_dbm=15.0),)
        topo = Topology(80.0, 80.0, rhs, groups, users, intf, channels=4)
        gains = unit_fading_gains(topo)
        clean = per_user_sinr(0, groups[0], [], topo, gains, radio=RADIO)
        received = topo.interferer_tx_mw[0] * gains.intf_user[0, 0]
        share = RADIO.noise_floor_mw / received
        halved = per_user_sinr(0, groups[0], [(intf[0], share)], topo, gains, radio=RADIO)
        assert halved == pytest.approx(clean / 2.0)

    def test_matches_vectorized_pipeline(self):
        # the scalar contract and the table-driven fast path agree
        topo = full_topology(n_users=20, seed=7, n_interferers=2, intf_channels=(1, 3))
        gains = sample_link_gains(topo, np.random.default_rng(7), RADIO)
        plan = np.array([1, 2, 3, 4] * 4)
        tables = group_tables(rh_tables(topo, gains, RADIO), topo.group_vector)
        graph = build_conflict_graph(topo, gains, plan, radio=RADIO)
        g_share, i_share = airtime_shares(graph)
        out = throughput_from_tables(tables, plan, MacParams(), RADIO.bandwidth_hz)
        for user in range(topo.n_users):
            serving = topo.groups[tables.user_group[user]]
            concurrent = [
                (topo.groups[h], g_share[h])
                for h in range(16)
                if h != serving.id and graph.active_groups[h] and plan[h] == plan[serving.id]
            ]
            concurrent += [
                (topo.interferers[i], i_share[i])
                for i in range(2)
                if topo.interferer_channels[i] == plan[serving.id]
            ]
            sinr = per_user_sinr(user, serving, concurrent, topo, gains, radio=RADIO)
            se = min(np.log2(1 + sinr), 8.0)
            cohorts = np.ceil(tables.users_per_group[serving.id] / 4.0)
            expected = 0.7 * 80e6 * se * g_share[serving.id] / cohorts / 1e6
            assert out.per_user_throughput_mbps[user] == pytest.approx(expected, rel=1e-9)


class TestSimulateStep:
    def test_four_users_uncontended(self):
        topo = lone_group_topology(4)
        out = simulate_step(topo, unit_fading_gains(topo), [1], radio=RADIO)
        assert out.per_user_throughput_mbps == pytest.approx(np.full(4, 393.67), rel=0.002)
        assert out.per_group_airtime[0] == 1.0
        assert out.step_duration_ms == 100.0

    def test_doubling_users_halves_throughput(self):
        topo4 = lone_group_topology(4)
        topo8 = lone_group_topology(8)
        out4 = simulate_step(topo4, unit_fading_gains(topo4), [1], radio=RADIO)
        out8 = simulate_step(topo8, unit_fading_gains(topo8), [1], radio=RADIO)
        assert out8.per_user_throughput_mbps[:4] == pytest.approx(out4.per_user_throughput_mbps / 2.0)

    def test_reuse_beats_all_same_on_30th_percentile(self):
        from dmimo_rl.baselines import assign_heuristic_pattern
        from dmimo_rl.metrics import percentile_throughput

        for seed in range(3):
            topo = full_topology(seed=seed)
            gains = sample_link_gains(topo, np.random.default_rng(seed), RADIO)
            same = simulate_step(topo, gains, [1] * 16, radio=RADIO)
            reuse = simulate_step(topo, gains, assign_heuristic_pattern(topo), radio=RADIO)
            assert percentile_throughput(reuse.per_user_throughput_mbps, 30) > percentile_throughput(
                same.per_user_throughput_mbps, 30
            )

    def test_rejects_out_of_range_channels(self):
        topo = lone_group_topology(4)
        with pytest.raises(ValueError):
            simulate_step(topo, unit_fading_gains(topo), [5], radio=RADIO)

    def test_pure_function(self):
        topo = full_topology(seed=4)
        gains = sample_link_gains(topo, np.random.default_rng(4), RADIO)
        plan = [1, 2, 3, 4] * 4
        a = simulate_step(topo, gains, plan, radio=RADIO)
        b = simulate_step(topo, gains, plan, radio=RADIO)
        assert np.array_equal(a.per_user_throughput_mbps, b.per_user_throughput_mbps)
        assert np.array_equal(a.per_group_airtime, b.per_group_airtime)

    def test_throughput_ceiling(self):
        for seed in range(5):
            topo = full_topology(seed=seed, n_users=32)
            gains = sample_link_gains(topo, np.random.default_rng(seed), RADIO)
            out = simulate_step(topo, gains, [1, 2, 3, 4] * 4, radio=RADIO)
            assert (out.per_user_throughput_mbps <= 0.7 * 80.0 * 8.0 + 1e-9).all()

    def test_adding_cochannel_interferer_never_helps(self):
        for seed in range(5):
            base = full_topology(seed=seed, n_users=40)
            gains = sample_link_gains(base, np.random.default_rng(seed), RADIO)
            plan = [1, 2, 3, 4] * 4
            before = simulate_step(base, gains, plan, radio=RADIO)
            rng = np.random.default_rng(100 + seed)
            intf = (Interferer(0, Point(-float(rng.uniform(1, 14)), float(rng.uniform(0, 80))), channel=1),)
            with_intf = Topology(80.0, 80.0, base.rhs, base.groups, base.users, intf, channels=4)
            gains2 = sample_link_gains(with_intf, np.random.default_rng(seed), RADIO)
            assert np.array_equal(gains2.rh_user, gains.rh_user)
            after = simulate_step(with_intf, gains2, plan, radio=RADIO)
            assert (after.per_user_throughput_mbps <= before.per_user_throughput_mbps + 1e-12).all()

    def test_separating_two_hearing_groups_helps_both(self):
        rhs = tuple(RadioHead(i, Point(30.0 + 10.0 * i, 40.0)) for i in range(2))
        groups = (DMimoGroup(0, frozenset({0})), DMimoGroup(1, frozenset({1})))
        rng = np.random.default_rng(12)
        users = tuple(User(i, Point(*rng.uniform(20, 60, 2))) for i in range(8))
        topo = Topology(80.0, 80.0, rhs, groups, users, channels=4)
        for seed in range(10):
            gains = sample_link_gains(topo, np.random.default_rng(seed), RADIO)
            shared = simulate_step(topo, gains, [1, 1], radio=RADIO)
            split = simulate_step(topo, gains, [1, 2], radio=RADIO)
            assoc = group_tables(rh_tables(topo, gains, RADIO), topo.group_vector).user_group
            for g in (0, 1):
                mask = assoc == g
                assert split.per_user_throughput_mbps[mask].sum() >= shared.per_user_throughput_mbps[mask].sum() - 1e-9
