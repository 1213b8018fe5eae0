"""Geometry, propagation, association, and hearing-range behavior."""

import numpy as np
import pytest

from dmimo_rl.radio import (
    DMimoGroup,
    Interferer,
    LinkGains,
    Point,
    RadioHead,
    RadioParams,
    Topology,
    adjacent_block_groups,
    associate_users,
    grid_radioheads,
    groups_to_vector,
    hearing_set,
    path_loss,
    rx_power,
    sample_link_gains,
    vector_to_groups,
)


def unit_fading_gains(topology, params=RadioParams()):
    """Deterministic gains with fading pinned to 1 everywhere."""
    from dmimo_rl.radio import _pairwise_distances, _path_loss_array

    def g(a, b):
        if a.shape[0] == 0 or b.shape[0] == 0:
            return np.zeros((a.shape[0], b.shape[0]))
        return np.power(10.0, -_path_loss_array(_pairwise_distances(a, b), params) / 10.0)

    rh, us, it = topology.rh_positions, topology.user_positions, topology.interferer_positions
    return LinkGains(rh_user=g(rh, us), rh_rh=g(rh, rh), intf_user=g(it, us), intf_rh=g(it, rh))


def two_group_topology(separation=10.0, users=()):
    rhs = (RadioHead(0, Point(10.0, 10.0)), RadioHead(1, Point(10.0 + separation, 10.0)))
    groups = (DMimoGroup(0, frozenset({0})), DMimoGroup(1, frozenset({1})))
    floor = max(80.0, 20.0 + separation)
    user_objs = tuple(User_at(i, p) for i, p in enumerate(users))
    return Topology(floor, floor, rhs, groups, user_objs, channels=4)


def User_at(i, p):
    from dmimo_rl.radio import User

    return User(i, Point(*p))


class TestPathLoss:
    def test_free_space_reference_at_one_meter(self):
        assert path_loss(1.0, 5.25) == pytest.approx(46.84, abs=0.01)

    def test_log_distance_at_ten_meters(self):
        assert path_loss(10.0, 5.25) == pytest.approx(81.84, abs=0.01)

    def test_clamped_below_reference(self):
        assert path_loss(0.5, 5.25) == pytest.approx(path_loss(1.0, 5.25))

    def test_monotone_beyond_reference(self):
        d = np.linspace(1.0, 300.0, 400)
        pl = np.array([path_loss(x, 5.25) for x in d])
        assert (np.diff(pl) >= 0).all()

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            path_loss(float("nan"), 5.25)
        with pytest.raises(ValueError):
            path_loss(-1.0, 5.25)
        with pytest.raises(ValueError):
            path_loss(10.0, 0.0)


class TestRxPower:
    def test_fifteen_dbm_at_ten_meters(self):
        assert rx_power(15.0, Point(0, 0), Point(10, 0), 1.0) == pytest.approx(-66.84, abs=0.01)

    def test_one_meter(self):
        assert rx_power(15.0, Point(0, 0), Point(1, 0), 1.0) == pytest.approx(-31.84, abs=0.01)

    def test_half_fading_costs_three_db(self):
        assert rx_power(15.0, Point(0, 0), Point(10, 0), 0.5) == pytest.approx(-69.85, abs=0.01)

    def test_strictly_decreasing_in_distance(self):
        values = [rx_power(15.0, Point(0, 0), Point(d, 0), 1.0) for d in np.linspace(1.5, 120.0, 80)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_rejects_nonpositive_fading(self):
        with pytest.raises(ValueError):
            rx_power(15.0, Point(0, 0), Point(10, 0), 0.0)


class TestLinkGains:
    def _topology(self):
        params = RadioParams()
        rhs = grid_radioheads(4, 4, 40.0, 40.0, 10.0, params)
        groups = adjacent_block_groups(4, 4)
        from dmimo_rl.radio import User

        rng = np.random.default_rng(3)
        users = tuple(User(i, Point(*rng.uniform(0, 40, 2))) for i in range(10))
        return Topology(40.0, 40.0, rhs, groups, users, channels=4)

    def test_seed_determinism(self):
        topo = self._topology()
        g1 = sample_link_gains(topo, np.random.default_rng(11))
        g2 = sample_link_gains(topo, np.random.default_rng(11))
        assert np.array_equal(g1.rh_user, g2.rh_user)
        assert np.array_equal(g1.rh_rh, g2.rh_rh)

    def test_all_entries_positive(self):
        topo = self._topology()
        g = sample_link_gains(topo, np.random.default_rng(5))
        assert (g.rh_user > 0).all() and (g.rh_rh > 0).all()

    def test_unit_mean_fading(self):
        # Monte-Carlo check that the fading factor is unit-mean exponential.
        topo = self._topology()
        params = RadioParams()
        base = unit_fading_gains(topo, params)
        draws = []
        for seed in range(700):
            g = sample_link_gains(topo, np.random.default_rng(seed), params)
            draws.append(g.rh_user / base.rh_user)
        mean = np.mean(draws)  # 700 * 160 samples
        assert mean == pytest.approx(1.0, abs=0.01)


class TestAssociation:
    def test_colocated_user_takes_that_radiohead(self):
        from dmimo_rl.radio import User

        params = RadioParams()
        rhs = grid_radioheads(4, 4, 40.0, 40.0, 10.0, params)
        groups = adjacent_block_groups(4, 4)
        users = (User(0, rhs[3].location),)
        topo = Topology(40.0, 40.0, rhs, groups, users, channels=4)
        assoc = associate_users(topo, unit_fading_gains(topo))
        assert assoc.user_rh[0] == 3
        assert assoc.user_group[0] == topo.group_vector[3]

    def test_midpoint_tie_breaks_to_lower_id(self):
        topo = two_group_topology(separation=10.0, users=[(15.0, 10.0)])
        assoc = associate_users(topo, unit_fading_gains(topo))
        assert assoc.user_rh[0] == 0

    def test_every_user_mapped(self):
        from dmimo_rl.radio import User

        params = RadioParams()
        rhs = grid_radioheads(8, 8, 80.0, 80.0, 10.0, params)
        groups = adjacent_block_groups(8, 8)
        rng = np.random.default_rng(0)
        users = tuple(User(i, Point(*rng.uniform(0, 80, 2))) for i in range(64))
        topo = Topology(80.0, 80.0, rhs, groups, users, channels=4)
        assoc = associate_users(topo, sample_link_gains(topo, np.random.default_rng(1)))
        assert assoc.user_rh.shape == (64,)
        assert assoc.user_group.shape == (64,)
        assert ((assoc.user_group >= 0) & (assoc.user_group < 16)).all()

    def test_relabeling_groups_permutes_but_preserves_partition(self):
        from dmimo_rl.radio import User

        params = RadioParams()
        rhs = grid_radioheads(4, 4, 40.0, 40.0, 10.0, params)
        groups = adjacent_block_groups(4, 4)
        rng = np.random.default_rng(9)
        users = tuple(User(i, Point(*rng.uniform(0, 40, 2))) for i in range(20))
        topo = Topology(40.0, 40.0, rhs, groups, users, channels=4)
        gains = sample_link_gains(topo, np.random.default_rng(2))
        vec = topo.group_vector
        perm = np.array([2, 0, 3, 1])
        assoc_a = associate_users(topo, gains, vec)
        assoc_b = associate_users(topo, gains, perm[vec])
        assert np.array_equal(assoc_a.user_rh, assoc_b.user_rh)
        assert np.array_equal(perm[assoc_a.user_group], assoc_b.user_group)


class TestHearing:
    def test_groups_ten_meters_apart_hear_each_other(self):
        topo = two_group_topology(separation=10.0)
        gains = unit_fading_gains(topo)
        assert hearing_set(topo.groups[0], topo, gains) == {1}
        assert hearing_set(topo.groups[1], topo, gains) == {0}

    def test_groups_two_hundred_meters_apart_do_not(self):
        topo = two_group_topology(separation=200.0)
        gains = unit_fading_gains(topo)
        assert hearing_set(topo.groups[0], topo, gains) == set()

    def test_never_contains_itself(self):
        topo = two_group_topology(separation=10.0)
        gains = unit_fading_gains(topo)
        for g in topo.groups:
            assert g.id not in hearing_set(g, topo, gains)

    def test_symmetric_over_random_fading(self):
        params = RadioParams()
        rhs = grid_radioheads(4, 4, 40.0, 40.0, 10.0, params)
        groups = adjacent_block_groups(4, 4)
        topo = Topology(40.0, 40.0, rhs, groups, (), channels=4)
        for seed in range(20):
            gains = sample_link_gains(topo, np.random.default_rng(seed))
            sets = {g.id: hearing_set(g, topo, gains) for g in topo.groups}
            for g, heard in sets.items():
                for h in heard:
                    assert g in sets[h]

    def test_interferer_hearing(self):
        rhs = (RadioHead(0, Point(5.0, 5.0)),)
        groups = (DMimoGroup(0, frozenset({0})),)
        interferers = (Interferer(0, Point(-5.0, 5.0), channel=2),)
        topo = Topology(80.0, 80.0, rhs, groups, (), interferers, channels=4)
        gains = unit_fading_gains(topo)
        assert hearing_set(interferers[0], topo, gains) == {0}


class TestTopologyValidation:
    def test_groups_must_partition(self):
        rhs = (RadioHead(0, Point(1, 1)), RadioHead(1, Point(2, 2)))
        with pytest.raises(ValueError):
            Topology(10, 10, rhs, (DMimoGroup(0, frozenset({0})),), ())

    def test_interferer_must_sit_in_border_zone(self):
        rhs = (RadioHead(0, Point(1, 1)),)
        groups = (DMimoGroup(0, frozenset({0})),)
        with pytest.raises(ValueError):
            Topology(10, 10, rhs, groups, (), (Interferer(0, Point(5, 5), 1),))
        with pytest.raises(ValueError):
            Topology(10, 10, rhs, groups, (), (Interferer(0, Point(40, 5), 1),))

    def test_group_vector_round_trip(self):
        vec = np.array([0, 0, 1, 1, 2, 2])
        assert np.array_equal(groups_to_vector(vector_to_groups(vec), 6), vec)
