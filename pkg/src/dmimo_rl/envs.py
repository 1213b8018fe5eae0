"""Episodic environments: channel assignment (P1-P3) and radiohead grouping (P4).

Per-episode randomness (fading, user placement, interferer placement and
channels) is drawn once at reset from the generator handed in, so a step is
a deterministic function of the reset and the actions taken so far. Rewards
are metric differences normalized by a reference throughput.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .baselines import reuse_pattern_plan
from .mac import GroupTables, MacParams, group_tables, rh_tables, throughput_from_tables
from .metrics import MetricSpec, scalarize
from .radio import (
    Interferer,
    Point,
    RadioParams,
    Topology,
    User,
    adjacent_block_groups,
    grid_radioheads,
    sample_link_gains,
)


@dataclass(frozen=True)
class TopologySpec:
    """Static deployment geometry; users and interferers come per episode."""

    floor_width: float = 80.0
    floor_height: float = 80.0
    rh_cols: int = 8
    rh_rows: int = 8
    rh_spacing: float = 10.0
    group_block_cols: int = 2
    group_block_rows: int = 2
    channels: int = 4

    @property
    def n_rhs(self) -> int:
        return self.rh_cols * self.rh_rows

    @property
    def n_groups(self) -> int:
        return self.n_rhs // (self.group_block_cols * self.group_block_rows)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "P1"
    episode_length: int = 50
    n_users: int = 64
    user_model: str = "uniform"  # "uniform" | "hotspot"
    n_interferers: int = 0
    metric: MetricSpec = MetricSpec("percentile", percentile=30.0)
    x_ref_mbps: float = 100.0
    gamma: float = 0.10
    s_star_path: str | None = None
    hotspot_fraction: float = 0.6
    hotspot_radius_m: float = 5.0
    max_hotspots: int = 2

    def __post_init__(self):
        if self.scenario not in ("P1", "P2", "P3", "P4"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.episode_length < 1:
            raise ValueError("episodes need at least one step")
        if self.user_model not in ("uniform", "hotspot"):
            raise ValueError(f"unknown user model {self.user_model!r}")
        if self.n_interferers < 0:
            raise ValueError("interferer count cannot be negative")
        if self.x_ref_mbps <= 0:
            raise ValueError("reward normalization must be positive")


def default_scenario(name: str) -> tuple[ScenarioConfig, TopologySpec]:
    """The four studied setups with their deployment geometry."""
    if name == "P1":
        return ScenarioConfig("P1"), TopologySpec()
    if name == "P2":
        return (
            ScenarioConfig("P2", n_interferers=1, metric=MetricSpec("percentile", percentile=10.0), gamma=0.25),
            TopologySpec(),
        )
    if name == "P3":
        return ScenarioConfig("P3", n_interferers=3, metric=MetricSpec("product"), gamma=0.25), TopologySpec()
    if name == "P4":
        return (
            ScenarioConfig("P4", n_users=50, user_model="hotspot", metric=MetricSpec("mean"), gamma=0.25),
            TopologySpec(rh_rows=4),
        )
    raise ValueError(f"unknown scenario {name!r}")


@dataclass
class Trajectory:
    """One episode's records, in order: (s_t, a_t, r_t, s_{t+1})."""

    episode_length: int
    states: list = field(default_factory=list)
    encoded_states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    next_states: list = field(default_factory=list)

    def append(self, state, encoded, action, reward, next_state):
        self.states.append(state)
        self.encoded_states.append(encoded)
        self.actions.append(int(action))
        self.rewards.append(float(reward))
        self.next_states.append(next_state)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def complete(self) -> bool:
        return len(self.actions) == self.episode_length


# --- state encoding -----------------------------------------------------------


def _center_scale(values: np.ndarray, n: int) -> np.ndarray:
    """Map integers 1..n onto evenly spaced points in [-1, 1]."""
    if n < 2:
        return np.zeros_like(values, dtype=float)
    return (2.0 * values - (n + 1)) / (n - 1)


def encode_channels(plan, channels: int) -> np.ndarray:
    """Channel vector -> reals in [-1, 1]; with 4 channels: (2c-5)/3."""
    return _center_scale(np.asarray(plan, dtype=float), channels)


def encode_grouping_state(state, n_groups: int, n_rhs: int) -> np.ndarray:
    """Grouping-plus-association vector -> reals in [-1, 1]."""
    state = np.asarray(state, dtype=float)
    out = np.empty(state.size)
    out[:n_rhs] = _center_scale(state[:n_rhs], n_groups)
    out[n_rhs:] = _center_scale(state[n_rhs:], n_rhs)
    return out


# --- per-episode randomness ----------------------------------------------------


def uniform_users(rng: np.random.Generator, floor_w: float, floor_h: float, n: int) -> tuple[User, ...]:
    xy = rng.uniform((0.0, 0.0), (floor_w, floor_h), size=(n, 2))
    return tuple(User(i, Point(float(x), float(y))) for i, (x, y) in enumerate(xy))


def make_hotspot_users(
    rng: np.random.Generator,
    rh_positions: np.ndarray,
    floor_w: float,
    floor_h: float,
    n: int = 50,
    fraction: float = 0.6,
    radius_m: float = 5.0,
    max_hotspots: int = 2,
) -> tuple[User, ...]:
    """Non-uniform placement: a share of users crowds around 1-2 radioheads.

    `fraction` of the users land uniformly inside `radius_m` discs centered
    on the chosen hotspot radioheads (clipped to the floor); the rest are
    uniform over the whole floor.
    """
    n_hot = int(rng.integers(1, max_hotspots + 1))
    hot_rhs = rng.choice(rh_positions.shape[0], size=n_hot, replace=False)
    n_clustered = int(round(fraction * n))
    assignment = rng.integers(0, n_hot, size=n_clustered)
    locations = []
    for centre_idx in assignment:
        cx, cy = rh_positions[hot_rhs[centre_idx]]
        while True:
            r = radius_m * np.sqrt(rng.uniform())
            theta = rng.uniform(0.0, 2.0 * np.pi)
            x, y = cx + r * np.cos(theta), cy + r * np.sin(theta)
            if 0.0 <= x <= floor_w and 0.0 <= y <= floor_h:
                break
        locations.append((x, y))
    for _ in range(n - n_clustered):
        locations.append((rng.uniform(0.0, floor_w), rng.uniform(0.0, floor_h)))
    return tuple(User(i, Point(float(x), float(y))) for i, (x, y) in enumerate(locations))


def sample_interferers(
    rng: np.random.Generator,
    floor_w: float,
    floor_h: float,
    n: int,
    channels: int,
    tx_power_dbm: float,
    margin_m: float = 15.0,
) -> tuple[Interferer, ...]:
    """Interferers uniform over the border ring, outside the floor but within
    the margin. Channels are distinct across interferers when they fit into
    the channel count, i.i.d. uniform otherwise."""
    positions = []
    while len(positions) < n:
        x = rng.uniform(-margin_m, floor_w + margin_m)
        y = rng.uniform(-margin_m, floor_h + margin_m)
        if not (0.0 <= x <= floor_w and 0.0 <= y <= floor_h):
            positions.append((x, y))
    if n <= channels:
        chans = rng.choice(channels, size=n, replace=False) + 1
    else:
        chans = rng.integers(1, channels + 1, size=n)
    return tuple(
        Interferer(i, Point(float(x), float(y)), int(c), tx_power_dbm)
        for i, ((x, y), c) in enumerate(zip(positions, chans))
    )


# --- persisted converged plan ---------------------------------------------------


def save_plan(path, plan):
    """Plain-text record: the channel indices on one line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(" ".join(str(int(c)) for c in np.asarray(plan).ravel()) + "\n")


def load_plan(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return np.array([int(tok) for tok in fh.read().split()], dtype=int)


# --- environments ----------------------------------------------------------------


class _EnvBase:
    def __init__(self, scenario: ScenarioConfig, topo: TopologySpec, radio: RadioParams, mac: MacParams):
        self.scenario = scenario
        self.topo = topo
        self.radio = radio
        self.mac = mac
        self.rhs = grid_radioheads(topo.rh_cols, topo.rh_rows, topo.floor_width, topo.floor_height, topo.rh_spacing, radio)
        self.base_groups = adjacent_block_groups(topo.rh_cols, topo.rh_rows, topo.group_block_cols, topo.group_block_rows)
        self.n_groups = len(self.base_groups)
        self._rh_positions = np.array([[rh.location.x, rh.location.y] for rh in self.rhs])
        self.topology: Topology | None = None
        self.gains = None
        self._steps = 0
        self._x_prev = 0.0

    def _sample_episode(self, rng: np.random.Generator, groups):
        if self.scenario.user_model == "hotspot":
            users = make_hotspot_users(
                rng,
                self._rh_positions,
                self.topo.floor_width,
                self.topo.floor_height,
                self.scenario.n_users,
                self.scenario.hotspot_fraction,
                self.scenario.hotspot_radius_m,
                self.scenario.max_hotspots,
            )
        else:
            users = uniform_users(rng, self.topo.floor_width, self.topo.floor_height, self.scenario.n_users)
        interferers = sample_interferers(
            rng,
            self.topo.floor_width,
            self.topo.floor_height,
            self.scenario.n_interferers,
            self.topo.channels,
            self.radio.interferer_tx_power_dbm,
        )
        self.topology = Topology(
            floor_width=self.topo.floor_width,
            floor_height=self.topo.floor_height,
            rhs=self.rhs,
            groups=groups,
            users=users,
            interferers=interferers,
            channels=self.topo.channels,
        )
        self.gains = sample_link_gains(self.topology, rng, self.radio)
        self._rh_tables = rh_tables(self.topology, self.gains, self.radio)
        self._steps = 0

    def _metric(self, outcome) -> float:
        return scalarize(outcome.per_user_throughput_mbps, self.scenario.metric)

    def _guard_step(self):
        if self.topology is None:
            raise RuntimeError("call reset() before step()")
        if self._steps >= self.scenario.episode_length:
            raise RuntimeError(f"episode is over after {self.scenario.episode_length} steps")

    @property
    def steps_taken(self) -> int:
        return self._steps

    @property
    def current_metric(self) -> float:
        return self._x_prev


class ChannelAssignmentEnv(_EnvBase):
    """P1-P3: the state is the group-channel vector; an action recolors one group."""

    def __init__(self, scenario: ScenarioConfig, topo: TopologySpec, radio: RadioParams = RadioParams(), mac: MacParams = MacParams()):
        if scenario.scenario not in ("P1", "P2", "P3"):
            raise ValueError("ChannelAssignmentEnv serves scenarios P1-P3")
        super().__init__(scenario, topo, radio, mac)
        self.n_actions = self.n_groups * topo.channels
        self._initial_plan = self._resolve_initial_plan()
        self._plan = None
        self._tables: GroupTables | None = None

    def _resolve_initial_plan(self) -> np.ndarray:
        if self.scenario.scenario == "P1":
            return np.ones(self.n_groups, dtype=int)
        gvec = _adjacent_vector(self.base_groups, self.topo.n_rhs)
        fallback = reuse_pattern_plan(self._rh_positions, gvec, self.topo.channels)
        path = self.scenario.s_star_path
        if path is None:
            warnings.warn(f"{self.scenario.scenario}: no converged plan configured; starting from the reuse pattern")
            return fallback
        try:
            plan = load_plan(path)
        except OSError:
            warnings.warn(f"{self.scenario.scenario}: converged plan {path!r} unavailable; starting from the reuse pattern")
            return fallback
        if plan.shape != (self.n_groups,) or (plan < 1).any() or (plan > self.topo.channels).any():
            raise ValueError(f"stored plan at {path!r} does not fit this topology")
        return plan

    def action_space(self) -> list[tuple[int, int]]:
        """Ordered actions as 1-based (group, channel) pairs."""
        k = self.topo.channels
        return [(a // k + 1, a % k + 1) for a in range(self.n_actions)]

    @property
    def state(self) -> np.ndarray:
        return self._plan.copy()

    @property
    def initial_plan(self) -> np.ndarray:
        return self._initial_plan.copy()

    def valid_actions(self) -> np.ndarray:
        return np.arange(self.n_actions)

    def encode(self, state=None) -> np.ndarray:
        plan = self._plan if state is None else state
        return encode_channels(plan, self.topo.channels)

    def reset(self, rng: np.random.Generator):
        self._sample_episode(rng, self.base_groups)
        self._tables = group_tables(self._rh_tables, self.topology.group_vector)
        self._plan = self._initial_plan.copy()
        x0 = self.evaluate_plan(self._plan)
        self._x_prev = x0
        return self._plan.copy(), x0

    def step(self, action: int):
        self._guard_step()
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} outside [0, {self.n_actions})")
        k = self.topo.channels
        self._plan[action // k] = action % k + 1
        x = self.evaluate_plan(self._plan)
        reward = (x - self._x_prev) / self.scenario.x_ref_mbps
        self._x_prev = x
        self._steps += 1
        return self._plan.copy(), reward, x

    def outcome_for_plan(self, plan):
        """Full per-user outcome of an arbitrary plan under this episode's randomness."""
        if self._tables is None:
            raise RuntimeError("call reset() before evaluating plans")
        return throughput_from_tables(self._tables, plan, self.mac, self.radio.bandwidth_hz)

    def evaluate_plan(self, plan) -> float:
        """Metric of an arbitrary plan under this episode's randomness."""
        return self._metric(self.outcome_for_plan(plan))


class GroupSwapEnv(_EnvBase):
    """P4: the state is the grouping vector plus the user association; an
    action swaps two radioheads between groups. The channel plan is fixed
    to the reuse pattern of the initial adjacent blocks and follows group
    ids across swaps."""

    def __init__(self, scenario: ScenarioConfig, topo: TopologySpec, radio: RadioParams = RadioParams(), mac: MacParams = MacParams()):
        if scenario.scenario != "P4":
            raise ValueError("GroupSwapEnv serves scenario P4")
        super().__init__(scenario, topo, radio, mac)
        self.pairs = rh_pair_list(topo.n_rhs)
        self._pair_a = np.array([a for a, _ in self.pairs])
        self._pair_b = np.array([b for _, b in self.pairs])
        self.n_actions = len(self.pairs)
        self._adjacent = _adjacent_vector(self.base_groups, topo.n_rhs)
        self.channel_plan = reuse_pattern_plan(self._rh_positions, self._adjacent, topo.channels)
        self._gvec = None
        self._tables: GroupTables | None = None

    @property
    def state_dim(self) -> int:
        return self.topo.n_rhs + self.scenario.n_users

    def valid_actions(self) -> np.ndarray:
        """Indices of swaps whose endpoints are currently in different groups."""
        return np.flatnonzero(self._gvec[self._pair_a] != self._gvec[self._pair_b])

    @property
    def state(self) -> np.ndarray:
        return self._state()

    def _state(self) -> np.ndarray:
        return np.concatenate([self._gvec + 1, self._rh_tables.user_rh + 1])

    def encode(self, state=None) -> np.ndarray:
        s = self._state() if state is None else np.asarray(state)
        return encode_grouping_state(s, self.n_groups, self.topo.n_rhs)

    def reset(self, rng: np.random.Generator):
        self._sample_episode(rng, self.base_groups)
        self._gvec = self._adjacent.copy()
        self._tables = group_tables(self._rh_tables, self._gvec)
        x0 = self._metric(throughput_from_tables(self._tables, self.channel_plan, self.mac, self.radio.bandwidth_hz))
        self._x_prev = x0
        return self._state(), x0

    def step(self, action: int):
        self._guard_step()
        i, j = self.pairs[action]
        if self._gvec[i] == self._gvec[j]:
            raise ValueError(f"radioheads {i} and {j} are already in the same group")
        self._gvec[i], self._gvec[j] = self._gvec[j], self._gvec[i]
        self._tables = group_tables(self._rh_tables, self._gvec)
        x = self._metric(throughput_from_tables(self._tables, self.channel_plan, self.mac, self.radio.bandwidth_hz))
        reward = (x - self._x_prev) / self.scenario.x_ref_mbps
        self._x_prev = x
        self._steps += 1
        return self._state(), reward, x

    def outcome_for_grouping(self, gvec):
        """Full per-user outcome of an arbitrary grouping under this episode's randomness."""
        if self.topology is None:
            raise RuntimeError("call reset() before evaluating groupings")
        tables = group_tables(self._rh_tables, np.asarray(gvec, dtype=int))
        return throughput_from_tables(tables, self.channel_plan, self.mac, self.radio.bandwidth_hz)

    def evaluate_grouping(self, gvec) -> float:
        """Metric of an arbitrary grouping under this episode's randomness."""
        return self._metric(self.outcome_for_grouping(gvec))

    @property
    def grouping(self) -> np.ndarray:
        return self._gvec.copy()

    @property
    def adjacent_grouping(self) -> np.ndarray:
        return self._adjacent.copy()


def rh_pair_list(n_rhs: int) -> list[tuple[int, int]]:
    """All unordered radiohead pairs in fixed lexicographic order."""
    return [(i, j) for i in range(n_rhs) for j in range(i + 1, n_rhs)]


def _adjacent_vector(groups, n_rhs: int) -> np.ndarray:
    vec = np.empty(n_rhs, dtype=int)
    for g in groups:
        for m in g.members:
            vec[m] = g.id
    return vec


def make_env(scenario: ScenarioConfig, topo: TopologySpec, radio: RadioParams = RadioParams(), mac: MacParams = MacParams()):
    if scenario.scenario == "P4":
        return GroupSwapEnv(scenario, topo, radio, mac)
    return ChannelAssignmentEnv(scenario, topo, radio, mac)
