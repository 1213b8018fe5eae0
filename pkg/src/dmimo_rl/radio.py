"""Floor-plan geometry, propagation, fading, and user association for D-MIMO Wi-Fi."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

# Friis free-space constant for d in km and f in MHz.
_FSPL_CONST_DB = 32.44


@dataclass(frozen=True)
class RadioParams:
    """Radio-layer constants.

    None of these are dictated by the problem statement, so all of them are
    plain config values that can be overridden per experiment.
    """

    freq_ghz: float = 5.25
    path_loss_exponent: float = 3.5
    rh_tx_power_dbm: float = 15.0
    interferer_tx_power_dbm: float = 15.0
    antennas_per_rh: int = 1
    noise_figure_db: float = 7.0
    bandwidth_hz: float = 80e6
    cca_threshold_dbm: float = -82.0
    shadowing_sigma_db: float = 0.0

    @property
    def noise_floor_dbm(self) -> float:
        """Thermal noise over the full channel bandwidth plus the noise figure."""
        return -174.0 + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db

    @property
    def noise_floor_mw(self) -> float:
        return dbm_to_mw(self.noise_floor_dbm)


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(np.asarray(mw, dtype=float))


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioHead:
    id: int
    location: Point
    antennas: int = 1
    tx_power_dbm: float = 15.0

    def __post_init__(self):
        if self.antennas < 1:
            raise ValueError("radiohead needs at least one antenna")
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("tx power must be finite")


@dataclass(frozen=True)
class DMimoGroup:
    id: int
    members: frozenset[int]

    def __post_init__(self):
        if not self.members:
            raise ValueError("group must have at least one member radiohead")


@dataclass(frozen=True)
class User:
    id: int
    location: Point


@dataclass(frozen=True)
class Interferer:
    id: int
    location: Point
    channel: int
    tx_power_dbm: float = 15.0


@dataclass(frozen=True)
class Topology:
    """Immutable geometry of one deployment.

    Radioheads and groups persist across episodes; users and interferers are
    redrawn each episode, so environments build a fresh Topology per reset.
    """

    floor_width: float
    floor_height: float
    rhs: tuple[RadioHead, ...]
    groups: tuple[DMimoGroup, ...]
    users: tuple[User, ...]
    interferers: tuple[Interferer, ...] = ()
    channels: int = 4
    border_margin_m: float = 15.0

    def __post_init__(self):
        if self.channels < 1:
            raise ValueError("need at least one channel")
        ids = [rh.id for rh in self.rhs]
        if ids != list(range(len(self.rhs))):
            raise ValueError("radiohead ids must be 0..n-1 in order")
        if [u.id for u in self.users] != list(range(len(self.users))):
            raise ValueError("user ids must be 0..n-1 in order")
        claimed = sorted(m for g in self.groups for m in g.members)
        if claimed != list(range(len(self.rhs))):
            raise ValueError("groups must partition the radioheads exactly")
        for rh in self.rhs:
            if not self._inside_floor(rh.location):
                raise ValueError(f"radiohead {rh.id} outside the floor")
        for u in self.users:
            if not self._inside_floor(u.location):
                raise ValueError(f"user {u.id} outside the floor")
        for it in self.interferers:
            if not self._in_border_zone(it.location):
                raise ValueError(f"interferer {it.id} must sit in the border zone")
            if not 1 <= it.channel <= self.channels:
                raise ValueError(f"interferer {it.id} channel out of range")

    def _inside_floor(self, p: Point) -> bool:
        return 0.0 <= p.x <= self.floor_width and 0.0 <= p.y <= self.floor_height

    def _in_border_zone(self, p: Point) -> bool:
        m = self.border_margin_m
        inside_outer = -m <= p.x <= self.floor_width + m and -m <= p.y <= self.floor_height + m
        return inside_outer and not self._inside_floor(p)

    @property
    def n_rhs(self) -> int:
        return len(self.rhs)

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_interferers(self) -> int:
        return len(self.interferers)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @cached_property
    def rh_positions(self) -> np.ndarray:
        return np.array([[rh.location.x, rh.location.y] for rh in self.rhs], dtype=float)

    @cached_property
    def user_positions(self) -> np.ndarray:
        return np.array([[u.location.x, u.location.y] for u in self.users], dtype=float).reshape(-1, 2)

    @cached_property
    def interferer_positions(self) -> np.ndarray:
        return np.array(
            [[it.location.x, it.location.y] for it in self.interferers], dtype=float
        ).reshape(-1, 2)

    @cached_property
    def rh_tx_mw(self) -> np.ndarray:
        return dbm_to_mw(np.array([rh.tx_power_dbm for rh in self.rhs]))

    @cached_property
    def interferer_tx_mw(self) -> np.ndarray:
        return dbm_to_mw(np.array([it.tx_power_dbm for it in self.interferers]))

    @cached_property
    def interferer_channels(self) -> np.ndarray:
        return np.array([it.channel for it in self.interferers], dtype=int)

    @cached_property
    def group_vector(self) -> np.ndarray:
        """0-based group index per radiohead, derived from `groups`."""
        return groups_to_vector(self.groups, self.n_rhs)


def groups_to_vector(groups: Sequence[DMimoGroup], n_rhs: int) -> np.ndarray:
    vec = np.full(n_rhs, -1, dtype=int)
    for idx, g in enumerate(groups):
        for m in g.members:
            vec[m] = idx
    if (vec < 0).any():
        raise ValueError("grouping does not cover all radioheads")
    return vec


def vector_to_groups(vec: np.ndarray) -> tuple[DMimoGroup, ...]:
    vec = np.asarray(vec, dtype=int)
    return tuple(
        DMimoGroup(id=g, members=frozenset(np.flatnonzero(vec == g).tolist()))
        for g in range(int(vec.max()) + 1)
    )


def as_group_vector(grouping, n_rhs: int) -> np.ndarray:
    """Accept either a (n_rhs,) index vector or a sequence of DMimoGroup."""
    if isinstance(grouping, np.ndarray) or (
        isinstance(grouping, (list, tuple)) and grouping and isinstance(grouping[0], (int, np.integer))
    ):
        vec = np.asarray(grouping, dtype=int)
        if vec.shape != (n_rhs,):
            raise ValueError(f"group vector must have shape ({n_rhs},)")
        return vec
    return groups_to_vector(list(grouping), n_rhs)


# --- propagation -------------------------------------------------------------


def path_loss(distance_m: float, freq_ghz: float = 5.25, exponent: float = 3.5) -> float:
    """Log-distance path loss in dB with a 1 m free-space reference.

    Distances below the 1 m reference are clamped to it.
    """
    if not (math.isfinite(distance_m) and math.isfinite(freq_ghz) and math.isfinite(exponent)):
        raise ValueError("path_loss inputs must be finite")
    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    if freq_ghz <= 0:
        raise ValueError("frequency must be positive")
    pl0 = _FSPL_CONST_DB + 20.0 * math.log10(freq_ghz * 1000.0) - 60.0
    if distance_m <= 1.0:
        return pl0
    return pl0 + 10.0 * exponent * math.log10(distance_m)


def _path_loss_array(distance_m: np.ndarray, params: RadioParams) -> np.ndarray:
    pl0 = _FSPL_CONST_DB + 20.0 * math.log10(params.freq_ghz * 1000.0) - 60.0
    d = np.maximum(np.asarray(distance_m, dtype=float), 1.0)
    return pl0 + 10.0 * params.path_loss_exponent * np.log10(d)


def rx_power(
    tx_power_dbm: float,
    tx: Point,
    rx: Point,
    fading: float = 1.0,
    params: RadioParams = RadioParams(),
    shadowing_db: float = 0.0,
) -> float:
    """Received power in dBm over one link with an explicit fading gain."""
    if not fading > 0:
        raise ValueError("fading gain must be positive")
    pl = path_loss(tx.distance_to(rx), params.freq_ghz, params.path_loss_exponent)
    return tx_power_dbm - pl + 10.0 * math.log10(fading) + shadowing_db


@dataclass(frozen=True)
class LinkGains:
    """Linear power gains (path loss x small-scale fading) for one episode.

    One matrix per (transmitter class, receiver class). Receivers are users
    and probes at radiohead locations; the latter drive carrier sensing.
    Entries are strictly positive. Regenerated each episode.
    """

    rh_user: np.ndarray  # (n_rhs, n_users)
    rh_rh: np.ndarray  # (n_rhs, n_rhs)
    intf_user: np.ndarray  # (n_interferers, n_users)
    intf_rh: np.ndarray  # (n_interferers, n_rhs)


def _pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff**2).sum(axis=2))


def sample_link_gains(topology: Topology, rng: np.random.Generator, params: RadioParams = RadioParams()) -> LinkGains:
    """Draw one fading realization and fold it into the deterministic path gains.

    Small-scale fading is i.i.d. unit-mean exponential (Rayleigh envelope
    power). Draw order is fixed (rh-user, rh-rh, intf-user, intf-rh, then
    optional shadowing) so a seeded generator reproduces the matrices bit
    for bit.
    """
    rh = topology.rh_positions
    users = topology.user_positions
    intf = topology.interferer_positions

    def gains(tx_pos, rx_pos):
        if tx_pos.shape[0] == 0 or rx_pos.shape[0] == 0:
            return np.zeros((tx_pos.shape[0], rx_pos.shape[0]))
        pl_db = _path_loss_array(_pairwise_distances(tx_pos, rx_pos), params)
        fading = rng.exponential(1.0, size=pl_db.shape)
        g = np.power(10.0, -pl_db / 10.0) * fading
        if params.shadowing_sigma_db > 0:
            g = g * np.power(10.0, rng.normal(0.0, params.shadowing_sigma_db, size=g.shape) / 10.0)
        return g

    return LinkGains(
        rh_user=gains(rh, users),
        rh_rh=gains(rh, rh),
        intf_user=gains(intf, users),
        intf_rh=gains(intf, rh),
    )


# --- association and hearing -------------------------------------------------


@dataclass(frozen=True)
class Association:
    user_rh: np.ndarray  # (n_users,) strongest radiohead per user
    user_group: np.ndarray  # (n_users,) that radiohead's group


def associate_users(topology: Topology, gains: LinkGains, grouping=None) -> Association:
    """Associate every user to the radiohead with maximal received power.

    Ties break toward the lowest radiohead id (argmax picks the first
    maximum). Total: every user ends up associated.
    """
    gvec = topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)
    rx_mw = topology.rh_tx_mw[:, None] * gains.rh_user
    user_rh = np.argmax(rx_mw, axis=0)
    return Association(user_rh=user_rh, user_group=gvec[user_rh])


def rh_coupling_mw(topology: Topology, gains: LinkGains) -> np.ndarray:
    """Symmetric (n_rhs, n_rhs) coupled power: max of both link directions."""
    p = topology.rh_tx_mw[:, None] * gains.rh_rh
    sym = np.maximum(p, p.T)
    np.fill_diagonal(sym, 0.0)
    return sym


def interferer_rh_coupling_mw(topology: Topology, gains: LinkGains) -> np.ndarray:
    """(n_interferers, n_rhs) coupled power, max of both directions.

    The reverse direction reuses the same reciprocal gain with the
    radiohead's transmit power.
    """
    if topology.n_interferers == 0:
        return np.zeros((0, topology.n_rhs))
    fwd = topology.interferer_tx_mw[:, None] * gains.intf_rh
    rev = topology.rh_tx_mw[None, :] * gains.intf_rh
    return np.maximum(fwd, rev)


def _segment_max(matrix: np.ndarray, seg: np.ndarray, n_seg: int, axis: int) -> np.ndarray:
    """Max-reduce `matrix` over segments of one axis given per-index segment ids."""
    if axis == 1:
        return _segment_max(matrix.T, seg, n_seg, 0).T
    order = np.argsort(seg, kind="stable")
    counts = np.bincount(seg, minlength=n_seg)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    if (counts == 0).any():
        raise ValueError("every group needs at least one member")
    return np.maximum.reduceat(matrix[order], starts, axis=0)


def group_coupling_mw(topology: Topology, gains: LinkGains, grouping=None):
    """Strongest coupled power between groups and between groups and interferers.

    Returns (gg, gi): gg is (n_groups, n_groups) with a zero diagonal, gi is
    (n_groups, n_interferers). Both take the max over member pairs and over
    link directions, so the induced hearing relation is symmetric.
    """
    gvec = topology.group_vector if grouping is None else as_group_vector(grouping, topology.n_rhs)
    n_groups = int(gvec.max()) + 1
    rh = rh_coupling_mw(topology, gains)
    gg = _segment_max(_segment_max(rh, gvec, n_groups, 0), gvec, n_groups, 1)
    np.fill_diagonal(gg, 0.0)
    ic = interferer_rh_coupling_mw(topology, gains)
    gi = _segment_max(ic, gvec, n_groups, 1).T if topology.n_interferers else np.zeros((n_groups, 0))
    return gg, gi


def hearing_set(entity, topology: Topology, gains: LinkGains, grouping=None, params: RadioParams = RadioParams()) -> set[int]:
    """Groups that mutually hear `entity` (a DMimoGroup or an Interferer).

    A pair is in hearing range when its strongest coupled power (max over
    member radioheads and over both directions) exceeds the clear-channel
    threshold. A group is never in its own hearing set.
    """
    gg, gi = group_coupling_mw(topology, gains, grouping)
    cca_mw = dbm_to_mw(params.cca_threshold_dbm)
    if isinstance(entity, DMimoGroup):
        over = np.flatnonzero(gg[entity.id] > cca_mw)
        return {int(g) for g in over if g != entity.id}
    if isinstance(entity, Interferer):
        return {int(g) for g in np.flatnonzero(gi[:, entity.id] > cca_mw)}
    raise TypeError(f"entity must be a DMimoGroup or Interferer, got {type(entity)!r}")


# --- topology construction ---------------------------------------------------


def grid_radioheads(cols: int, rows: int, floor_w: float, floor_h: float, spacing: float, params: RadioParams) -> tuple[RadioHead, ...]:
    """Radioheads on a centered cols x rows grid, row-major ids from the bottom row."""
    x0 = (floor_w - (cols - 1) * spacing) / 2.0
    y0 = (floor_h - (rows - 1) * spacing) / 2.0
    if x0 < 0 or y0 < 0:
        raise ValueError("grid does not fit on the floor")
    rhs = []
    for r in range(rows):
        for c in range(cols):
            rhs.append(
                RadioHead(
                    id=r * cols + c,
                    location=Point(x0 + c * spacing, y0 + r * spacing),
                    antennas=params.antennas_per_rh,
                    tx_power_dbm=params.rh_tx_power_dbm,
                )
            )
    return tuple(rhs)


def adjacent_block_groups(cols: int, rows: int, block_cols: int = 2, block_rows: int = 2) -> tuple[DMimoGroup, ...]:
    """Partition a cols x rows radiohead grid into row-major rectangular blocks."""
    if cols % block_cols or rows % block_rows:
        raise ValueError("block shape must tile the radiohead grid")
    n_block_cols = cols // block_cols
    vec = np.empty(cols * rows, dtype=int)
    for r in range(rows):
        for c in range(cols):
            vec[r * cols + c] = (r // block_rows) * n_block_cols + (c // block_cols)
    return vector_to_groups(vec)
