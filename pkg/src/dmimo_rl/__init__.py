"""Distributed-MIMO Wi-Fi simulator with episodic RL environments and agents."""

from .agents import ActionEmbedding, ReinforceAgent, ReplayBuffer, WolpertingerAgent, discounted_returns
from .baselines import (
    assign_all_same,
    assign_heuristic_pattern,
    assign_hsum,
    assign_random,
    assign_sensing,
    conflict_weights,
    grouping_adjacent,
    grouping_random,
)
from .envs import (
    ChannelAssignmentEnv,
    GroupSwapEnv,
    ScenarioConfig,
    TopologySpec,
    Trajectory,
    default_scenario,
    make_env,
)
from .harness import ExperimentConfig, default_config, load_config, run_experiment, save_config
from .mac import ConflictGraph, MacParams, StepOutcome, airtime_shares, build_conflict_graph, simulate_step
from .metrics import MetricSpec, jain_fairness, moving_average, percentile_throughput, scalarize
from .nets import Adam, DenseNetwork, DenseNetworkSpec, load_network, save_network
from .radio import (
    DMimoGroup,
    Interferer,
    LinkGains,
    Point,
    RadioHead,
    RadioParams,
    Topology,
    User,
    associate_users,
    hearing_set,
    path_loss,
    rx_power,
    sample_link_gains,
)

__version__ = "0.1.0"
