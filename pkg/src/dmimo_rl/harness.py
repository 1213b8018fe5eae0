"""Experiment orchestration: configuration, seeded runs, CSV logs, checkpoints.

Seed discipline: every random stream is derived from (seed, purpose[, episode])
through numpy's SeedSequence, so adding seeds or episodes never perturbs the
streams of existing ones:

    agent stream     SeedSequence((seed, 1))
    episode stream   SeedSequence((seed, 2, episode))
    baseline stream  SeedSequence((seed, 3, episode))
"""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import baselines
from .agents import ActionEmbedding, ReinforceAgent, WolpertingerAgent
from .envs import (
    GroupSwapEnv,
    ScenarioConfig,
    TopologySpec,
    Trajectory,
    default_scenario,
    make_env,
    save_plan,
)
from .mac import MacParams
from .metrics import MetricSpec, moving_average
from .radio import RadioParams


class ConfigError(Exception):
    """Bad or inconsistent experiment configuration."""


CHANNEL_BASELINES = ("all-same", "random", "heuristic", "sensing", "hsum")
GROUPING_BASELINES = ("adjacent", "random", "split")


@dataclass(frozen=True)
class AgentConfig:
    kind: str = "reinforce"  # "reinforce" | "wolpertinger" | "baseline:<name>"
    # policy-gradient settings
    hidden_widths: tuple[int, ...] = (48,)
    learning_rate: float = 0.003
    per_step_updates: bool = True
    step_discount: bool = False
    # wolpertinger settings
    k: int = 32
    actor_hidden: tuple[int, ...] = (256, 128)
    critic_hidden: tuple[int, ...] = (64, 32)
    actor_lr: float = 0.003
    critic_lr: float = 0.007
    tau_actor: float = 0.001
    tau_critic: float = 0.001
    buffer_capacity: int = 10_000
    batch_size: int = 100
    sigma_start: float = 0.5
    sigma_end: float = 0.05
    sigma_decay_episodes: int = 500

    @property
    def baseline_name(self) -> str | None:
        return self.kind.split(":", 1)[1] if self.kind.startswith("baseline:") else None


@dataclass(frozen=True)
class RunConfig:
    episodes: int = 500
    seeds: tuple[int, ...] = (0,)
    out_dir: str = "runs"
    frozen_episode_seed: int | None = None
    save_checkpoints: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    topology: TopologySpec = TopologySpec()
    radio: RadioParams = RadioParams()
    mac: MacParams = MacParams()
    agent: AgentConfig = AgentConfig()
    run: RunConfig = RunConfig()

    def validate(self):
        if self.run.episodes < 1:
            raise ConfigError("need at least one episode")
        if not self.run.seeds:
            raise ConfigError("need at least one seed")
        kind = self.agent.kind
        name = self.agent.baseline_name
        p4 = self.scenario.scenario == "P4"
        if kind == "wolpertinger" and not p4:
            raise ConfigError("the wolpertinger agent only fits scenario P4")
        if kind == "reinforce" and p4:
            raise ConfigError("scenario P4 needs the wolpertinger agent or a grouping baseline")
        if name is not None:
            table = GROUPING_BASELINES if p4 else CHANNEL_BASELINES
            if name not in table:
                raise ConfigError(f"unknown baseline {name!r}; choices: {', '.join(table)}")
        elif kind not in ("reinforce", "wolpertinger"):
            raise ConfigError(f"unknown agent kind {kind!r}")


def default_config(scenario_name: str, agent_kind: str | None = None) -> ExperimentConfig:
    scenario, topo = default_scenario(scenario_name)
    agent = AgentConfig(kind=agent_kind or ("wolpertinger" if scenario_name == "P4" else "reinforce"))
    cfg = ExperimentConfig(scenario=scenario, topology=topo, agent=agent)
    cfg.validate()
    return cfg


# --- configuration file I/O -----------------------------------------------------


def _to_jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (tuple, list)):
        return [_to_jsonable(v) for v in obj]
    return obj


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return _to_jsonable(cfg)


def _build(cls, data: dict, path: str):
    field_map = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(field_map)
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        f = field_map[name]
        if value is not None and isinstance(f.default, tuple):
            value = tuple(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {path} section: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    known = {"scenario", "topology", "radio", "mac", "agent", "run"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    scenario_data = dict(data.get("scenario", {}))
    metric_data = scenario_data.pop("metric", None)
    scenario = _build(ScenarioConfig, scenario_data, "scenario") if metric_data is None else None
    if metric_data is not None:
        metric = _build(MetricSpec, metric_data, "scenario.metric")
        scenario = dataclasses.replace(_build(ScenarioConfig, scenario_data, "scenario"), metric=metric)
    cfg = ExperimentConfig(
        scenario=scenario,
        topology=_build(TopologySpec, data.get("topology", {}), "topology"),
        radio=_build(RadioParams, data.get("radio", {}), "radio"),
        mac=_build(MacParams, data.get("mac", {}), "mac"),
        agent=_build(AgentConfig, data.get("agent", {}), "agent"),
        run=_build(RunConfig, data.get("run", {}), "run"),
    )
    cfg.validate()
    return cfg


def save_config(cfg: ExperimentConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


# --- seed streams ----------------------------------------------------------------


def agent_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, 1)))


def episode_rng(seed: int, episode: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, 2, episode)))


def baseline_rng(seed: int, episode: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, 3, episode)))


# --- episode records ----------------------------------------------------------------


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    seed: int
    scenario: str
    agent: str
    final_metric: float
    best_metric: float
    reward_sum: float
    wall_clock_ms: float
    policy_entropy: float | None = None


CSV_FIELDS = (
    "episode",
    "seed",
    "scenario",
    "agent",
    "final_metric",
    "best_metric",
    "reward_sum",
    "wall_clock_ms",
    "policy_entropy",
)


def emit_csv(records, path):
    """One header row plus one row per record, fields in declared order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            writer.writerow(
                [
                    rec.episode,
                    rec.seed,
                    rec.scenario,
                    rec.agent,
                    f"{rec.final_metric:.6f}",
                    f"{rec.best_metric:.6f}",
                    f"{rec.reward_sum:.9f}",
                    f"{rec.wall_clock_ms:.3f}",
                    "" if rec.policy_entropy is None else f"{rec.policy_entropy:.6f}",
                ]
            )


def read_csv(path) -> list[EpisodeRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"{path} does not look like an episode table")
        for row in reader:
            records.append(
                EpisodeRecord(
                    episode=int(row["episode"]),
                    seed=int(row["seed"]),
                    scenario=row["scenario"],
                    agent=row["agent"],
                    final_metric=float(row["final_metric"]),
                    best_metric=float(row["best_metric"]),
                    reward_sum=float(row["reward_sum"]),
                    wall_clock_ms=float(row["wall_clock_ms"]),
                    policy_entropy=float(row["policy_entropy"]) if row["policy_entropy"] else None,
                )
            )
    return records


# --- run loops -------------------------------------------------------------------------


def _make_agent(cfg: ExperimentConfig, env, seed: int):
    a = cfg.agent
    if a.kind == "reinforce":
        return ReinforceAgent(
            n_inputs=env.n_groups,
            n_actions=env.n_actions,
            rng=agent_rng(seed),
            gamma=cfg.scenario.gamma,
            learning_rate=a.learning_rate,
            hidden_widths=a.hidden_widths,
            per_step_updates=a.per_step_updates,
            step_discount=a.step_discount,
        )
    if a.kind == "wolpertinger":
        return WolpertingerAgent(
            state_dim=env.state_dim,
            embedding=ActionEmbedding.for_rh_pairs(cfg.topology.n_rhs),
            rng=agent_rng(seed),
            gamma=cfg.scenario.gamma,
            k=a.k,
            actor_hidden=a.actor_hidden,
            critic_hidden=a.critic_hidden,
            actor_lr=a.actor_lr,
            critic_lr=a.critic_lr,
            tau_actor=a.tau_actor,
            tau_critic=a.tau_critic,
            buffer_capacity=a.buffer_capacity,
            batch_size=a.batch_size,
            sigma_start=a.sigma_start,
            sigma_end=a.sigma_end,
            sigma_decay_episodes=a.sigma_decay_episodes,
        )
    return None  # baseline


def _episode_generator(cfg: ExperimentConfig, seed: int, episode: int) -> np.random.Generator:
    if cfg.run.frozen_episode_seed is not None:
        return episode_rng(cfg.run.frozen_episode_seed, 0)
    return episode_rng(seed, episode)


def _baseline_plan(name: str, env, cfg: ExperimentConfig, rng: np.random.Generator):
    if isinstance(env, GroupSwapEnv):
        if name == "adjacent":
            return env.adjacent_grouping
        if name == "random":
            return baselines.grouping_random(rng, cfg.topology.n_rhs)
        return baselines.grouping_split_busiest(
            env.topology, env.gains, env.channel_plan, env.adjacent_grouping, cfg.radio
        )
    if name == "all-same":
        return baselines.assign_all_same(env.n_groups)
    if name == "random":
        return baselines.assign_random(rng, env.n_groups, cfg.topology.channels)
    if name == "heuristic":
        return baselines.assign_heuristic_pattern(env.topology)
    if name == "sensing":
        return baselines.assign_sensing(env.topology, env.gains, env.initial_plan, radio=cfg.radio)
    return baselines.hsum_plan_with_interferers(env.topology, env.gains, radio=cfg.radio)


def _rollout_reinforce(env, agent: ReinforceAgent):
    trajectory = Trajectory(env.scenario.episode_length)
    state = env.state
    entropy = agent.policy_entropy(env.encode())
    best = env.current_metric
    final = env.current_metric
    reward_sum = 0.0
    for _ in range(env.scenario.episode_length):
        encoded = env.encode()
        action = agent.select_action(encoded)
        next_state, reward, metric = env.step(action)
        trajectory.append(state, encoded, action, reward, next_state)
        state = next_state
        reward_sum += reward
        best = max(best, metric)
        final = metric
    agent.update(trajectory)
    return final, best, reward_sum, entropy


def _rollout_wolpertinger(env, agent: WolpertingerAgent):
    best = env.current_metric
    final = env.current_metric
    reward_sum = 0.0
    for _ in range(env.scenario.episode_length):
        encoded = env.encode()
        action = agent.select_action(encoded, env.valid_actions())
        _, reward, metric = env.step(action)
        agent.observe(encoded, action, reward, env.encode())
        reward_sum += reward
        best = max(best, metric)
        final = metric
    agent.end_episode()
    return final, best, reward_sum, None


def run_seed(cfg: ExperimentConfig, seed: int) -> tuple[list[EpisodeRecord], object]:
    """All episodes for one seed. Returns (records, agent-or-None)."""
    env = make_env(cfg.scenario, cfg.topology, cfg.radio, cfg.mac)
    agent = _make_agent(cfg, env, seed)
    baseline = cfg.agent.baseline_name
    records = []
    for episode in range(cfg.run.episodes):
        start = time.perf_counter()
        _, x0 = env.reset(_episode_generator(cfg, seed, episode))
        if baseline is not None:
            plan = _baseline_plan(baseline, env, cfg, baseline_rng(seed, episode))
            metric = env.evaluate_grouping(plan) if isinstance(env, GroupSwapEnv) else env.evaluate_plan(plan)
            final, best, reward_sum, entropy = metric, metric, 0.0, None
        elif isinstance(agent, ReinforceAgent):
            final, best, reward_sum, entropy = _rollout_reinforce(env, agent)
        else:
            final, best, reward_sum, entropy = _rollout_wolpertinger(env, agent)
        records.append(
            EpisodeRecord(
                episode=episode,
                seed=seed,
                scenario=cfg.scenario.scenario,
                agent=cfg.agent.kind,
                final_metric=final,
                best_metric=best,
                reward_sum=reward_sum,
                wall_clock_ms=(time.perf_counter() - start) * 1e3,
                policy_entropy=entropy,
            )
        )
    return records, agent


def converged_plan(cfg: ExperimentConfig, agent: ReinforceAgent, seed: int, probes: int = 5) -> np.ndarray:
    """The plan the trained policy converges to.

    Greedy rollouts on a few fresh evaluation episodes each contribute their
    best-metric state as a candidate; candidates are then scored across all
    probe episodes and the best average wins. A single rollout would hand
    back whatever its own fading realization happened to favor.
    """
    env = make_env(cfg.scenario, cfg.topology, cfg.radio, cfg.mac)
    candidates: list[np.ndarray] = []
    for probe in range(probes):
        _, x0 = env.reset(_episode_generator(cfg, seed, cfg.run.episodes + probe))
        best_plan, best_metric = env.state, x0
        for _ in range(cfg.scenario.episode_length):
            plan, _, metric = env.step(agent.greedy_action(env.encode()))
            if metric > best_metric:
                best_plan, best_metric = plan.copy(), metric
        if not any(np.array_equal(best_plan, c) for c in candidates):
            candidates.append(best_plan)
    scores = np.zeros(len(candidates))
    for probe in range(probes):
        env.reset(_episode_generator(cfg, seed, cfg.run.episodes + probe))
        for i, plan in enumerate(candidates):
            scores[i] += env.evaluate_plan(plan)
    return candidates[int(np.argmax(scores))]


def _slug(cfg: ExperimentConfig) -> str:
    return f"{cfg.scenario.scenario}_{cfg.agent.kind.replace(':', '-')}"


def run_experiment(cfg: ExperimentConfig) -> dict[int, list[EpisodeRecord]]:
    """Run every configured seed, writing per-seed CSVs, a merged CSV,
    checkpoints, and (for learned P1 runs) the converged channel plan."""
    cfg.validate()
    out = cfg.run.out_dir
    os.makedirs(out, exist_ok=True)
    slug = _slug(cfg)
    all_records: dict[int, list[EpisodeRecord]] = {}
    final_window: dict[int, float] = {}
    for seed in cfg.run.seeds:
        records, agent = run_seed(cfg, seed)
        all_records[seed] = records
        emit_csv(records, os.path.join(out, f"{slug}_seed{seed}.csv"))
        series = [r.final_metric for r in records]
        final_window[seed] = float(moving_average(series, 50)[-1])
        if isinstance(agent, (ReinforceAgent, WolpertingerAgent)) and cfg.run.save_checkpoints:
            agent.save(os.path.join(out, f"{slug}_seed{seed}.ckpt.npz"))
        if isinstance(agent, ReinforceAgent) and cfg.scenario.scenario == "P1":
            save_plan(os.path.join(out, f"s_star_seed{seed}.txt"), converged_plan(cfg, agent, seed))
    merged = [rec for seed in cfg.run.seeds for rec in all_records[seed]]
    emit_csv(merged, os.path.join(out, f"{slug}.csv"))
    if cfg.agent.kind == "reinforce" and cfg.scenario.scenario == "P1":
        best_seed = max(final_window, key=final_window.get)
        src = os.path.join(out, f"s_star_seed{best_seed}.txt")
        dst = os.path.join(out, "s_star.txt")
        with open(src, "r", encoding="utf-8") as fh:
            content = fh.read()
        with open(dst, "w", encoding="utf-8") as fh:
            fh.write(content)
    return all_records
