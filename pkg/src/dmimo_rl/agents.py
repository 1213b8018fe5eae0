"""Learning agents: Monte-Carlo policy gradients and DDPG with a Wolpertinger
discrete-action head.

Both agents own their networks and optimizer state and are single-writer;
independent seeds run as independent instances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .envs import Trajectory, rh_pair_list
from .nets import Adam, DenseNetwork, DenseNetworkSpec, load_network, save_network, soft_update

log = logging.getLogger(__name__)


def discounted_returns(rewards, gamma: float) -> np.ndarray:
    """G_t = r_t + gamma * G_{t+1}, computed backwards with G after the end = 0."""
    r = np.asarray(rewards, dtype=float)
    out = np.empty_like(r)
    acc = 0.0
    for t in range(r.size - 1, -1, -1):
        acc = r[t] + gamma * acc
        out[t] = acc
    return out


class ReinforceAgent:
    """On-policy Monte-Carlo policy gradient over a softmax action distribution.

    The update follows the episodic rule: for each step t (1-based) the
    log-likelihood gradient of the chosen action is scaled by gamma^t * G_t
    and ascended with Adam. `per_step_updates` applies one Adam step per t
    in order; the default accumulates the whole episode into one step, which
    has the same expected direction. `step_discount=False` drops the
    gamma^t factor (the common practical variant) while keeping G_t.
    """

    def __init__(
        self,
        n_inputs: int,
        n_actions: int,
        rng: np.random.Generator,
        gamma: float = 0.10,
        learning_rate: float = 0.003,
        hidden_widths: tuple[int, ...] = (48,),
        per_step_updates: bool = False,
        step_discount: bool = True,
    ):
        spec = DenseNetworkSpec((n_inputs, *hidden_widths, n_actions), "relu", "softmax")
        self.policy = DenseNetwork.init(spec, rng)
        self.optimizer = Adam(self.policy, learning_rate)
        self.rng = rng
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.per_step_updates = per_step_updates
        self.step_discount = step_discount

    @property
    def n_actions(self) -> int:
        return self.policy.spec.n_outputs

    def action_probabilities(self, encoded_state) -> np.ndarray:
        probs, _ = self.policy.forward(np.asarray(encoded_state, dtype=float))
        return probs

    def select_action(self, encoded_state) -> int:
        return int(self.rng.choice(self.n_actions, p=self.action_probabilities(encoded_state)))

    def greedy_action(self, encoded_state) -> int:
        return int(np.argmax(self.action_probabilities(encoded_state)))

    def policy_entropy(self, encoded_state) -> float:
        p = self.action_probabilities(encoded_state)
        return float(-(p * np.log(np.maximum(p, 1e-300))).sum())

    def _step_coefficients(self, rewards) -> np.ndarray:
        g = discounted_returns(rewards, self.gamma)
        if not self.step_discount:
            return g
        t = np.arange(1, g.size + 1)
        return self.gamma**t * g

    def update(self, trajectory: Trajectory):
        """One policy improvement from a complete episode."""
        if not trajectory.complete:
            raise ValueError(
                f"REINFORCE needs the full trajectory: got {len(trajectory)} of {trajectory.episode_length} steps"
            )
        states = np.asarray(trajectory.encoded_states, dtype=float)
        actions = np.asarray(trajectory.actions, dtype=int)
        coef = self._step_coefficients(trajectory.rewards)
        if self.per_step_updates:
            for t in range(len(trajectory)):
                probs, cache = self.policy.forward(states[t])
                grad_out = np.zeros(self.n_actions)
                grad_out[actions[t]] = coef[t] / probs[actions[t]]
                grads, _ = self.policy.backward(cache, grad_out)
                self.optimizer.step(self.policy, grads, direction="ascend")
        else:
            probs, cache = self.policy.forward(states)
            grad_out = np.zeros_like(probs)
            rows = np.arange(len(trajectory))
            grad_out[rows, actions] = coef / probs[rows, actions]
            grads, _ = self.policy.backward(cache, grad_out)
            self.optimizer.step(self.policy, grads, direction="ascend")

    def save(self, path):
        save_network(
            self.policy,
            path,
            metadata={
                "agent": "reinforce",
                "gamma": self.gamma,
                "learning_rate": self.learning_rate,
                "per_step_updates": self.per_step_updates,
                "step_discount": self.step_discount,
            },
        )

    @classmethod
    def load(cls, path, rng: np.random.Generator) -> "ReinforceAgent":
        net, meta = load_network(path)
        agent = cls.__new__(cls)
        agent.policy = net
        agent.optimizer = Adam(net, meta.get("learning_rate", 0.003))
        agent.rng = rng
        agent.gamma = meta.get("gamma", 0.10)
        agent.learning_rate = meta.get("learning_rate", 0.003)
        agent.per_step_updates = meta.get("per_step_updates", False)
        agent.step_discount = meta.get("step_discount", True)
        return agent


# --- replay buffer and action embedding ------------------------------------------


class ReplayBuffer:
    """Ring buffer over (state, action embedding, reward, next state).

    Oldest records are evicted first; sampling is uniform without
    replacement within a batch.
    """

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self._n = 0
        self._pos = 0

    def __len__(self) -> int:
        return self._n

    def push(self, state, action_embedding: float, reward: float, next_state):
        i = self._pos
        self.states[i] = state
        self.actions[i] = action_embedding
        self.rewards[i] = reward
        self.next_states[i] = next_state
        self._pos = (i + 1) % self.capacity
        self._n = min(self._n + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        if self._n == 0:
            raise ValueError("cannot sample from an empty buffer")
        if batch_size > self._n:
            raise ValueError(f"batch of {batch_size} requested but only {self._n} records stored")
        idx = rng.choice(self._n, size=batch_size, replace=False)
        return (
            self.states[idx].copy(),
            self.actions[idx].copy(),
            self.rewards[idx].copy(),
            self.next_states[idx].copy(),
        )


@dataclass(frozen=True)
class ActionEmbedding:
    """Bijective, monotone map between discrete actions and points in [-1, 1]."""

    pairs: tuple[tuple[int, int], ...]
    values: np.ndarray

    @classmethod
    def for_rh_pairs(cls, n_rhs: int) -> "ActionEmbedding":
        pairs = tuple(rh_pair_list(n_rhs))
        return cls(pairs=pairs, values=np.linspace(-1.0, 1.0, len(pairs)))

    def __len__(self) -> int:
        return len(self.pairs)

    def value(self, index: int) -> float:
        return float(self.values[index])


def wolpertinger_select(proto: float, embedding_values: np.ndarray, valid_indices: np.ndarray, k: int, q_fn) -> int:
    """Refine a continuous proto-action into a discrete one.

    Retrieves the k valid actions whose embeddings are nearest to the proto
    point, scores them with `q_fn` (a batch of embedding values -> values),
    and returns the best. k is clamped to the number of valid actions.
    """
    valid = np.asarray(valid_indices, dtype=int)
    if valid.size == 0:
        raise ValueError("no valid actions to select from")
    k = max(1, min(k, valid.size))
    dist = np.abs(embedding_values[valid] - proto)
    nearest = valid[np.argsort(dist, kind="stable")[:k]]
    scores = np.asarray(q_fn(embedding_values[nearest]), dtype=float).ravel()
    return int(nearest[int(np.argmax(scores))])


class WolpertingerAgent:
    """DDPG actor-critic over a 1-D action embedding with k-NN refinement.

    The actor emits a proto-action in [-1, 1]; exploration adds Gaussian
    noise whose scale decays linearly across episodes. The critic scores
    (state, embedding) pairs and both re-ranks the k nearest valid actions
    at decision time and drives the deterministic policy gradient.
    """

    def __init__(
        self,
        state_dim: int,
        embedding: ActionEmbedding,
        rng: np.random.Generator,
        gamma: float = 0.25,
        k: int = 32,
        actor_hidden: tuple[int, ...] = (256, 128),
        critic_hidden: tuple[int, ...] = (64, 32),
        actor_lr: float = 0.003,
        critic_lr: float = 0.007,
        tau_actor: float = 0.001,
        tau_critic: float = 0.001,
        buffer_capacity: int = 10_000,
        batch_size: int = 100,
        sigma_start: float = 0.5,
        sigma_end: float = 0.05,
        sigma_decay_episodes: int = 500,
    ):
        self.embedding = embedding
        self.rng = rng
        self.gamma = gamma
        self.k = k
        self.batch_size = batch_size
        self.tau_actor = tau_actor
        self.tau_critic = tau_critic
        self.sigma_start = sigma_start
        self.sigma_end = sigma_end
        self.sigma_decay_episodes = sigma_decay_episodes
        self.episodes_done = 0

        actor_spec = DenseNetworkSpec((state_dim, *actor_hidden, 1), "softplus", "tanh")
        critic_spec = DenseNetworkSpec((state_dim + 1, *critic_hidden, 1), "softplus", "identity")
        self.actor = DenseNetwork.init(actor_spec, rng)
        self.critic = DenseNetwork.init(critic_spec, rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor, actor_lr)
        self.critic_opt = Adam(self.critic, critic_lr)
        self.buffer = ReplayBuffer(buffer_capacity, state_dim)

    @property
    def sigma(self) -> float:
        """Current exploration noise scale on the linear decay schedule."""
        if self.sigma_decay_episodes <= 0:
            return self.sigma_end
        frac = min(self.episodes_done / self.sigma_decay_episodes, 1.0)
        return self.sigma_start + (self.sigma_end - self.sigma_start) * frac

    def proto_action(self, encoded_state, noisy: bool = True) -> float:
        mu, _ = self.actor.forward(np.asarray(encoded_state, dtype=float))
        proto = float(mu[0])
        if noisy and self.sigma > 0:
            proto += float(self.rng.normal(0.0, self.sigma))
        return float(np.clip(proto, -1.0, 1.0))

    def q_values(self, encoded_state, embedding_values) -> np.ndarray:
        emb = np.atleast_1d(np.asarray(embedding_values, dtype=float))
        s = np.tile(np.asarray(encoded_state, dtype=float), (emb.size, 1))
        q, _ = self.critic.forward(np.concatenate([s, emb[:, None]], axis=1))
        return q.ravel()

    def select_action(self, encoded_state, valid_indices, k: int | None = None, noisy: bool = True) -> int:
        proto = self.proto_action(encoded_state, noisy=noisy)
        return wolpertinger_select(
            proto,
            self.embedding.values,
            valid_indices,
            self.k if k is None else k,
            lambda emb: self.q_values(encoded_state, emb),
        )

    def observe(self, encoded_state, action_index: int, reward: float, encoded_next_state) -> bool:
        """Store a transition and run one training step if the buffer allows."""
        self.buffer.push(encoded_state, self.embedding.value(action_index), reward, encoded_next_state)
        return self.train_step()

    def train_step(self) -> bool:
        """One DDPG update from a uniform mini-batch; no-op on an underfull buffer."""
        if len(self.buffer) < self.batch_size:
            log.debug("replay buffer %d/%d: skipping update", len(self.buffer), self.batch_size)
            return False
        s, a, r, s2 = self.buffer.sample(self.batch_size, self.rng)
        batch = s.shape[0]

        a2, _ = self.actor_target.forward(s2)
        q2, _ = self.critic_target.forward(np.concatenate([s2, a2], axis=1))
        y = r[:, None] + self.gamma * q2

        q, cache = self.critic.forward(np.concatenate([s, a[:, None]], axis=1))
        grads, _ = self.critic.backward(cache, 2.0 * (q - y) / batch)
        self.critic_opt.step(self.critic, grads, direction="descend")

        mu, actor_cache = self.actor.forward(s)
        _, critic_cache = self.critic.forward(np.concatenate([s, mu], axis=1))
        _, dq_dinput = self.critic.backward(critic_cache, np.full((batch, 1), 1.0 / batch))
        actor_grads, _ = self.actor.backward(actor_cache, dq_dinput[:, -1:])
        self.actor_opt.step(self.actor, actor_grads, direction="ascend")

        soft_update(self.actor_target, self.actor, self.tau_actor)
        soft_update(self.critic_target, self.critic, self.tau_critic)
        return True

    def end_episode(self):
        self.episodes_done += 1

    def save(self, path):
        from .nets import save_networks

        save_networks(
            path,
            {
                "actor": self.actor,
                "critic": self.critic,
                "actor_target": self.actor_target,
                "critic_target": self.critic_target,
            },
            metadata={
                "agent": "wolpertinger",
                "gamma": self.gamma,
                "k": self.k,
                "episodes_done": self.episodes_done,
                "sigma": self.sigma,
                "sigma_start": self.sigma_start,
                "sigma_end": self.sigma_end,
                "sigma_decay_episodes": self.sigma_decay_episodes,
                "n_actions": len(self.embedding),
            },
        )

    @classmethod
    def load(cls, path, embedding: ActionEmbedding, rng: np.random.Generator) -> "WolpertingerAgent":
        from .nets import load_networks

        nets, meta = load_networks(path)
        agent = cls(
            state_dim=nets["actor"].spec.n_inputs,
            embedding=embedding,
            rng=rng,
            gamma=meta.get("gamma", 0.25),
            k=meta.get("k", 32),
            sigma_start=meta.get("sigma_start", 0.5),
            sigma_end=meta.get("sigma_end", 0.05),
            sigma_decay_episodes=meta.get("sigma_decay_episodes", 500),
        )
        agent.actor = nets["actor"]
        agent.critic = nets["critic"]
        agent.actor_target = nets["actor_target"]
        agent.critic_target = nets["critic_target"]
        agent.actor_opt = Adam(agent.actor, 0.003)
        agent.critic_opt = Adam(agent.critic, 0.007)
        agent.episodes_done = meta.get("episodes_done", 0)
        return agent
