"""Desk-scale reinforcement learning: DQN and PPO over flat-array envs.

Both algorithms run on the same hand-written two-layer networks as the
classifier, single-threaded and bit-reproducible under a fixed seed.
High-dimensional observations can be passed through a fixed seeded random
projection before the function approximator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _mlp
from .errors import ConfigError


@dataclass(frozen=True)
class PolicySpec:
    """Hyperparameters for either algorithm; unused fields are ignored."""

    gamma: float = 0.99
    lr: float = 1e-3
    hidden: int = 64
    # DQN
    buffer_capacity: int = 10_000
    minibatch: int = 64
    target_sync: int = 250
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 5000
    update_every: int = 1
    warmup_transitions: int = 200
    # PPO
    clip_eps: float = 0.2
    gae_lambda: float = 0.95
    ppo_epochs: int = 4
    rollout_horizon: int = 256
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    # observation handling
    projection_dim: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.eps_end > self.eps_start:
            raise ConfigError("epsilon schedule must be non-increasing")


class FixedProjection:
    """Seeded Gaussian random projection, stored with checkpoints."""

    def __init__(self, in_dim: int, out_dim: int, seed: int):
        self.in_dim, self.out_dim, self.seed = in_dim, out_dim, seed
        rng = np.random.default_rng(seed)
        self.matrix = rng.standard_normal((in_dim, out_dim)) / np.sqrt(in_dim)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64) @ self.matrix


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform no-replacement minibatches."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self._s = np.empty((capacity, state_dim), dtype=np.float32)
        self._a = np.empty(capacity, dtype=np.int64)
        self._r = np.empty(capacity, dtype=np.float64)
        self._s2 = np.empty((capacity, state_dim), dtype=np.float32)
        self._done = np.empty(capacity, dtype=bool)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def push(self, s, a, r, s2, done) -> None:
        i = self._next
        self._s[i] = s
        self._a[i] = a
        self._r[i] = r
        self._s2[i] = s2
        self._done[i] = done
        self._next = (self._next + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator):
        idx = rng.choice(self._size, size=n, replace=False)
        return (self._s[idx].astype(np.float64), self._a[idx], self._r[idx],
                self._s2[idx].astype(np.float64), self._done[idx])


class QNetwork:
    """Online network plus a lagged target copy."""

    def __init__(self, state_dim: int, n_actions: int, hidden: int,
                 rng: np.random.Generator, target_sync: int = 250):
        self.net = _mlp.TwoLayerNet(state_dim, hidden, n_actions, rng)
        self.target = self.net.copy()
        self.target_sync = target_sync
        self.updates = 0
        self.n_actions = n_actions

    def q_values(self, states: np.ndarray) -> np.ndarray:
        return self.net.forward(np.atleast_2d(states))

    def sync_target(self) -> None:
        self.target = self.net.copy()


def dqn_act(qnet: QNetwork, state: np.ndarray, epsilon: float,
            rng: np.random.Generator) -> int:
    """Epsilon-greedy action; greedy ties break to the lowest index."""
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(0, qnet.n_actions))
    q = qnet.q_values(state)[0]
    return int(np.argmax(q))


def dqn_update(qnet: QNetwork, buffer: ReplayBuffer, spec: PolicySpec,
               opt: _mlp.Adam, rng: np.random.Generator) -> float | None:
    """One Bellman-regression step on a uniform minibatch; None if starved."""
    if len(buffer) < spec.minibatch:
        return None
    s, a, r, s2, done = buffer.sample(spec.minibatch, rng)
    q_next = qnet.target.forward(s2).max(axis=1)
    y = r + spec.gamma * (1.0 - done.astype(np.float64)) * q_next
    logits, H = qnet.net.forward_cached(s)
    n = len(a)
    chosen = logits[np.arange(n), a]
    err = chosen - y
    loss = float(np.mean(err ** 2))
    dlogits = np.zeros_like(logits)
    dlogits[np.arange(n), a] = 2.0 * err / n
    grads = qnet.net.backward(s, H, dlogits)
    opt.step(qnet.net.params, grads)
    qnet.updates += 1
    if qnet.updates % qnet.target_sync == 0:
        qnet.sync_target()
    return loss


class DqnAgent:
    """Online DQN: act anneals epsilon, observe stores and learns."""

    def __init__(self, state_dim: int, n_actions: int, spec: PolicySpec, seed: int):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.projection = None
        net_dim = state_dim
        if spec.projection_dim is not None and spec.projection_dim < state_dim:
            self.projection = FixedProjection(state_dim, spec.projection_dim, seed)
            net_dim = spec.projection_dim
        self.qnet = QNetwork(net_dim, n_actions, spec.hidden, self.rng, spec.target_sync)
        self.buffer = ReplayBuffer(spec.buffer_capacity, net_dim)
        self.opt = _mlp.Adam(lr=spec.lr)
        self.steps = 0
        self.learning = True

    def _obs(self, state: np.ndarray) -> np.ndarray:
        return self.projection(state) if self.projection is not None else state

    @property
    def epsilon(self) -> float:
        if not self.learning:
            return 0.0
        frac = min(1.0, self.steps / max(1, self.spec.eps_decay_steps))
        return self.spec.eps_start + frac * (self.spec.eps_end - self.spec.eps_start)

    def act(self, state: np.ndarray, greedy: bool = False) -> int:
        eps = 0.0 if greedy else self.epsilon
        action = dqn_act(self.qnet, self._obs(state), eps, self.rng)
        if not greedy:
            self.steps += 1
        return action

    def greedy_actions(self, states: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(states)
        if self.projection is not None:
            obs = self.projection(obs)
        return np.argmax(self.qnet.q_values(obs), axis=1)

    def observe(self, s, a, r, s2, done) -> float | None:
        if not self.learning:
            return None
        self.buffer.push(self._obs(s), a, r, self._obs(s2), done)
        if len(self.buffer) < max(self.spec.minibatch, self.spec.warmup_transitions):
            return None
        if self.steps % self.spec.update_every:
            return None
        return dqn_update(self.qnet, self.buffer, self.spec, self.opt, self.rng)


# ---------------------------------------------------------------------------
# PPO
# ---------------------------------------------------------------------------

class PpoAgent:
    """Clipped-surrogate PPO with GAE on a categorical policy."""

    def __init__(self, state_dim: int, n_actions: int, spec: PolicySpec, seed: int):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.projection = None
        net_dim = state_dim
        if spec.projection_dim is not None and spec.projection_dim < state_dim:
            self.projection = FixedProjection(state_dim, spec.projection_dim, seed)
            net_dim = spec.projection_dim
        self.policy = _mlp.TwoLayerNet(net_dim, spec.hidden, n_actions, self.rng)
        self.value = _mlp.TwoLayerNet(net_dim, spec.hidden, 1, self.rng)
        self.opt_pi = _mlp.Adam(lr=spec.lr)
        self.opt_v = _mlp.Adam(lr=spec.lr)
        self.n_actions = n_actions
        self.learning = True
        self.steps = 0
        self.epsilon = 0.0  # kept for uniform episode logging
        self._rollout: list[tuple] = []
        self._cached: tuple[float, float] | None = None

    def _obs(self, state: np.ndarray) -> np.ndarray:
        return self.projection(state) if self.projection is not None else np.asarray(state, dtype=np.float64)

    def _policy_probs(self, obs: np.ndarray) -> np.ndarray:
        return _mlp.softmax(self.policy.forward(np.atleast_2d(obs)))[0]

    def act(self, state: np.ndarray, greedy: bool = False) -> int:
        obs = self._obs(state)
        probs = self._policy_probs(obs)
        if greedy or not self.learning:
            return int(np.argmax(probs))
        action = int(self.rng.choice(self.n_actions, p=probs))
        logp = float(np.log(max(probs[action], 1e-300)))
        v = float(self.value.forward(obs[None, :])[0, 0])
        self._cached = (logp, v)
        self.steps += 1
        return action

    def greedy_actions(self, states: np.ndarray) -> np.ndarray:
        obs = np.atleast_2d(states)
        if self.projection is not None:
            obs = self.projection(obs)
        return np.argmax(self.policy.forward(obs), axis=1)

    def observe(self, s, a, r, s2, done) -> float | None:
        if not self.learning:
            return None
        if self._cached is None:
            raise RuntimeError("observe() without a preceding act()")
        logp, v = self._cached
        self._cached = None
        self._rollout.append((self._obs(s), a, r, self._obs(s2), done, logp, v))
        if len(self._rollout) >= self.spec.rollout_horizon:
            return self._update()
        return None

    def _update(self) -> float:
        spec = self.spec
        S = np.stack([t[0] for t in self._rollout])
        A = np.array([t[1] for t in self._rollout], dtype=np.int64)
        R = np.array([t[2] for t in self._rollout])
        dones = np.array([t[4] for t in self._rollout], dtype=np.float64)
        logp_old = np.array([t[5] for t in self._rollout])
        values = np.array([t[6] for t in self._rollout])
        last_s2, last_done = self._rollout[-1][3], self._rollout[-1][4]
        bootstrap = 0.0 if last_done else float(self.value.forward(last_s2[None, :])[0, 0])
        self._rollout.clear()

        T = len(R)
        adv = np.zeros(T)
        next_v = bootstrap
        gae = 0.0
        for t in range(T - 1, -1, -1):
            delta = R[t] + spec.gamma * next_v * (1.0 - dones[t]) - values[t]
            gae = delta + spec.gamma * spec.gae_lambda * (1.0 - dones[t]) * gae
            adv[t] = gae
            next_v = values[t]
        returns = adv + values
        adv_n = (adv - adv.mean()) / (adv.std() + 1e-8)

        last_loss = 0.0
        for _ in range(spec.ppo_epochs):
            order = self.rng.permutation(T)
            for start in range(0, T, spec.minibatch):
                idx = order[start: start + spec.minibatch]
                last_loss = self._minibatch_step(S[idx], A[idx], adv_n[idx],
                                                 returns[idx], logp_old[idx])
        return last_loss

    def _minibatch_step(self, S, A, adv, ret, logp_old) -> float:
        spec = self.spec
        n = len(A)
        logits, Hc = self.policy.forward_cached(S)
        probs = _mlp.softmax(logits)
        logp = np.log(np.maximum(probs[np.arange(n), A], 1e-300))
        ratio = np.exp(logp - logp_old)
        clipped_out = ((ratio > 1.0 + spec.clip_eps) & (adv > 0)) | \
                      ((ratio < 1.0 - spec.clip_eps) & (adv < 0))
        flow = np.where(clipped_out, 0.0, adv * ratio)
        surrogate = float(np.minimum(ratio * adv,
                                     np.clip(ratio, 1 - spec.clip_eps, 1 + spec.clip_eps) * adv).mean())
        ent = -(probs * np.log(np.maximum(probs, 1e-300))).sum(axis=1)

        # d(-surrogate - c_H * entropy)/dlogits
        onehot = np.zeros_like(probs)
        onehot[np.arange(n), A] = 1.0
        dlogits = -(flow[:, None] * (onehot - probs)) / n
        dlogits += spec.entropy_coef * (probs * (np.log(np.maximum(probs, 1e-300)) + ent[:, None])) / n
        grads = self.policy.backward(S, Hc, dlogits)
        self.opt_pi.step(self.policy.params, grads)

        v_out, Hv = self.value.forward_cached(S)
        v = v_out[:, 0]
        dv = ((v - ret) / n)[:, None]
        vgrads = self.value.backward(S, Hv, dv)
        self.opt_v.step(self.value.params, vgrads)

        v_loss = 0.5 * float(np.mean((v - ret) ** 2))
        return -surrogate - spec.entropy_coef * float(ent.mean()) + spec.value_coef * v_loss


# ---------------------------------------------------------------------------
# training loop and episode logs
# ---------------------------------------------------------------------------

@dataclass
class EpisodeRecord:
    episode: int
    reward: float
    steps: int
    epsilon: float
    rolling_mean: float
    rolling_std: float
    actions: list[int] = field(default_factory=list)


class EpisodeLog:
    """Per-episode rewards with a rolling window; CSV-serializable."""

    CSV_COLUMNS = ("episode", "reward", "steps", "epsilon", "rolling_mean", "rolling_std")

    def __init__(self, window: int = 20):
        self.window = window
        self.records: list[EpisodeRecord] = []

    def add(self, reward: float, steps: int, epsilon: float,
            actions: Sequence[int] = ()) -> EpisodeRecord:
        recent = [r.reward for r in self.records[-(self.window - 1):]] + [reward]
        rec = EpisodeRecord(
            episode=len(self.records),
            reward=reward,
            steps=steps,
            epsilon=epsilon,
            rolling_mean=float(np.mean(recent)),
            rolling_std=float(np.std(recent)),
            actions=list(actions),
        )
        self.records.append(rec)
        return rec

    def __len__(self) -> int:
        return len(self.records)

    def rewards(self) -> np.ndarray:
        return np.array([r.reward for r in self.records])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.CSV_COLUMNS)
            for r in self.records:
                writer.writerow([r.episode, repr(r.reward), r.steps, repr(r.epsilon),
                                 repr(r.rolling_mean), repr(r.rolling_std)])


def make_agent(algo: str, state_dim: int, n_actions: int, spec: PolicySpec, seed: int):
    if algo == "dqn":
        return DqnAgent(state_dim, n_actions, spec, seed)
    if algo == "ppo":
        return PpoAgent(state_dim, n_actions, spec, seed)
    raise ConfigError(f"unknown algorithm {algo!r}")


def train_loop(env, algo: str, spec: PolicySpec, episodes: int, seed: int,
               agent=None) -> tuple[object, EpisodeLog]:
    """Train `algo` on a reset/step environment for a number of episodes."""
    if episodes < 1:
        raise ConfigError("episodes must be at least 1")
    log = EpisodeLog()
    state = env.reset()
    if agent is None:
        agent = make_agent(algo, len(state), env.n_actions, spec, seed)
    for ep in range(episodes):
        if ep > 0:
            state = env.reset()
        total, steps = 0.0, 0
        actions: list[int] = []
        done = False
        while not done:
            a = agent.act(state)
            s2, r, done, _info = env.step(a)
            agent.observe(state, a, r, s2, done)
            state = s2
            total += r
            steps += 1
            actions.append(a)
        log.add(total, steps, agent.epsilon, actions)
    return agent, log


def ppo_train(env, spec: PolicySpec, episodes: int, seed: int) -> tuple[PpoAgent, EpisodeLog]:
    agent, log = train_loop(env, "ppo", spec, episodes, seed)
    return agent, log


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_policy(agent, path: str | Path) -> None:
    proj_seed = agent.projection.seed if agent.projection is not None else -1
    proj_dim = agent.projection.out_dim if agent.projection is not None else -1
    proj_in = agent.projection.in_dim if agent.projection is not None else -1
    if isinstance(agent, DqnAgent):
        np.savez(path, kind=np.array(["dqn"]),
                 dims=np.array([agent.qnet.net.n_in, agent.qnet.net.n_hidden,
                                agent.qnet.net.n_out]),
                 flat=agent.qnet.net.get_flat(),
                 target_flat=agent.qnet.target.get_flat(),
                 steps=np.array([agent.steps]),
                 projection=np.array([proj_in, proj_dim, proj_seed]))
    elif isinstance(agent, PpoAgent):
        np.savez(path, kind=np.array(["ppo"]),
                 dims=np.array([agent.policy.n_in, agent.policy.n_hidden,
                                agent.policy.n_out]),
                 flat=agent.policy.get_flat(),
                 value_flat=agent.value.get_flat(),
                 steps=np.array([agent.steps]),
                 projection=np.array([proj_in, proj_dim, proj_seed]))
    else:
        raise ConfigError(f"cannot checkpoint {type(agent).__name__}")


def load_policy(path: str | Path, spec: PolicySpec | None = None, seed: int = 0):
    spec = spec or PolicySpec()
    with np.load(path, allow_pickle=False) as ck:
        kind = str(ck["kind"][0])
        dims = ck["dims"]
        proj_in, proj_dim, proj_seed = (int(v) for v in ck["projection"])
        state_dim = proj_in if proj_in > 0 else int(dims[0])
        pspec = PolicySpec(**{**spec.__dict__, "hidden": int(dims[1]),
                              "projection_dim": proj_dim if proj_dim > 0 else None})
        agent = make_agent(kind, state_dim, int(dims[2]), pspec, seed)
        if proj_in > 0:
            agent.projection = FixedProjection(proj_in, proj_dim, proj_seed)
        if kind == "dqn":
            agent.qnet.net.set_flat(ck["flat"])
            agent.qnet.target.set_flat(ck["target_flat"])
            agent.steps = int(ck["steps"][0])
        else:
            agent.policy.set_flat(ck["flat"])
            agent.value.set_flat(ck["value_flat"])
            agent.steps = int(ck["steps"][0])
    return agent
