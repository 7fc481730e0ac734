"""The two Markov decision processes of the game.

Red: perturb one malicious packet against a frozen classifier snapshot
until it flips to benign or the step limit is hit.  Blue: pick adaptation
strategies for the current batch until test accuracy clears the threshold
or the per-batch action budget runs out.

Both expose the flat reset/step API (numpy state, int action, scalar
reward, done flag, info dict) so any agent implementation can drive them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import drift, nids, perturb, traffic
from .errors import ConfigError, EpisodeFinished

BLUE_STATE_DIM = 5 + traffic.FEATURE_LEN  # 1,530
MASK_NONE = "none"
MASK_MODEL = "model"
MASK_DATA = "data"


@dataclass(frozen=True)
class RedEnvConfig:
    max_steps: int = 10
    step_penalty: float = 0.1
    evasion_bonus: float = 10.0
    prob_shaping_weight: float = 10.0

    def __post_init__(self):
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")


@dataclass(frozen=True)
class BlueEnvConfig:
    accuracy_threshold: float = 0.9
    max_actions_per_batch: int = 5
    reward_pass: float = 10.0
    reward_cost_scale: float = 10.0
    reward_gain_scale: float = 50.0
    ablation_mask: str = MASK_NONE

    def __post_init__(self):
        if not 0.0 < self.accuracy_threshold < 1.0:
            raise ConfigError("accuracy threshold must lie in (0, 1)")
        if self.max_actions_per_batch < 1:
            raise ConfigError("max_actions_per_batch must be at least 1")
        if self.ablation_mask not in (MASK_NONE, MASK_MODEL, MASK_DATA):
            raise ConfigError(f"unknown ablation mask {self.ablation_mask!r}")


class RedEvasionEnv:
    """Evasion episodes over a pool of malicious packets vs a frozen model."""

    def __init__(self, model: nids.ClassifierModel, pool: Sequence[traffic.RawPacket],
                 cfg: RedEnvConfig = RedEnvConfig(),
                 perturb_cfg: perturb.PerturbConfig = perturb.DEFAULT_CONFIG,
                 rng: np.random.Generator | None = None):
        if len(pool) == 0:
            raise ConfigError("malicious packet pool is empty")
        self.model = model
        self.cfg = cfg
        self.perturb_cfg = perturb_cfg
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.pool = list(pool)
        self.n_actions = perturb.N_ACTIONS
        self._frozen_version = model.version
        self._view: perturb.PacketView | None = None
        self._features: np.ndarray | None = None
        self._p_benign = 0.0
        self._steps = 0
        self._done = True
        # only packets the snapshot currently flags as malicious are playable
        X = np.stack([traffic.preprocess(p).values for p in self.pool])
        self._eligible = np.nonzero(nids.predict_labels(model, X) == 1)[0]

    @property
    def eligible_indices(self) -> np.ndarray:
        return self._eligible

    def reset(self) -> np.ndarray:
        if len(self._eligible) == 0:
            raise ConfigError("no pool packet is currently classified malicious")
        pick = int(self._eligible[self.rng.integers(0, len(self._eligible))])
        return self.reset_to(self.pool[pick])

    def reset_to(self, pkt: traffic.RawPacket) -> np.ndarray:
        """Start an episode on a specific malicious packet."""
        self._view = perturb.PacketView.from_raw(pkt)
        fv = perturb.to_features(self._view)
        self._features = fv.values
        self._p_benign = float(nids.predict_proba(self.model, self._features)[0])
        self._steps = 0
        self._done = False
        return self._features

    def step(self, action: int) -> tuple[np.ndarray, float, bool, dict]:
        if self._done:
            raise EpisodeFinished("red episode already finished")
        assert self.model.version == self._frozen_version, "snapshot mutated mid-episode"
        self._view, effective = perturb.apply(self._view, action, self.perturb_cfg)
        if effective:
            self._features = perturb.to_features(self._view).values
        probs = nids.predict_proba(self.model, self._features)
        p_benign = float(probs[0])
        evaded = probs[0] > probs[1]
        self._steps += 1
        done = evaded or self._steps >= self.cfg.max_steps

        reward = self.cfg.prob_shaping_weight * (p_benign - self._p_benign)
        reward -= self.cfg.step_penalty
        if evaded:
            reward += self.cfg.evasion_bonus
        if not effective:
            reward -= self.cfg.step_penalty

        self._p_benign = p_benign
        self._done = done
        info = {"evaded": evaded, "ineffective": not effective, "steps": self._steps}
        return self._features, reward, done, info

    @property
    def current_view(self) -> perturb.PacketView:
        return self._view


def blue_observe(batch_X: np.ndarray, seen: drift.SeenStats, model: nids.ClassifierModel,
                 test_X: np.ndarray, test_y: np.ndarray,
                 mask: str = MASK_NONE,
                 metrics: nids.Metrics | None = None) -> np.ndarray:
    """State vector [acc, fpr, fnr, d_kl, d_w, feature-diff] (1,530 dims).

    `mask='model'` zeroes the first three entries, `mask='data'` zeroes the
    last 1,527; pass a precomputed `metrics` to skip re-evaluation.
    """
    if metrics is None:
        metrics = nids.evaluate_arrays(model, test_X, test_y)
    state = np.empty(BLUE_STATE_DIM)
    state[0] = metrics.acc
    state[1] = metrics.fpr
    state[2] = metrics.fnr
    state[3] = drift.kl_divergence(batch_X, seen)
    state[4] = drift.wasserstein(batch_X, seen)
    state[5:] = drift.feature_diff(batch_X, seen)
    if mask == MASK_MODEL:
        state[:3] = 0.0
    elif mask == MASK_DATA:
        state[3:] = 0.0
    return state


class BlueAdaptEnv:
    """Per-batch adaptation episodes around a live (mutated in place) model."""

    n_actions = drift.N_ACTIONS

    def __init__(self, model: nids.ClassifierModel, seen: drift.SeenStats,
                 budget: drift.AdaptationBudget = drift.AdaptationBudget(),
                 cfg: BlueEnvConfig = BlueEnvConfig(),
                 rng: np.random.Generator | None = None):
        self.model = model
        self.seen = seen
        self.budget = budget
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._test_X: np.ndarray | None = None
        self._test_y: np.ndarray | None = None
        self._pool_X: np.ndarray | None = None
        self._pool_y: np.ndarray | None = None
        self._acc_prev = 0.0
        self._actions_taken = 0
        self._done = True
        self.total_label_queries = 0

    def set_test(self, test_X: np.ndarray, test_y: np.ndarray) -> None:
        self._test_X = np.asarray(test_X, dtype=np.float64)
        self._test_y = np.asarray(test_y, dtype=np.int64)

    def begin_round(self, pool_X: np.ndarray, pool_y: np.ndarray) -> np.ndarray:
        """Bind the round's adaptation pool; returns the initial state."""
        if self._test_X is None:
            raise ConfigError("set_test must be called before begin_round")
        if len(pool_X) == 0:
            raise ConfigError("adaptation pool is empty")
        self._pool_X = np.asarray(pool_X, dtype=np.float64)
        self._pool_y = np.asarray(pool_y, dtype=np.int64)
        self._actions_taken = 0
        self._done = False
        metrics = nids.evaluate_arrays(self.model, self._test_X, self._test_y)
        self._acc_prev = metrics.acc
        return self.observe(metrics)

    def observe(self, metrics: nids.Metrics | None = None) -> np.ndarray:
        return blue_observe(self._pool_X, self.seen, self.model,
                            self._test_X, self._test_y,
                            mask=self.cfg.ablation_mask, metrics=metrics)

    def step(self, action_id: int) -> tuple[np.ndarray, float, bool, dict]:
        if self._done:
            raise EpisodeFinished("blue turn already finished")
        oracle = lambda idx: self._pool_y[np.asarray(idx, dtype=np.int64)]
        outcome = drift.apply_adaptation(self.model, int(action_id), self._pool_X,
                                         self.budget, oracle, self.seen, self.rng)
        self.total_label_queries += outcome.labels_queried
        metrics = nids.evaluate_arrays(self.model, self._test_X, self._test_y)
        acc_t = metrics.acc

        if acc_t > self.cfg.accuracy_threshold:
            reward = self.cfg.reward_pass
        else:
            r = outcome.samples_used / self._pool_X.shape[0]
            reward = (-self.cfg.reward_cost_scale * r
                      + self.cfg.reward_gain_scale * (acc_t - self._acc_prev))

        self._actions_taken += 1
        done = (acc_t > self.cfg.accuracy_threshold
                or self._actions_taken >= self.cfg.max_actions_per_batch)
        info = {
            "accuracy": acc_t,
            "accuracy_prev": self._acc_prev,
            "samples_used": outcome.samples_used,
            "labels_queried": outcome.labels_queried,
            "sample_ratio": outcome.samples_used / self._pool_X.shape[0],
            "selected_indices": outcome.selected_indices,
            "model_version": self.model.version,
        }
        self._acc_prev = acc_t
        state = self.observe(metrics)
        if done:
            self._done = True
            # the turn is over: fold the batch into the seen statistics
            self.seen.ingest(self._pool_X, self._pool_y)
        return state, float(reward), done, info
