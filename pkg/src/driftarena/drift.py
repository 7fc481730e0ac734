"""Distribution-shift measurement and the four adaptation strategies.

Divergences between the current batch and previously seen traffic are
estimated per feature in one dimension (histogram KL with add-one
smoothing, exact empirical-CDF Wasserstein-1) and averaged over the
1,525 features.  That is the cheapest defensible estimator at this input
width; nothing here attempts a joint high-dimensional estimate.

The selectors are pure: they never touch the model or the batch.  Model
updates happen only in `apply_adaptation`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import nids, traffic
from .errors import ConfigError

ACTION_ONLINE = 0
ACTION_ACTIVE = 1
ACTION_CONTINUAL = 2
ACTION_PSEUDO = 3
N_ACTIONS = 4
ACTION_NAMES = {
    ACTION_ONLINE: "online_learning",
    ACTION_ACTIVE: "active_learning",
    ACTION_CONTINUAL: "continual_learning",
    ACTION_PSEUDO: "pseudo_labeling",
}

KL_BINS = 16


@dataclass(frozen=True)
class AdaptationBudget:
    B: int = 30
    p_low: float = 0.4
    p_high: float = 0.6
    tau_low: float = 0.2
    tau_high: float = 0.6
    conf_threshold: float = 0.95

    def __post_init__(self):
        if self.p_low > self.p_high:
            raise ConfigError("p_low must not exceed p_high")
        if self.tau_low > self.tau_high:
            raise ConfigError("tau_low must not exceed tau_high")
        if not 0.5 < self.conf_threshold <= 1.0:
            raise ConfigError("conf_threshold must lie in (0.5, 1]")
        if self.B < 1:
            raise ConfigError("query budget B must be at least 1")


@dataclass
class AdaptationOutcome:
    model: nids.ClassifierModel
    samples_used: int
    labels_queried: int
    selected_indices: list[int]


class SeenStats:
    """Exact running mean plus a uniform reservoir of previously seen samples."""

    def __init__(self, dim: int = traffic.FEATURE_LEN, reservoir_cap: int = 2000,
                 seed: int = 0):
        self.dim = dim
        self.mean = np.zeros(dim)
        self.count = 0
        self.reservoir_cap = reservoir_cap
        self._res_X = np.empty((reservoir_cap, dim))
        self._res_y = np.empty(reservoir_cap, dtype=np.int64)
        self._res_size = 0
        self._rng = np.random.default_rng(seed)
        self._cache_token = 0
        self._hist_cache: tuple[int, int, np.ndarray] | None = None
        self._sorted_cache: tuple[int, np.ndarray] | None = None

    @property
    def is_cold(self) -> bool:
        return self.count == 0

    @property
    def reservoir_features(self) -> np.ndarray:
        return self._res_X[: self._res_size]

    @property
    def reservoir_labels(self) -> np.ndarray:
        return self._res_y[: self._res_size]

    def ingest(self, X: np.ndarray, y: np.ndarray | None = None) -> None:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        n = X.shape[0]
        if n == 0:
            return
        if y is None:
            y = np.zeros(n, dtype=np.int64)
        total = self.count + n
        self.mean = (self.mean * self.count + X.sum(axis=0)) / total
        # Vitter's algorithm R, one stream item at a time
        for i in range(n):
            self.count += 1
            if self._res_size < self.reservoir_cap:
                self._res_X[self._res_size] = X[i]
                self._res_y[self._res_size] = y[i]
                self._res_size += 1
            else:
                j = int(self._rng.integers(0, self.count))
                if j < self.reservoir_cap:
                    self._res_X[j] = X[i]
                    self._res_y[j] = y[i]
        self._cache_token += 1

    def sample_replay(self, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        k = min(k, self._res_size)
        if k == 0:
            return np.empty((0, self.dim)), np.empty(0, dtype=np.int64)
        idx = rng.choice(self._res_size, size=k, replace=False)
        return self._res_X[idx], self._res_y[idx]

    # cached per-feature summaries of the reservoir; rebuilt after ingest
    def histogram(self, bins: int) -> np.ndarray:
        cached = self._hist_cache
        if cached is not None and cached[0] == self._cache_token and cached[1] == bins:
            return cached[2]
        counts = _feature_histogram(self.reservoir_features, bins)
        self._hist_cache = (self._cache_token, bins, counts)
        return counts

    def sorted_features(self) -> np.ndarray:
        cached = self._sorted_cache
        if cached is not None and cached[0] == self._cache_token:
            return cached[1]
        srt = np.sort(self.reservoir_features, axis=0)
        self._sorted_cache = (self._cache_token, srt)
        return srt


def _as_matrix(batch) -> np.ndarray:
    if isinstance(batch, np.ndarray):
        return np.atleast_2d(batch.astype(np.float64, copy=False))
    if isinstance(batch, traffic.Batch):
        return traffic.stack_features(batch.samples)[0]
    return traffic.stack_features(batch)[0]


def _feature_histogram(X: np.ndarray, bins: int) -> np.ndarray:
    """(d, bins) occupancy counts of values in [0, 1], top edge inclusive."""
    n, d = X.shape
    idx = np.minimum((X * bins).astype(np.int64), bins - 1)
    flat = idx + np.arange(d)[None, :] * bins
    return np.bincount(flat.ravel(), minlength=d * bins).reshape(d, bins).astype(np.float64)


# ---------------------------------------------------------------------------
# shift measurements
# ---------------------------------------------------------------------------

def feature_diff(batch, seen: SeenStats) -> np.ndarray:
    """Mean feature vector of the batch minus the mean of all seen data.

    With no seen data yet (cold start) the seen mean is the zero vector;
    check `seen.is_cold` to detect that case.
    """
    X = _as_matrix(batch)
    if X.shape[0] == 0:
        raise ConfigError("batch is empty")
    return X.mean(axis=0) - seen.mean


def kl_divergence(batch, seen, bins: int = KL_BINS, smoothed: bool = True) -> float:
    """Mean per-feature KL(new || seen) over histograms on [0, 1], in nats.

    Add-one smoothing keeps every bin positive; disable it only for exact
    hand-checkable cases with fully occupied bins.
    """
    X = _as_matrix(batch)
    if isinstance(seen, SeenStats):
        seen_counts = seen.histogram(bins)
    else:
        seen_counts = _feature_histogram(_as_matrix(seen), bins)
    new_counts = _feature_histogram(X, bins)
    if smoothed:
        new_counts = new_counts + 1.0
        seen_counts = seen_counts + 1.0
    p = new_counts / new_counts.sum(axis=1, keepdims=True)
    q = seen_counts / seen_counts.sum(axis=1, keepdims=True)
    mask = p > 0
    terms = np.where(mask, p * np.log(np.maximum(p, 1e-300) / np.maximum(q, 1e-300)), 0.0)
    return float(terms.sum(axis=1).mean())


def wasserstein(batch, seen) -> float:
    """Mean per-feature Wasserstein-1 between empirical distributions.

    Computed exactly as the area between the two empirical CDFs via the
    merged quantile grid, which reduces to mean |sorted_a - sorted_b| for
    equal sample sizes.
    """
    a = _as_matrix(batch)
    if isinstance(seen, SeenStats):
        b_sorted = seen.sorted_features()
    else:
        b_sorted = np.sort(_as_matrix(seen), axis=0)
    a_sorted = np.sort(a, axis=0)
    n, m = a_sorted.shape[0], b_sorted.shape[0]
    if n == 0 or m == 0:
        raise ConfigError("both samples must be non-empty")
    if n == m:
        return float(np.abs(a_sorted - b_sorted).mean())
    # merged breakpoints of the two step quantile functions
    grid = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    widths = np.diff(np.concatenate([[0.0], grid]))
    mids = grid - widths / 2
    ia = np.minimum((mids * n).astype(np.int64), n - 1)
    ib = np.minimum((mids * m).astype(np.int64), m - 1)
    return float((widths[:, None] * np.abs(a_sorted[ia] - b_sorted[ib])).sum(axis=0).mean())


# ---------------------------------------------------------------------------
# sample selection
# ---------------------------------------------------------------------------

def select_online(n_batch: int, B: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of min(B, n) indices without replacement."""
    if B < 1:
        raise ConfigError("budget must be at least 1")
    if B >= n_batch:
        return np.arange(n_batch)
    return np.sort(rng.choice(n_batch, size=B, replace=False))


def select_active(model: nids.ClassifierModel, batch, budget: AdaptationBudget) -> np.ndarray:
    """Up to B indices inside the uncertainty band, most uncertain first.

    Ranking key is (|confidence - 0.5|, confidence, index), so equally
    distant candidates resolve toward the lower confidence and exact ties
    toward the lower index.  May legally return fewer than B indices —
    including none — when the model is confident everywhere.
    """
    X = _as_matrix(batch)
    conf = predict_confidence(model, X)
    candidates = np.nonzero((conf >= budget.p_low) & (conf <= budget.p_high))[0]
    if len(candidates) <= budget.B:
        return candidates
    order = sorted(candidates, key=lambda i: (abs(conf[i] - 0.5), conf[i], i))
    return np.array(order[: budget.B], dtype=np.int64)


def select_continual(model: nids.ClassifierModel, batch,
                     budget: AdaptationBudget) -> tuple[np.ndarray, np.ndarray]:
    """Split by prediction entropy: representative below tau_low, discriminative above tau_high.

    Both thresholds are strict, so samples at exactly a threshold fall in
    neither set.
    """
    X = _as_matrix(batch)
    H = nids.entropy_batch(nids.predict_proba_batch(model, X))
    rep = np.nonzero(H < budget.tau_low)[0]
    disc = np.nonzero(H > budget.tau_high)[0]
    return rep, disc


def select_pseudo(model: nids.ClassifierModel, batch,
                  budget: AdaptationBudget) -> list[tuple[int, int]]:
    """(index, predicted label) for samples with confidence strictly above threshold."""
    X = _as_matrix(batch)
    probs = nids.predict_proba_batch(model, X)
    conf = probs.max(axis=1)
    labels = probs.argmax(axis=1)
    return [(int(i), int(labels[i])) for i in np.nonzero(conf > budget.conf_threshold)[0]]


def predict_confidence(model: nids.ClassifierModel, X: np.ndarray) -> np.ndarray:
    return nids.predict_proba_batch(model, X).max(axis=1)


# ---------------------------------------------------------------------------
# adaptation dispatch
# ---------------------------------------------------------------------------

def apply_adaptation(model: nids.ClassifierModel, action_id: int, batch_X: np.ndarray,
                     budget: AdaptationBudget, label_oracle: Callable[[np.ndarray], np.ndarray],
                     seen: SeenStats, rng: np.random.Generator,
                     passes: int | None = None) -> AdaptationOutcome:
    """Run one adaptation action over the batch and update the model in place.

    Actions 0-2 query `label_oracle` for true labels of the selected
    indices; pseudo-labeling never does.  Continual learning additionally
    mixes in a replay draw from the reservoir (replay samples are not
    counted in `samples_used`, which covers batch samples only).  Seen
    statistics are deliberately NOT updated here — the environment ingests
    the batch once the whole blue turn is over, so every action in a turn
    measures shift against the same baseline.

    An empty selection returns the model unchanged (version included).
    """
    if action_id not in (ACTION_ONLINE, ACTION_ACTIVE, ACTION_CONTINUAL, ACTION_PSEUDO):
        raise ConfigError(f"unknown adaptation action {action_id}")
    batch_X = np.atleast_2d(batch_X)
    n = batch_X.shape[0]

    train_X: np.ndarray
    train_y: np.ndarray
    labels_queried = 0

    if action_id == ACTION_ONLINE:
        idx = select_online(n, budget.B, rng)
        train_y = np.asarray(label_oracle(idx))
        labels_queried = len(idx)
        train_X = batch_X[idx]
    elif action_id == ACTION_ACTIVE:
        idx = select_active(model, batch_X, budget)
        train_y = np.asarray(label_oracle(idx)) if len(idx) else np.empty(0, dtype=np.int64)
        labels_queried = len(idx)
        train_X = batch_X[idx]
    elif action_id == ACTION_CONTINUAL:
        rep, disc = select_continual(model, batch_X, budget)
        idx = np.concatenate([rep, disc])
        train_y = np.asarray(label_oracle(idx)) if len(idx) else np.empty(0, dtype=np.int64)
        labels_queried = len(idx)
        train_X = batch_X[idx]
        if len(idx):
            replay_X, replay_y = seen.sample_replay(min(len(idx), budget.B), rng)
            if len(replay_y):
                train_X = np.concatenate([train_X, replay_X])
                train_y = np.concatenate([train_y, replay_y])
    else:
        pairs = select_pseudo(model, batch_X, budget)
        idx = np.array([i for i, _ in pairs], dtype=np.int64)
        train_y = np.array([lab for _, lab in pairs], dtype=np.int64)
        train_X = batch_X[idx] if len(idx) else np.empty((0, batch_X.shape[1]))

    samples_used = len(idx)
    if len(train_y) == 0:
        return AdaptationOutcome(model=model, samples_used=0, labels_queried=0,
                                 selected_indices=[])
    nids.partial_fit(model, (train_X, train_y), passes=passes)
    return AdaptationOutcome(model=model, samples_used=samples_used,
                             labels_queried=labels_queried,
                             selected_indices=[int(i) for i in idx])
