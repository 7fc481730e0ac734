"""The defender classifier: an incrementally updatable binary scorer.

A one-hidden-layer network over the 1,525 normalized packet bytes with a
softmax output.  Full training uses Adam; incremental adaptation applies
plain full-batch gradient steps at a small learning rate so updates stay
cheap and order-dependent history accumulates instead of being wiped.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _mlp, traffic
from .errors import ConfigError

N_CLASSES = 2


@dataclass(frozen=True)
class NidsConfig:
    hidden: int = 64
    init_epochs: int = 20
    init_batch_size: int = 32
    init_lr: float = 1e-3
    incremental_lr: float = 0.01
    incremental_passes: int = 5


DEFAULT_CONFIG = NidsConfig()


@dataclass
class Metrics:
    acc: float
    balanced_acc: float
    fpr: float
    fnr: float
    fpr_defined: bool = True
    fnr_defined: bool = True


class ClassifierModel:
    """Network parameters plus a monotonically increasing update counter."""

    def __init__(self, net: _mlp.TwoLayerNet, rng_seed: int, config: NidsConfig):
        self.net = net
        self.version = 0
        self.rng_seed = rng_seed
        self.config = config

    def copy(self) -> "ClassifierModel":
        dup = ClassifierModel(self.net.copy(), self.rng_seed, self.config)
        dup.version = self.version
        return dup


def _as_xy(samples: Sequence) -> tuple[np.ndarray, np.ndarray]:
    """Accept FeatureVectors, (features, label) pairs, or an (X, y) tuple."""
    if isinstance(samples, tuple) and len(samples) == 2 and isinstance(samples[0], np.ndarray):
        X, y = samples
        return np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)
    xs, ys = [], []
    for item in samples:
        if isinstance(item, traffic.FeatureVector):
            xs.append(item.values)
            ys.append(item.label)
        else:
            fv, label = item
            xs.append(fv.values if isinstance(fv, traffic.FeatureVector) else np.asarray(fv))
            ys.append(label)
    return np.stack(xs), np.array(ys, dtype=np.int64)


def fit_initial(train: Sequence, seed: int, config: NidsConfig = DEFAULT_CONFIG) -> ClassifierModel:
    """Train a fresh classifier; deterministic for a fixed (train, seed)."""
    X, y = _as_xy(train)
    if X.shape[0] == 0:
        raise ConfigError("training set is empty")
    if len(np.unique(y)) < 2:
        raise ConfigError("training set must contain both classes")

    rng = np.random.default_rng(seed)
    net = _mlp.TwoLayerNet(X.shape[1], config.hidden, N_CLASSES, rng)
    opt = _mlp.Adam(lr=config.init_lr)
    n = X.shape[0]
    for _ in range(config.init_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.init_batch_size):
            idx = order[start: start + config.init_batch_size]
            logits, H = net.forward_cached(X[idx])
            _, dlogits = _mlp.softmax_cross_entropy(logits, y[idx])
            grads = net.backward(X[idx], H, dlogits)
            opt.step(net.params, grads)
    return ClassifierModel(net, seed, config)


def predict_proba_batch(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.net.n_in:
        raise ValueError(f"expected (n, {model.net.n_in}) inputs, got {X.shape}")
    return _mlp.softmax(model.net.forward(X))


def predict_proba(model: ClassifierModel, x) -> np.ndarray:
    """Probability pair (benign, malicious) for a single feature vector."""
    if isinstance(x, traffic.FeatureVector):
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.net.n_in,):
        raise ValueError(f"expected a length-{model.net.n_in} vector, got {x.shape}")
    return predict_proba_batch(model, x[None, :])[0]


def predict_labels(model: ClassifierModel, X: np.ndarray) -> np.ndarray:
    return np.argmax(predict_proba_batch(model, X), axis=1)


def partial_fit(model: ClassifierModel, samples: Sequence, passes: int | None = None) -> ClassifierModel:
    """Run `passes` full-batch gradient steps on `samples`, in place.

    Parameters are never reinitialized; the version counter increments once
    per effective call.  An empty sample set is a warned no-op that leaves
    the version untouched.
    """
    X, y = _as_xy(samples)
    if X.shape[0] == 0:
        warnings.warn("partial_fit called with no samples; model unchanged")
        return model
    passes = model.config.incremental_passes if passes is None else passes
    lr = model.config.incremental_lr
    for _ in range(passes):
        logits, H = model.net.forward_cached(X)
        _, dlogits = _mlp.softmax_cross_entropy(logits, y)
        grads = model.net.backward(X, H, dlogits)
        _mlp.sgd_step(model.net.params, grads, lr)
    model.version += 1
    return model


def evaluate_arrays(model: ClassifierModel, X: np.ndarray, y: np.ndarray) -> Metrics:
    pred = predict_labels(model, X)
    y = np.asarray(y)
    tp = int(np.sum((pred == 1) & (y == 1)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    acc = (tp + tn) / len(y)
    fpr_defined = (fp + tn) > 0
    fnr_defined = (fn + tp) > 0
    fpr = fp / (fp + tn) if fpr_defined else 0.0
    fnr = fn / (fn + tp) if fnr_defined else 0.0
    return Metrics(acc=acc, balanced_acc=1.0 - (fpr + fnr) / 2.0,
                   fpr=fpr, fnr=fnr, fpr_defined=fpr_defined, fnr_defined=fnr_defined)


def evaluate(model: ClassifierModel, test: Sequence) -> Metrics:
    X, y = _as_xy(test)
    if X.shape[0] == 0:
        raise ConfigError("evaluation set is empty")
    return evaluate_arrays(model, X, y)


def entropy(p: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in nats, with 0 * ln 0 treated as 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def entropy_batch(probs: np.ndarray) -> np.ndarray:
    p = np.maximum(np.asarray(probs, dtype=np.float64), 0.0)
    logs = np.where(p > 0, np.log(np.maximum(p, 1e-300)), 0.0)
    return -(p * logs).sum(axis=-1)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_model(model: ClassifierModel, path: str | Path) -> None:
    np.savez(
        path,
        kind=np.array(["nids"]),
        dims=np.array([model.net.n_in, model.net.n_hidden, model.net.n_out]),
        version=np.array([model.version]),
        rng_seed=np.array([model.rng_seed]),
        config=np.array([model.config.hidden, model.config.init_epochs,
                         model.config.init_batch_size, model.config.init_lr,
                         model.config.incremental_lr, model.config.incremental_passes]),
        flat=model.net.get_flat(),
    )


def load_model(path: str | Path) -> ClassifierModel:
    with np.load(path, allow_pickle=False) as ck:
        dims = ck["dims"]
        cfg_arr = ck["config"]
        config = NidsConfig(hidden=int(cfg_arr[0]), init_epochs=int(cfg_arr[1]),
                            init_batch_size=int(cfg_arr[2]), init_lr=float(cfg_arr[3]),
                            incremental_lr=float(cfg_arr[4]),
                            incremental_passes=int(cfg_arr[5]))
        net = _mlp.TwoLayerNet(int(dims[0]), int(dims[1]), int(dims[2]),
                               np.random.default_rng(0))
        net.set_flat(ck["flat"])
        model = ClassifierModel(net, int(ck["rng_seed"][0]), config)
        model.version = int(ck["version"][0])
    return model
