"""One-hidden-layer dense networks with hand-written gradients.

Everything runs in float64 so analytic gradients can be verified against
central finite differences at tight tolerance.
"""

from __future__ import annotations

import numpy as np

PARAM_KEYS = ("W1", "b1", "W2", "b2")


class TwoLayerNet:
    """x -> tanh(x W1 + b1) W2 + b2."""

    def __init__(self, n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator):
        self.n_in, self.n_hidden, self.n_out = n_in, n_hidden, n_out
        lim1 = np.sqrt(6.0 / (n_in + n_hidden))
        lim2 = np.sqrt(6.0 / (n_hidden + n_out))
        self.params = {
            "W1": rng.uniform(-lim1, lim1, size=(n_in, n_hidden)),
            "b1": np.zeros(n_hidden),
            "W2": rng.uniform(-lim2, lim2, size=(n_hidden, n_out)),
            "b2": np.zeros(n_out),
        }

    def forward(self, X: np.ndarray) -> np.ndarray:
        return self.forward_cached(X)[0]

    def forward_cached(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        H = np.tanh(X @ self.params["W1"] + self.params["b1"])
        return H @ self.params["W2"] + self.params["b2"], H

    def backward(self, X: np.ndarray, H: np.ndarray, dout: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given d(loss)/d(output)."""
        dH = (dout @ self.params["W2"].T) * (1.0 - H * H)
        return {
            "W2": H.T @ dout,
            "b2": dout.sum(axis=0),
            "W1": X.T @ dH,
            "b1": dH.sum(axis=0),
        }

    def copy(self) -> "TwoLayerNet":
        dup = object.__new__(TwoLayerNet)
        dup.n_in, dup.n_hidden, dup.n_out = self.n_in, self.n_hidden, self.n_out
        dup.params = {k: v.copy() for k, v in self.params.items()}
        return dup

    # flat views are used by finite-difference checks and checkpoints
    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in PARAM_KEYS])

    def set_flat(self, flat: np.ndarray) -> None:
        pos = 0
        for k in PARAM_KEYS:
            n = self.params[k].size
            self.params[k] = flat[pos: pos + n].reshape(self.params[k].shape).copy()
            pos += n
        if pos != flat.size:
            raise ValueError("flat parameter vector has the wrong length")


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float) -> None:
    for k, g in grads.items():
        params[k] -= lr * g


class Adam:
    """Standard Adam with bias correction; state is keyed like the params."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / (1 - self.beta1 ** self.t)
            v_hat = self.v[k] / (1 - self.beta2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to the logits."""
    n = logits.shape[0]
    p = softmax(logits)
    loss = float(-np.log(np.maximum(p[np.arange(n), y], 1e-300)).mean())
    dlogits = p.copy()
    dlogits[np.arange(n), y] -= 1.0
    return loss, dlogits / n
