"""Fully connected tanh/softmax network with batch normalization and dropout.

Each layer runs affine -> batch norm -> activation -> dropout. Everything is
float64 numpy; gradients are derived by hand, batch-norm Jacobian included.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mobility_stress.exceptions import BatchTooSmall, StaleCache

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


class Mode(str, Enum):
    TRAIN = "train"
    INFER = "infer"


class Activation(str, Enum):
    TANH = "tanh"
    SOFTMAX = "softmax"


class LayerSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    out_dim: int = Field(gt=0)
    activation: Activation = Activation.TANH
    dropout_rate: float = Field(default=0.0, ge=0.0, lt=1.0)
    batch_norm: bool = True


def default_architecture(
    hidden_sizes: Sequence[int] = (57, 35, 35),
    dropout_rates: Sequence[float] = (0.35, 0.25, 0.15),
    n_classes: int = 3,
) -> List[LayerSpec]:
    """Tanh hidden layers with dropout, then a batch-normalised softmax layer."""
    if len(hidden_sizes) != len(dropout_rates):
        raise ValueError(
            f"got {len(hidden_sizes)} hidden sizes "
            f"but {len(dropout_rates)} dropout rates"
        )
    layers = [
        LayerSpec(out_dim=size, activation=Activation.TANH, dropout_rate=rate)
        for size, rate in zip(hidden_sizes, dropout_rates)
    ]
    layers.append(LayerSpec(out_dim=n_classes, activation=Activation.SOFTMAX))
    return layers


class DenseLayer:
    """Parameters and batch-norm running statistics of one layer."""

    def __init__(self, in_dim: int, spec: LayerSpec, rng: np.random.Generator) -> None:
        self.spec = spec
        self.in_dim = in_dim
        limit = np.sqrt(6.0 / (in_dim + spec.out_dim))
        self.W = rng.uniform(-limit, limit, size=(spec.out_dim, in_dim))
        self.b = np.zeros(spec.out_dim)
        self.gamma = np.ones(spec.out_dim)
        self.beta = np.zeros(spec.out_dim)
        self.running_mean = np.zeros(spec.out_dim)
        self.running_var = np.ones(spec.out_dim)

    def parameters(self) -> Dict[str, np.ndarray]:
        params = {"W": self.W, "b": self.b}
        if self.spec.batch_norm:
            params["gamma"] = self.gamma
            params["beta"] = self.beta
        return params

    def buffers(self) -> Dict[str, np.ndarray]:
        if not self.spec.batch_norm:
            return {}
        return {"running_mean": self.running_mean, "running_var": self.running_var}


class Network:
    """A stack of `DenseLayer`s ending in softmax.

    `version` increases whenever parameters change, which lets `backward`
    reject caches computed before an update.
    """

    def __init__(
        self,
        in_dim: int,
        layers: Sequence[LayerSpec],
        *,
        seed: int = 0,
        bn_momentum: float = 0.9,
        bn_eps: float = 1e-5,
    ) -> None:
        if in_dim < 1:
            raise ValueError(f"in_dim must be positive, got: {in_dim}")
        if not layers:
            raise ValueError("a network needs at least one layer")
        if layers[-1].activation is not Activation.SOFTMAX:
            raise ValueError("the last layer must use softmax activation")
        if any(spec.activation is Activation.SOFTMAX for spec in layers[:-1]):
            raise ValueError("only the last layer may use softmax activation")
        if layers[-1].dropout_rate:
            raise ValueError("the output layer cannot use dropout")
        if not 0.0 <= bn_momentum < 1.0:
            raise ValueError(f"bn_momentum must be in [0, 1), got: {bn_momentum}")
        if bn_eps <= 0:
            raise ValueError(f"bn_eps must be positive, got: {bn_eps}")

        rng = np.random.default_rng(seed)
        self.in_dim = in_dim
        self.bn_momentum = bn_momentum
        self.bn_eps = bn_eps
        self.mode = Mode.INFER
        self.version = 0
        self.layers: List[DenseLayer] = []
        width = in_dim
        for spec in layers:
            self.layers.append(DenseLayer(width, spec, rng))
            width = spec.out_dim

    @property
    def specs(self) -> List[LayerSpec]:
        return [layer.spec for layer in self.layers]

    @property
    def n_classes(self) -> int:
        return self.layers[-1].spec.out_dim

    def parameters(self) -> Dict[str, np.ndarray]:
        """Live parameter arrays keyed `"<layer>.<name>"`."""
        return {
            f"{i}.{name}": array
            for i, layer in enumerate(self.layers)
            for name, array in layer.parameters().items()
        }

    def buffers(self) -> Dict[str, np.ndarray]:
        return {
            f"{i}.{name}": array
            for i, layer in enumerate(self.layers)
            for name, array in layer.buffers().items()
        }

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter and running statistic."""
        arrays = {**self.parameters(), **self.buffers()}
        return {name: array.copy() for name, array in arrays.items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        current = {**self.parameters(), **self.buffers()}
        if set(state) != set(current):
            raise ValueError("state keys do not match the network architecture")
        for name, array in current.items():
            if state[name].shape != array.shape:
                raise ValueError(
                    f"shape mismatch for {name}: {state[name].shape} vs {array.shape}"
                )
            array[...] = state[name]
        self.bump_version()

    def bump_version(self) -> None:
        self.version += 1


@dataclass
class LayerCache:
    h_in: np.ndarray
    xhat: Optional[np.ndarray]
    inv_std: Optional[np.ndarray]
    activated: np.ndarray
    mask: Optional[np.ndarray]


@dataclass
class ForwardCache:
    """Train-mode intermediates needed by `backward`."""

    n: int
    version: int
    probs: np.ndarray
    layers: List[LayerCache] = field(default_factory=list)

    @property
    def masks(self) -> List[Optional[np.ndarray]]:
        return [layer.mask for layer in self.layers]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    return exps / exps.sum(axis=1, keepdims=True)


def forward(
    net: Network,
    batch: np.ndarray,
    mode: Optional[Mode] = None,
    *,
    rng: Optional[np.random.Generator] = None,
    masks: Optional[Sequence[Optional[np.ndarray]]] = None,
    update_running: bool = True,
) -> Tuple[np.ndarray, Optional[ForwardCache]]:
    """Class probabilities for `batch`, plus the cache in Train mode.

    In Train mode batch statistics normalise each layer and dropout masks are
    sampled from `rng` (scaled by 1/(1-rate)) unless `masks` replays earlier
    ones. Infer mode uses running statistics and no dropout.

    Raises:
        BatchTooSmall: in Train mode with fewer than two rows.
    """
    mode = Mode(mode or net.mode)
    h = np.asarray(batch, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != net.in_dim:
        raise ValueError(f"expected a batch of shape (n, {net.in_dim}), got {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("batch contains non-finite values")
    n = h.shape[0]
    training = mode is Mode.TRAIN
    if training and n < 2:
        raise BatchTooSmall(
            f"Train mode needs at least 2 rows for batch statistics, got {n}"
        )
    if training and masks is None and rng is None:
        rng = np.random.default_rng()

    cache: Optional[ForwardCache] = None
    if training:
        cache = ForwardCache(n=n, version=net.version, probs=np.empty(0))
    for i, layer in enumerate(net.layers):
        spec = layer.spec
        z = h @ layer.W.T + layer.b
        xhat = inv_std = None
        if spec.batch_norm:
            if training:
                mean = z.mean(axis=0)
                var = z.var(axis=0)
                if update_running:
                    m = net.bn_momentum
                    layer.running_mean[...] = m * layer.running_mean + (1.0 - m) * mean
                    layer.running_var[...] = m * layer.running_var + (1.0 - m) * var
            else:
                mean, var = layer.running_mean, layer.running_var
            inv_std = 1.0 / np.sqrt(var + net.bn_eps)
            xhat = (z - mean) * inv_std
            y = layer.gamma * xhat + layer.beta
        else:
            y = z

        activated = softmax(y) if spec.activation is Activation.SOFTMAX else np.tanh(y)
        mask = None
        if training and spec.dropout_rate > 0:
            if masks is not None:
                mask = masks[i]
            else:
                assert rng is not None
                keep = rng.random(activated.shape) >= spec.dropout_rate
                mask = keep / (1.0 - spec.dropout_rate)
        out = activated * mask if mask is not None else activated

        if cache is not None:
            cache.layers.append(
                LayerCache(
                    h_in=h, xhat=xhat, inv_std=inv_std, activated=activated, mask=mask
                )
            )
        h = out

    if cache is not None:
        cache.probs = h
    return h, cache


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true class, floored at 1e-12."""
    labels = np.asarray(labels, dtype=np.int64)
    picked = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(picked, PROB_FLOOR))))


def backward(
    net: Network, cache: ForwardCache, labels: np.ndarray, *, loss_scale: float = 1.0
) -> Dict[str, np.ndarray]:
    """Gradients of `loss_scale * cross_entropy` w.r.t. every parameter.

    Raises:
        StaleCache: if the network changed since `forward` or the labels do
            not belong to the cached batch.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if cache.version != net.version:
        raise StaleCache(
            f"cache was built at network version {cache.version}, "
            f"network is at {net.version}"
        )
    if labels.shape != (cache.n,):
        got = labels.shape[0] if labels.ndim else 0
        raise StaleCache(f"got {got} labels for a batch of {cache.n}")

    n = cache.n
    onehot = np.zeros_like(cache.probs)
    onehot[np.arange(n), labels] = 1.0
    # softmax + cross-entropy collapse to (p - y) / n at the softmax input
    d_out = loss_scale * (cache.probs - onehot) / n

    grads: Dict[str, np.ndarray] = {}
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        lc = cache.layers[i]
        if layer.spec.activation is Activation.SOFTMAX:
            d_y = d_out
        else:
            d_act = d_out * lc.mask if lc.mask is not None else d_out
            d_y = d_act * (1.0 - lc.activated**2)

        if layer.spec.batch_norm:
            assert lc.xhat is not None and lc.inv_std is not None
            grads[f"{i}.gamma"] = np.sum(d_y * lc.xhat, axis=0)
            grads[f"{i}.beta"] = np.sum(d_y, axis=0)
            d_xhat = d_y * layer.gamma
            d_z = (lc.inv_std / n) * (
                n * d_xhat
                - d_xhat.sum(axis=0)
                - lc.xhat * np.sum(d_xhat * lc.xhat, axis=0)
            )
        else:
            d_z = d_y

        grads[f"{i}.W"] = d_z.T @ lc.h_in
        grads[f"{i}.b"] = d_z.sum(axis=0)
        d_out = d_z @ layer.W
    return grads


def predict_proba(net: Network, features: np.ndarray) -> np.ndarray:
    probs, _ = forward(net, features, Mode.INFER)
    return probs


def predict(net: Network, features: np.ndarray) -> np.ndarray:
    """Most probable class per row, in Infer mode."""
    return np.argmax(predict_proba(net, features), axis=1)
