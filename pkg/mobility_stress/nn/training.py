"""Mini-batch training with Adam and early stopping on validation loss."""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from mobility_stress.exceptions import BatchTooSmall
from mobility_stress.nn.network import Mode, Network, backward, cross_entropy, forward
from mobility_stress.nn.optim import AdamState, adam_step

logger = logging.getLogger(__name__)

ArraySet = Tuple[np.ndarray, np.ndarray]


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=32, ge=2)
    max_epochs: int = Field(default=500, ge=1)
    patience: int = Field(default=20, ge=0)
    """Epochs without an improvement of at least `min_delta` before stopping."""
    min_delta: float = Field(default=1e-4, ge=0)
    seed: int = 0


class TrainHistory(BaseModel):
    """Per-epoch losses; epochs are numbered from 1."""

    train_loss: List[float] = Field(default_factory=list)
    val_loss: List[float] = Field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch - 1] if self.best_epoch else math.inf


def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Shuffled index batches; a trailing single row joins the previous batch."""
    if n < 2:
        raise BatchTooSmall(f"training needs at least 2 records, got {n}")
    order = rng.permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        batches[-2] = np.concatenate([batches[-2], batches[-1]])
        batches.pop()
    return batches


def evaluate_loss(net: Network, data: ArraySet) -> float:
    probs, _ = forward(net, data[0], Mode.INFER)
    return cross_entropy(probs, data[1])


def train(
    net: Network,
    fit_set: ArraySet,
    val_set: ArraySet,
    cfg: Optional[TrainConfig] = None,
) -> Tuple[Network, TrainHistory]:
    """Fit `net` in place and restore the epoch with the lowest validation loss.

    The patience counter resets only on an improvement of at least
    `min_delta`; the restored checkpoint is the overall minimum.
    """
    cfg = cfg or TrainConfig()
    x_fit, y_fit = (np.asarray(a) for a in fit_set)
    x_val, y_val = (np.asarray(a) for a in val_set)
    if len(x_fit) == 0 or len(x_val) == 0:
        raise ValueError("fit and validation sets must be non-empty")

    rng = np.random.default_rng(cfg.seed)
    adam = AdamState(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    history = TrainHistory()
    best_loss = math.inf
    reference = math.inf
    best_state = net.state_dict()
    wait = 0

    for epoch in range(1, cfg.max_epochs + 1):
        net.mode = Mode.TRAIN
        total = 0.0
        for idx in minibatches(len(x_fit), cfg.batch_size, rng):
            probs, cache = forward(net, x_fit[idx], Mode.TRAIN, rng=rng)
            assert cache is not None
            total += cross_entropy(probs, y_fit[idx]) * len(idx)
            grads = backward(net, cache, y_fit[idx])
            adam_step(adam, net.parameters(), grads)
            net.bump_version()
        net.mode = Mode.INFER

        train_loss = total / len(x_fit)
        val_loss = evaluate_loss(net, (x_val, y_val))
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.stopped_epoch = epoch
        logger.debug("epoch %d: train %.6f val %.6f", epoch, train_loss, val_loss)

        if val_loss < best_loss:
            best_loss = val_loss
            history.best_epoch = epoch
            best_state = net.state_dict()
        if val_loss < reference - cfg.min_delta:
            reference = val_loss
            wait = 0
        else:
            wait += 1
            if wait > cfg.patience:
                break

    net.load_state_dict(best_state)
    logger.info(
        "stopped at epoch %d, restored epoch %d (val loss %.4f)",
        history.stopped_epoch,
        history.best_epoch,
        history.best_val_loss,
    )
    return net, history
