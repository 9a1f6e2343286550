"""Central-difference verification of `backward`."""

from __future__ import annotations

import logging
from typing import Dict

import numpy as np

from mobility_stress.nn.network import Mode, Network, backward, cross_entropy, forward

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-8


def gradient_errors(
    net: Network,
    batch: np.ndarray,
    labels: np.ndarray,
    h: float = 1e-5,
    *,
    seed: int = 0,
) -> Dict[str, float]:
    """Relative error of each parameter array's analytic gradient.

    Dropout masks are sampled once and replayed for every perturbed forward
    pass; running statistics are left untouched. The error of an array is
    the largest element-wise |analytic - numeric| / max(|analytic|, |numeric|,
    1e-8).

    A bias feeding a batch-normalised layer has an identically zero gradient
    in Train mode (the batch mean absorbs it). Its entry is the absolute
    value of the analytic gradient, which must be ~0, instead of a ratio of
    two rounding residues.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got: {h}")
    rng = np.random.default_rng(seed)
    _, cache = forward(net, batch, Mode.TRAIN, rng=rng, update_running=False)
    assert cache is not None
    analytic = backward(net, cache, labels)
    masks = cache.masks

    def loss() -> float:
        probs, _ = forward(net, batch, Mode.TRAIN, masks=masks, update_running=False)
        return cross_entropy(probs, labels)

    errors: Dict[str, float] = {}
    for name, theta in net.parameters().items():
        layer = net.layers[int(name.split(".")[0])]
        if name.endswith(".b") and layer.spec.batch_norm:
            errors[name] = float(np.abs(analytic[name]).max())
            continue
        numeric = np.zeros_like(theta)
        for idx in np.ndindex(theta.shape):
            original = theta[idx]
            theta[idx] = original + h
            plus = loss()
            theta[idx] = original - h
            minus = loss()
            theta[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * h)
        a = analytic[name]
        scale = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), NORM_FLOOR)
        errors[name] = float((np.abs(a - numeric) / scale).max())
    return errors


def grad_check(
    net: Network,
    batch: np.ndarray,
    labels: np.ndarray,
    h: float = 1e-5,
    *,
    seed: int = 0,
) -> float:
    """Largest relative gradient error over all parameter arrays."""
    errors = gradient_errors(net, batch, labels, h, seed=seed)
    worst = max(errors, key=errors.__getitem__)
    logger.info("max relative gradient error %.3e (%s)", errors[worst], worst)
    return errors[worst]
