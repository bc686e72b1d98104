"""White-box FGSM attack and accuracy under attack."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParameterError
from .data import Dataset, one_hot
from .nn import GradTape, backward, predict, small_cnn_forward, soft_cross_entropy

DEFAULT_EPS = 8 / 255


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float = DEFAULT_EPS

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")


def input_gradient(params, x, y, forward=small_cnn_forward):
    """Gradient of the soft cross-entropy with respect to the input batch."""
    tape = GradTape()
    xn = tape.input(x)
    loss = soft_cross_entropy(forward(params, xn, tape), y)
    backward(tape, loss)
    return xn.grad


def fgsm_attack(params, x, y, atk: AttackConfig, forward=small_cnn_forward):
    """``clip(x + eps * sign(grad_x CE(f(x), y)), 0, 1)``; the parameters are only read."""
    x = np.asarray(x)
    if atk.epsilon == 0:
        return x.copy()
    grad = input_gradient(getattr(params, "params", params), x, y, forward)
    return np.clip(x + atk.epsilon * np.sign(grad), 0.0, 1.0).astype(x.dtype, copy=False)


def evaluate_under_attack(params, ds: Dataset, atk: AttackConfig, batch_size: int = 500) -> float:
    """Accuracy on FGSM examples crafted against the same model."""
    if len(ds) == 0:
        raise ParameterError("cannot evaluate on an empty dataset")
    params = getattr(params, "params", params)
    correct = 0
    for i in range(0, len(ds), batch_size):
        xb = ds.images[i:i + batch_size]
        lb = ds.labels[i:i + batch_size]
        x_adv = fgsm_attack(params, xb, one_hot(lb, ds.classes, xb.dtype), atk)
        correct += int(np.sum(predict(params, x_adv) == lb))
    return correct / len(ds)
