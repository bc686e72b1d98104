"""SGD with classical momentum, coupled weight decay and a step learning-rate schedule."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LRSchedule:
    base_lr: float = 0.1
    milestones: tuple[int, ...] = (100, 150)
    factor: float = 10.0


def lr_at_epoch(schedule: LRSchedule, epoch: int) -> float:
    """Base rate divided by ``factor`` once for every milestone already reached."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    lr = schedule.base_lr
    for m in sorted(schedule.milestones):
        if epoch >= m:
            lr /= schedule.factor
    return lr


@dataclass
class OptimizerState:
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    velocity: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")


def sgd_step(params, grads, state: OptimizerState):
    """One update: v = mu*v + g + wd*theta; theta = theta - lr*v.

    Returns new ``(params, state)``; the arguments are not modified.
    """
    new_params, new_vel = {}, {}
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, parameter {theta.shape}")
        d = g + state.weight_decay * theta if state.weight_decay else g
        v = state.velocity.get(name)
        v = d if v is None else state.momentum * v + d
        new_vel[name] = v.astype(theta.dtype, copy=False)
        new_params[name] = (theta - state.lr * new_vel[name]).astype(theta.dtype, copy=False)
    new_state = OptimizerState(
        lr=state.lr,
        momentum=state.momentum,
        weight_decay=state.weight_decay,
        velocity=new_vel,
        step=state.step + 1,
    )
    return new_params, new_state
