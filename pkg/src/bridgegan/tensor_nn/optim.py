"""Adam, global-norm clipping and the warm-up / constant / decay schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autograd import ShapeMismatch


@dataclass
class OptimizerState:
    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float = 1e-4, **kw) -> "OptimizerState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0, lr, **kw)


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: OptimizerState,
              lr: float | None = None) -> tuple[list[np.ndarray], OptimizerState]:
    """One bias-corrected Adam update, in place on ``params``; returns both for chaining."""
    if not (len(params) == len(grads) == len(state.first_moment)):
        raise ShapeMismatch("params, grads and optimizer state differ in length")
    lr = state.lr if lr is None else lr
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if p.shape != g.shape or m.shape != p.shape:
            raise ShapeMismatch(f"parameter {p.shape} vs gradient {np.shape(g)}")
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return list(params), state


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads)))


def clip_grad_norm(grads: Sequence[np.ndarray], max_norm: float = 1.0) -> tuple[list[np.ndarray], float]:
    """Scale all gradients by ``max_norm / norm`` when the global L2 norm exceeds it."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        return [g * scale for g in grads], norm
    return [np.asarray(g) for g in grads], norm


@dataclass(frozen=True)
class LrSchedule:
    warmup_steps: int = 200
    constant_steps: int = 2000
    decay_rate: float = 0.9995

    def __post_init__(self):
        if self.warmup_steps < 0 or self.constant_steps < 0:
            raise ValueError("schedule step counts must be >= 0")
        if not 0 < self.decay_rate <= 1:
            raise ValueError("decay_rate must be in (0, 1]")


def lr_factor(schedule: LrSchedule, step: int) -> float:
    if step < 0:
        raise ValueError("step must be >= 0")
    if step < schedule.warmup_steps:
        return step / schedule.warmup_steps
    past = step - schedule.warmup_steps - schedule.constant_steps
    if past <= 0:
        return 1.0
    return schedule.decay_rate ** past


def lr_at(schedule: LrSchedule, step: int, base_lr: float = 1e-4) -> float:
    return lr_factor(schedule, step) * base_lr


@dataclass
class Optimizer:
    """Adam + clipping + schedule bound to a fixed list of parameter tensors."""
    params: list
    base_lr: float = 1e-4
    schedule: LrSchedule = field(default_factory=LrSchedule)
    max_norm: float = 1.0
    state: OptimizerState = field(init=False)

    def __post_init__(self):
        self.state = OptimizerState.for_params([p.data for p in self.params], self.base_lr)

    def current_lr(self) -> float:
        # the first update (step_count 0) would get factor 0 under warm-up, so
        # the schedule is evaluated one step ahead
        return lr_at(self.schedule, self.state.step_count + 1, self.base_lr)

    def step(self, grads: Sequence[np.ndarray]) -> float:
        clipped, norm = clip_grad_norm(grads, self.max_norm)
        adam_step([p.data for p in self.params], clipped, self.state, self.current_lr())
        return norm
