"""Adam with a piecewise-constant learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step", "LRSchedule", "NonFiniteGradient"]


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **kw)


def adam_step(state: AdamState, params, grad, lr: float) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns new state and parameters.

    The inputs are not modified.
    """
    grad = np.asarray(grad, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    if grad.shape != params.shape or state.m.shape != params.shape:
        raise ValueError("parameter, gradient and moment shapes differ")
    if not lr > 0:
        raise ValueError("learning rate must be positive")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("non-finite gradient entries")
    b1, b2 = state.beta1, state.beta2
    t = state.t + 1
    m = b1 * state.m + (1 - b1) * grad
    v = b2 * state.v + (1 - b2) * grad * grad
    m_hat = m / (1 - b1**t)
    v_hat = v / (1 - b2**t)
    new = params - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return AdamState(m, v, t, b1, b2, state.eps), new


@dataclass(frozen=True)
class LRSchedule:
    """Piecewise-constant learning rate as ``((span, lr), ...)``."""

    phases: tuple[tuple[int, float], ...] = field(default=((10000, 1e-3),))

    def __post_init__(self):
        if not self.phases:
            raise ValueError("schedule needs at least one phase")
        for span, lr in self.phases:
            if span <= 0 or not lr > 0:
                raise ValueError(f"invalid schedule phase ({span}, {lr})")

    @property
    def total(self) -> int:
        return sum(span for span, _ in self.phases)

    def rates(self):
        for span, lr in self.phases:
            for _ in range(span):
                yield lr

    def scaled(self, factor: float) -> "LRSchedule":
        """Each span multiplied by ``factor`` (rounded, at least one step)."""
        return LRSchedule(tuple((max(1, round(span * factor)), lr) for span, lr in self.phases))
