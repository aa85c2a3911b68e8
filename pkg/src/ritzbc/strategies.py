"""Training procedures: plain penalty, pre-training with optimal shift, exact boundary conditions."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import net
from .geom import QuadratureSet, build_quadrature, distance_fn, equispaced_boundary, integrate_interior, \
    mean_boundary, sample_stratified
from .loss import ExactBCLoss, PenaltyLoss, energy_estimate
from .optim import AdamState, LRSchedule, NonFiniteGradient, adam_step
from .problems import Problem, problem as get_problem

__all__ = [
    "StrategyConfig",
    "TrainedModel",
    "optimal_shift",
    "train",
    "naive_config",
    "pretrain_config",
    "exactbc_config",
    "STRATEGIES",
]

STRATEGIES = ("naive", "pretrain", "exactbc")
DEFAULT_N = {"disk": 160, "annulus": 160, "square": 500}

NAIVE_SCHEDULE = LRSchedule(((10000, 1e-3),))
PRE_SCHEDULE = LRSchedule(((1000, 1e-2), (3000, 1e-3)))
MAIN_SCHEDULE = LRSchedule(((6000, 1e-3),))


@dataclass(frozen=True)
class StrategyConfig:
    strategy: str
    problem: str
    lam: float | None = None          # λ for naive, λ_T for pretrain
    lam_p: float = 1.0
    distance: str | None = None
    lattice_n: int | None = None
    schedule: LRSchedule = NAIVE_SCHEDULE
    pre_schedule: LRSchedule | None = None
    seed: int = 0
    monitor_every: int = 0
    apply_shift: bool = True
    energy_interior: int = 10**6
    energy_boundary: int = 10**4
    energy_seed: int = 7919

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.problem not in DEFAULT_N:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.strategy == "exactbc":
            d = distance_fn(self.distance or "")
            if d.domain.kind != self.problem:
                raise ValueError(f"distance {self.distance!r} does not belong to the {self.problem}")
        elif not (self.lam is not None and self.lam > 0):
            raise ValueError("penalty strategies need lam > 0")
        if self.strategy == "pretrain":
            if self.pre_schedule is None:
                raise ValueError("pretrain needs a pre_schedule")
            if not self.lam_p > 0:
                raise ValueError("lam_p must be positive")
        if self.monitor_every < 0:
            raise ValueError("monitor_every must be >= 0")

    @property
    def N(self) -> int:
        return self.lattice_n or DEFAULT_N[self.problem]

    @property
    def total_iterations(self) -> int:
        pre = self.pre_schedule.total if self.strategy == "pretrain" else 0
        return pre + self.schedule.total


def naive_config(problem: str, lam: float, **kw) -> StrategyConfig:
    return StrategyConfig("naive", problem, lam=lam, schedule=kw.pop("schedule", NAIVE_SCHEDULE), **kw)


def pretrain_config(problem: str, lam_t: float, lam_p: float = 1.0, **kw) -> StrategyConfig:
    return StrategyConfig(
        "pretrain", problem, lam=lam_t, lam_p=lam_p,
        schedule=kw.pop("schedule", MAIN_SCHEDULE),
        pre_schedule=kw.pop("pre_schedule", PRE_SCHEDULE), **kw,
    )


def exactbc_config(problem: str, distance: str, **kw) -> StrategyConfig:
    return StrategyConfig("exactbc", problem, distance=distance, schedule=kw.pop("schedule", NAIVE_SCHEDULE), **kw)


@dataclass
class TrainedModel:
    params: np.ndarray
    config: StrategyConfig
    loss_trace: list[tuple[int, float]]
    monitor_trace: list[tuple[int, float, float]] | None
    wall_time: float
    failed: bool = False
    failed_at: int | None = None
    shift: float | None = None
    pre_params: np.ndarray | None = field(default=None, repr=False)

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1][1]

    def model(self):
        """``x -> (values, gradients)`` of the learned function (``d·u_θ`` for exact BCs)."""
        if self.config.strategy == "exactbc":
            prob = get_problem(self.config.problem)
            q = _quadrature(self.config.problem, 2)
            return ExactBCLoss(prob, q, distance_fn(self.config.distance)).model(self.params)

        params = self.params

        def evaluate(x):
            b = net.forward(params, x)
            return b.values, b.input_grads

        return evaluate


def optimal_shift(prob: Problem, q: QuadratureSet, model, lam: float) -> float:
    """Constant ``t`` minimizing the penalized energy over ``u + t``.

    ``model`` is a parameter vector or a callable returning ``(values, grads)``.
    """
    if not lam > 0:
        raise ValueError("penalization strength must be positive")
    if callable(model):
        u_bdr = model(q.boundary_points)[0]
    else:
        u_bdr = net.forward(model, q.boundary_points).values
    int_f = integrate_interior(q, prob.f(q.interior_points))
    return int_f / (2 * lam * prob.domain.perimeter) - mean_boundary(q, u_bdr)


_QUAD_CACHE: dict[tuple[str, int], QuadratureSet] = {}


def _quadrature(kind: str, N: int) -> QuadratureSet:
    key = (kind, N)
    if key not in _QUAD_CACHE:
        _QUAD_CACHE[key] = build_quadrature(kind, N)
    return _QUAD_CACHE[key]


class _Diverged(Exception):
    def __init__(self, iteration):
        self.iteration = iteration


class _Monitor:
    def __init__(self, config: StrategyConfig, prob: Problem):
        dom = prob.domain
        self.every = config.monitor_every
        self.prob = prob
        self.interior = sample_stratified(dom, config.energy_interior, config.energy_seed)
        lengths = dom.boundary_components
        counts = [round(config.energy_boundary * length / dom.perimeter) for length in lengths]
        self.boundary, _ = equispaced_boundary(dom, counts)
        self.d = distance_fn(config.distance) if config.strategy == "exactbc" else None
        self.trace: list[tuple[int, float, float]] = []

    def __call__(self, it, params, loss, lam):
        if it % self.every == 0:
            e = energy_estimate(self.prob, params, self.interior, self.boundary, lam, d=self.d)
            self.trace.append((it, loss, e))


def _run_phase(objective, params, schedule: LRSchedule, it: int, losses, monitor, lam):
    state = AdamState.zeros(len(params))
    for lr in schedule.rates():
        loss, grad = objective(params)
        losses.append((it, loss))
        if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
            raise _Diverged(it)
        if monitor is not None:
            monitor(it, params, loss, lam)
        try:
            state, params = adam_step(state, params, grad, lr)
        except NonFiniteGradient:
            raise _Diverged(it) from None
        it += 1
    return params, it


def train(config: StrategyConfig) -> TrainedModel:
    """Run one training according to ``config``.

    Adam state is reset at the start of each phase. Non-finite losses or
    gradients end the run early with ``failed=True``; traces up to that point
    are kept.
    """
    start = time.perf_counter()
    prob = get_problem(config.problem)
    q = _quadrature(config.problem, config.N)
    monitor = _Monitor(config, prob) if config.monitor_every > 0 else None
    params = net.init_glorot(seed=config.seed)
    losses: list[tuple[int, float]] = []
    shift = None
    pre_params = None
    it = 0

    if config.strategy == "exactbc":
        phases = [(ExactBCLoss(prob, q, distance_fn(config.distance)), config.schedule, 0.0)]
    elif config.strategy == "naive":
        phases = [(PenaltyLoss(prob, q, config.lam), config.schedule, config.lam)]
    else:
        phases = [
            (PenaltyLoss(prob, q, config.lam_p), config.pre_schedule, config.lam_p),
            (PenaltyLoss(prob, q, config.lam), config.schedule, config.lam),
        ]

    failed_at = None
    # overflow on the way to divergence is expected and reported via failed_at
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for k, (objective, schedule, lam) in enumerate(phases):
                if k == 1:
                    pre_params = params
                    shift = optimal_shift(prob, q, params, config.lam) if config.apply_shift else 0.0
                    params = net.shift_output_bias(params, shift)
                params, it = _run_phase(objective, params, schedule, it, losses, monitor, lam)
            objective, _, lam = phases[-1]
            loss = objective.value(params)
            losses.append((it, loss))
            if not math.isfinite(loss):
                raise _Diverged(it)
            if monitor is not None:
                monitor(it, params, loss, lam)
        except _Diverged as exc:
            failed_at = exc.iteration

    return TrainedModel(
        params=params,
        config=config,
        loss_trace=losses,
        monitor_trace=monitor.trace if monitor is not None else None,
        wall_time=time.perf_counter() - start,
        failed=failed_at is not None,
        failed_at=failed_at,
        shift=shift,
        pre_params=pre_params,
    )


def scaled(config: StrategyConfig, factor: float) -> StrategyConfig:
    """Same config with every schedule span multiplied by ``factor``."""
    pre = config.pre_schedule.scaled(factor) if config.pre_schedule is not None else None
    return replace(config, schedule=config.schedule.scaled(factor), pre_schedule=pre)
