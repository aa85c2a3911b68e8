"""The three Poisson benchmarks with closed-form Dirichlet and Robin solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geom import Domain, domain

__all__ = [
    "ReferenceSolution",
    "Problem",
    "problem",
    "PROBLEM_KINDS",
    "robin_solution",
    "robin_constants",
    "pde_residual",
]

PROBLEM_KINDS = ("disk", "annulus", "square")
LOG_COEF = 3.0 / (4.0 * math.log(2.0))


@dataclass(frozen=True)
class ReferenceSolution:
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.value(x), self.gradient(x)


@dataclass(frozen=True)
class Problem:
    kind: str
    domain: Domain
    rhs: Callable[[np.ndarray], np.ndarray]
    dirichlet_ref: ReferenceSolution
    has_robin: bool

    def robin_ref(self, lam: float) -> ReferenceSolution:
        return robin_solution(self.kind, lam)

    def f(self, x) -> np.ndarray:
        return self.rhs(np.atleast_2d(np.asarray(x, dtype=np.float64)))


def _r2(x):
    return x[:, 0] ** 2 + x[:, 1] ** 2


def _ones(x):
    return np.ones(len(x))


def _square_rhs(x):
    return 8 * np.pi**2 * np.sin(2 * np.pi * x[:, 0]) * np.sin(2 * np.pi * x[:, 1])


def _disk_u(x):
    return -0.25 * _r2(x) + 0.25


def _disk_grad(x):
    return -0.5 * x


def _annulus_u(x):
    r2 = _r2(x)
    return -0.25 * r2 + LOG_COEF * 0.5 * np.log(r2) + 0.25


def _annulus_grad(x):
    return -0.5 * x + LOG_COEF * x / _r2(x)[:, None]


def _square_u(x):
    return np.sin(2 * np.pi * x[:, 0]) * np.sin(2 * np.pi * x[:, 1])


def _square_grad(x):
    sx, sy = np.sin(2 * np.pi * x[:, 0]), np.sin(2 * np.pi * x[:, 1])
    cx, cy = np.cos(2 * np.pi * x[:, 0]), np.cos(2 * np.pi * x[:, 1])
    return 2 * np.pi * np.column_stack([cx * sy, sx * cy])


def problem(kind: str) -> Problem:
    if kind == "disk":
        ref = ReferenceSolution(_disk_u, _disk_grad, "u^D")
        return Problem(kind, domain(kind), _ones, ref, True)
    if kind == "annulus":
        ref = ReferenceSolution(_annulus_u, _annulus_grad, "u^A")
        return Problem(kind, domain(kind), _ones, ref, True)
    if kind == "square":
        ref = ReferenceSolution(_square_u, _square_grad, "u^S")
        return Problem(kind, domain(kind), _square_rhs, ref, False)
    raise ValueError(f"unknown problem {kind!r}; expected one of {PROBLEM_KINDS}")


def robin_constants(lam: float) -> tuple[float, float]:
    """Coefficients ``(C1, C2)`` of the annulus Robin solution."""
    c1 = (1 + 2 * lam * (0.75 + 1 / (4 * lam))) / (0.5 + 2 * lam * (math.log(2) + 1 / (2 * lam)))
    c2 = c1 / (2 * lam) + 0.25 - 1 / (4 * lam)
    return c1, c2


def robin_solution(kind: str, lam: float) -> ReferenceSolution:
    """Solution of -Δu = 1 with ∂_n u + 2λu = 0 on the disk or annulus."""
    if not lam > 0:
        raise ValueError(f"penalization strength must be positive, got {lam}")
    if kind == "disk":
        shift = 1.0 / (4.0 * lam)
        return ReferenceSolution(
            lambda x: -0.25 * _r2(x) + 0.25 + shift, _disk_grad, f"u_D^{lam:g}"
        )
    if kind == "annulus":
        c1, c2 = robin_constants(lam)
        return ReferenceSolution(
            lambda x: -0.25 * _r2(x) + c1 * 0.5 * np.log(_r2(x)) + c2,
            lambda x: -0.5 * x + c1 * x / _r2(x)[:, None],
            f"u_A^{lam:g}",
        )
    raise ValueError(f"no closed-form Robin solution for {kind!r}")


def pde_residual(ref: ReferenceSolution, f, x, h: float, dom: Domain | None = None) -> np.ndarray:
    """``-Δ_h u(x) - f(x)`` with the 5-point stencil of step ``h``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if dom is not None and np.any(dom.distance_to_boundary(x) <= 2 * h):
        raise ValueError("finite-difference stencil leaves the domain")
    u = ref.value
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    lap = (u(x + ex) + u(x - ex) + u(x + ey) + u(x - ey) - 4.0 * u(x)) / h**2
    return -lap - f(x)
