"""Discretized Ritz objectives.

Both losses use arithmetic means over the quadrature points rather than
measure-weighted sums, so the boundary weight is effectively λ|Ω|/|∂Ω| in the
continuous sense. This is the objective the reference experiments train.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import net
from .geom import DistanceFunction, QuadratureSet, integrate_interior, mean_boundary
from .problems import Problem

__all__ = [
    "ritz_loss",
    "PenaltyLoss",
    "ExactBCLoss",
    "energy_estimate",
    "measure_weighted_energy",
]


def ritz_loss(values_int, grads_int, f_int, values_bdr=None, lam=0.0) -> float:
    """Mean-based Ritz loss from already evaluated function data."""
    interior = np.mean(0.5 * np.einsum("ij,ij->i", grads_int, grads_int) - f_int * values_int)
    if values_bdr is None or len(values_bdr) == 0:
        return float(interior)
    return float(interior + lam * np.mean(np.asarray(values_bdr) ** 2))


@dataclass(eq=False)
class PenaltyLoss:
    problem: Problem
    quadrature: QuadratureSet
    lam: float
    arch: net.Architecture | None = None
    _f: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("penalization strength must be positive")
        if self.quadrature.domain != self.problem.domain:
            raise ValueError("quadrature does not belong to the problem's domain")
        self._f = self.problem.f(self.quadrature.interior_points)

    def value(self, params) -> float:
        q = self.quadrature
        inner = net.forward(params, q.interior_points, self.arch)
        outer = net.forward(params, q.boundary_points, self.arch)
        return ritz_loss(inner.values, inner.input_grads, self._f, outer.values, self.lam)

    def __call__(self, params) -> tuple[float, np.ndarray]:
        q = self.quadrature
        inner, pull_inner = net.vjp(params, q.interior_points, self.arch)
        outer, pull_outer = net.vjp(params, q.boundary_points, self.arch)
        loss = ritz_loss(inner.values, inner.input_grads, self._f, outer.values, self.lam)
        grad = pull_inner(-self._f / q.n_int, inner.input_grads / q.n_int)
        grad += pull_outer(2.0 * self.lam * outer.values / q.n_bdr, np.zeros_like(q.boundary_points))
        return loss, grad


def _product(d: DistanceFunction, x, values, grads):
    dv = d.eval(x)
    dg = d.grad(x)
    return dv, dg, dv * values, values[:, None] * dg + dv[:, None] * grads


@dataclass(eq=False)
class ExactBCLoss:
    """Ritz energy of the ansatz ``d · u_θ``; no boundary term."""

    problem: Problem
    quadrature: QuadratureSet
    d: DistanceFunction
    arch: net.Architecture | None = None
    _f: np.ndarray = field(init=False, repr=False)
    _d: np.ndarray = field(init=False, repr=False)
    _dgrad: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d.domain != self.problem.domain or self.quadrature.domain != self.problem.domain:
            raise ValueError("distance function / quadrature do not match the problem's domain")
        x = self.quadrature.interior_points
        self._f = self.problem.f(x)
        self._d = self.d.eval(x)
        self._dgrad = self.d.grad(x)

    def model(self, params):
        """``x -> (d·u, ∇(d·u))`` as a callable."""

        def evaluate(x):
            b = net.forward(params, x, self.arch)
            _, _, w, gw = _product(self.d, b.points, b.values, b.input_grads)
            return w, gw

        return evaluate

    def value(self, params) -> float:
        return self(params, with_grad=False)[0]

    def __call__(self, params, with_grad=True):
        q = self.quadrature
        b, pullback = net.vjp(params, q.interior_points, self.arch)
        w = self._d * b.values
        g = b.values[:, None] * self._dgrad + self._d[:, None] * b.input_grads
        loss = ritz_loss(w, g, self._f)
        if not with_grad:
            return loss, None
        n = q.n_int
        a = (np.einsum("ij,ij->i", g, self._dgrad) - self._f * self._d) / n
        bw = g * self._d[:, None] / n
        return loss, pullback(a, bw)


def energy_estimate(problem: Problem, params, interior_samples, boundary_samples, lam, d=None, arch=None,
                    chunk=200_000) -> float:
    """Same mean-based functional as the training loss, on independent samples."""
    x = np.asarray(interior_samples, dtype=np.float64)
    z = np.asarray(boundary_samples, dtype=np.float64)
    if len(x) == 0 or (d is None and len(z) == 0):
        raise ValueError("sample sets must be nonempty")
    total = 0.0
    for s in range(0, len(x), chunk):
        xs = x[s:s + chunk]
        b = net.forward(params, xs, arch)
        v, g = b.values, b.input_grads
        if d is not None:
            _, _, v, g = _product(d, xs, v, g)
        total += np.sum(0.5 * np.einsum("ij,ij->i", g, g) - problem.f(xs) * v)
    energy = total / len(x)
    if d is None:
        zb = net.forward(params, z, arch).values
        energy += lam * np.mean(zb**2)
    return float(energy)


def measure_weighted_energy(problem: Problem, q: QuadratureSet, model, lam: float) -> float:
    """Quadrature estimate of the continuous penalized energy.

    ``½∫|∇u|² - ∫fu + λ∫_{∂Ω}u²`` with the 1/N² lattice rule inside and equal
    weights |∂Ω|/N_bdr on the boundary; ``model`` maps points to
    ``(values, gradients)``.
    """
    v, g = model(q.interior_points)
    interior = integrate_interior(q, 0.5 * np.einsum("ij,ij->i", g, g) - problem.f(q.interior_points) * v)
    zb, _ = model(q.boundary_points)
    boundary = q.domain.perimeter * mean_boundary(q, zb**2)
    return float(interior + lam * boundary)
