"""Model domains, lattice quadrature, uniform sampling and smooth distance functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Domain",
    "DISK",
    "ANNULUS",
    "SQUARE",
    "domain",
    "QuadratureSet",
    "build_quadrature",
    "integrate_interior",
    "mean_boundary",
    "sample_uniform",
    "sample_stratified",
    "sample_boundary",
    "equispaced_boundary",
    "DistanceFunction",
    "distance_fn",
    "DISTANCE_IDS",
]

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    kind: str
    area: float
    perimeter: float
    bbox: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax

    def contains(self, x) -> np.ndarray:
        """Strict interior membership."""
        x = np.atleast_2d(x)
        if self.kind == "square":
            return np.all((x > 0.0) & (x < 1.0), axis=1)
        r2 = np.einsum("ij,ij->i", x, x)
        if self.kind == "disk":
            return r2 < 1.0
        return (r2 > 1.0) & (r2 < 4.0)

    def boundary_residual(self, z) -> np.ndarray:
        """Distance of ``z`` from the boundary curve (0 on the boundary)."""
        z = np.atleast_2d(z)
        if self.kind == "square":
            inside_box = np.maximum(np.maximum(-z, z - 1.0).max(axis=1), 0.0)
            edge = np.minimum(np.abs(z), np.abs(z - 1.0)).min(axis=1)
            return np.maximum(inside_box, edge)
        r = np.hypot(z[:, 0], z[:, 1])
        if self.kind == "disk":
            return np.abs(r - 1.0)
        return np.minimum(np.abs(r - 1.0), np.abs(r - 2.0))

    def distance_to_boundary(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.kind == "square":
            return np.minimum(x, 1.0 - x).min(axis=1)
        r = np.hypot(x[:, 0], x[:, 1])
        if self.kind == "disk":
            return 1.0 - r
        return np.minimum(r - 1.0, 2.0 - r)

    def in_closure(self, x, tol=BOUNDARY_TOL) -> np.ndarray:
        x = np.atleast_2d(x)
        return self.distance_to_boundary(x) >= -tol

    @property
    def boundary_components(self) -> tuple[float, ...]:
        """Lengths of the boundary components, in quadrature order."""
        if self.kind == "annulus":
            return (2 * math.pi, 4 * math.pi)
        return (self.perimeter,)


DISK = Domain("disk", math.pi, 2 * math.pi, (-1.0, 1.0, -1.0, 1.0))
ANNULUS = Domain("annulus", 3 * math.pi, 6 * math.pi, (-2.0, 2.0, -2.0, 2.0))
SQUARE = Domain("square", 1.0, 4.0, (0.0, 1.0, 0.0, 1.0))

_DOMAINS = {"disk": DISK, "annulus": ANNULUS, "square": SQUARE}


def domain(kind: str) -> Domain:
    try:
        return _DOMAINS[kind]
    except KeyError:
        raise ValueError(f"unknown domain {kind!r}; expected one of {sorted(_DOMAINS)}") from None


@dataclass(frozen=True, eq=False)
class QuadratureSet:
    domain: Domain
    lattice_constant: int
    interior_points: np.ndarray
    boundary_points: np.ndarray
    # boundary_slices[k] selects the points of boundary component k
    boundary_slices: tuple[slice, ...] = field(default=())

    @property
    def n_int(self) -> int:
        return len(self.interior_points)

    @property
    def n_bdr(self) -> int:
        return len(self.boundary_points)

    @property
    def interior_cell_measure(self) -> float:
        return 1.0 / self.lattice_constant**2

    @property
    def boundary_segment_measures(self) -> tuple[float, ...]:
        return tuple(
            length / (s.stop - s.start)
            for length, s in zip(self.domain.boundary_components, self.boundary_slices)
        )


def _lattice(dom: Domain, N: int) -> np.ndarray:
    xmin, xmax, ymin, ymax = dom.bbox
    i = np.arange(math.floor(xmin * N), math.ceil(xmax * N) + 1)
    j = np.arange(math.floor(ymin * N), math.ceil(ymax * N) + 1)
    I, J = np.meshgrid(i, j, indexing="ij")
    I = I.ravel()
    J = J.ravel()
    # membership decided in exact integer arithmetic
    if dom.kind == "square":
        keep = (I > 0) & (I < N) & (J > 0) & (J < N)
    else:
        r2 = I * I + J * J
        keep = r2 < N * N if dom.kind == "disk" else (r2 > N * N) & (r2 < 4 * N * N)
    return np.column_stack([I[keep], J[keep]]) / N


def _circle(radius: float, n: int) -> np.ndarray:
    phi = 2 * np.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(phi), np.sin(phi)])


def _square_perimeter(n: int) -> np.ndarray:
    # counterclockwise from the origin, arclength parameter s in [0, 4)
    s = 4.0 * np.arange(n) / n
    side = np.minimum(np.floor(s).astype(int), 3)
    u = s - side
    pts = np.empty((n, 2))
    pts[side == 0] = np.column_stack([u[side == 0], np.zeros((side == 0).sum())])
    pts[side == 1] = np.column_stack([np.ones((side == 1).sum()), u[side == 1]])
    pts[side == 2] = np.column_stack([1.0 - u[side == 2], np.ones((side == 2).sum())])
    pts[side == 3] = np.column_stack([np.zeros((side == 3).sum()), 1.0 - u[side == 3]])
    return pts


def equispaced_boundary(dom: Domain, counts) -> tuple[np.ndarray, tuple[slice, ...]]:
    """Equi-spaced arclength points, ``counts[k]`` on boundary component ``k``."""
    if dom.kind == "square":
        parts = [_square_perimeter(counts[0])]
    elif dom.kind == "disk":
        parts = [_circle(1.0, counts[0])]
    else:
        parts = [_circle(1.0, counts[0]), _circle(2.0, counts[1])]
    slices = []
    start = 0
    for p in parts:
        slices.append(slice(start, start + len(p)))
        start += len(p)
    return np.concatenate(parts), tuple(slices)


def build_quadrature(dom: Domain | str, N: int) -> QuadratureSet:
    """Interior points ``(1/N)Z^2 ∩ int(Ω)`` and ``round(N·|∂Ω_k|)`` boundary points per component."""
    if isinstance(dom, str):
        dom = domain(dom)
    if N < 2:
        raise ValueError("lattice constant N must be at least 2")
    counts = [round(N * length) for length in dom.boundary_components]
    bdr, slices = equispaced_boundary(dom, counts)
    return QuadratureSet(dom, N, _lattice(dom, N), bdr, slices)


def integrate_interior(q: QuadratureSet, values) -> float:
    """Lattice rule with cell measure 1/N^2."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (q.n_int,):
        raise ValueError(f"expected {q.n_int} interior values, got shape {values.shape}")
    return float(values.sum() * q.interior_cell_measure)


def mean_boundary(q: QuadratureSet, values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (q.n_bdr,):
        raise ValueError(f"expected {q.n_bdr} boundary values, got shape {values.shape}")
    return float(values.mean())


def sample_uniform(dom: Domain | str, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. uniform points in Ω by rejection from the bounding box."""
    if isinstance(dom, str):
        dom = domain(dom)
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    xmin, xmax, ymin, ymax = dom.bbox
    box_area = (xmax - xmin) * (ymax - ymin)
    accept = dom.area / box_area
    out = []
    have = 0
    while have < n:
        m = int((n - have) / accept * 1.05) + 64
        pts = rng.uniform((xmin, ymin), (xmax, ymax), size=(m, 2))
        pts = pts[dom.contains(pts)]
        out.append(pts)
        have += len(pts)
    return np.concatenate(out)[:n]


def sample_stratified(dom: Domain | str, n: int, seed: int) -> np.ndarray:
    """About ``n`` jittered points in Ω: one uniform point per cell of a grid on the bounding box.

    Each point is uniform within its cell, so averages are unbiased like plain
    uniform sampling but with far smaller variance for smooth integrands.
    """
    if isinstance(dom, str):
        dom = domain(dom)
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    xmin, xmax, ymin, ymax = dom.bbox
    h = math.sqrt(dom.area / n)
    mx, my = math.ceil((xmax - xmin) / h), math.ceil((ymax - ymin) / h)
    hx, hy = (xmax - xmin) / mx, (ymax - ymin) / my
    i, j = np.meshgrid(np.arange(mx), np.arange(my), indexing="ij")
    jitter = rng.uniform(size=(mx * my, 2))
    pts = np.column_stack([xmin + (i.ravel() + jitter[:, 0]) * hx, ymin + (j.ravel() + jitter[:, 1]) * hy])
    return pts[dom.contains(pts)]


def sample_boundary(dom: Domain | str, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. points uniform w.r.t. arclength on ∂Ω."""
    if isinstance(dom, str):
        dom = domain(dom)
    rng = np.random.Generator(np.random.PCG64(seed))
    s = rng.uniform(0.0, dom.perimeter, size=n)
    if dom.kind == "square":
        side = np.minimum(np.floor(s).astype(int), 3)
        u = s - side
        x = np.choose(side, [u, np.ones(n), 1.0 - u, np.zeros(n)])
        y = np.choose(side, [np.zeros(n), u, np.ones(n), 1.0 - u])
        return np.column_stack([x, y])
    if dom.kind == "disk":
        radius = np.ones(n)
        phi = s
    else:
        inner = s < 2 * np.pi
        radius = np.where(inner, 1.0, 2.0)
        phi = np.where(inner, s, (s - 2 * np.pi) / 2.0)
    return radius[:, None] * np.column_stack([np.cos(phi), np.sin(phi)])


@dataclass(frozen=True)
class DistanceFunction:
    id: str
    domain: Domain
    _eval: object = field(repr=False)
    _grad: object = field(repr=False)

    def _check(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if not np.all(self.domain.in_closure(x)):
            raise ValueError(f"{self.id} evaluated outside the closed {self.domain.kind}")
        return x

    def eval(self, x) -> np.ndarray:
        return self._eval(self._check(x))

    def grad(self, x) -> np.ndarray:
        return self._grad(self._check(x))


def _radial(x):
    return np.hypot(x[:, 0], x[:, 1])


def _radial_grad(x, r, dd_dr):
    # chain rule through r; callers handle r = 0 via dd_dr/r
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[:, None] > 0, x / r[:, None], 0.0)
    return dd_dr[:, None] * unit


def _disk_trig(x):
    return np.cos(np.pi * _radial(x) / 2)


def _disk_trig_grad(x):
    r = _radial(x)
    # -(pi/2) sin(pi r/2) x / r, with the smooth extension 0 at r = 0
    return _radial_grad(x, r, -(np.pi / 2) * np.sin(np.pi * r / 2))


def _disk_pol(x):
    return x[:, 0] ** 2 + x[:, 1] ** 2 - 1.0


def _disk_pol_grad(x):
    return 2.0 * x


def _square_trig(x):
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


def _square_trig_grad(x):
    sx, sy = np.sin(np.pi * x[:, 0]), np.sin(np.pi * x[:, 1])
    cx, cy = np.cos(np.pi * x[:, 0]), np.cos(np.pi * x[:, 1])
    return np.pi * np.column_stack([cx * sy, sx * cy])


def _square_pol(x):
    px = x[:, 0] * (x[:, 0] - 1.0)
    py = x[:, 1] * (x[:, 1] - 1.0)
    return px * py


def _square_pol_grad(x):
    px = x[:, 0] * (x[:, 0] - 1.0)
    py = x[:, 1] * (x[:, 1] - 1.0)
    return np.column_stack([(2 * x[:, 0] - 1.0) * py, px * (2 * x[:, 1] - 1.0)])


def _annulus_trig(x):
    return np.sin(np.pi * _radial(x))


def _annulus_trig_grad(x):
    r = _radial(x)
    return _radial_grad(x, r, np.pi * np.cos(np.pi * r))


def _annulus_pol(x):
    r = _radial(x)
    return -(r - 1.0) * (r - 2.0)


def _annulus_pol_grad(x):
    r = _radial(x)
    return _radial_grad(x, r, 3.0 - 2.0 * r)


_DISTANCES = {
    "disk_trig": (DISK, _disk_trig, _disk_trig_grad),
    "disk_pol": (DISK, _disk_pol, _disk_pol_grad),
    "square_trig": (SQUARE, _square_trig, _square_trig_grad),
    "square_pol": (SQUARE, _square_pol, _square_pol_grad),
    "annulus_trig": (ANNULUS, _annulus_trig, _annulus_trig_grad),
    "annulus_pol": (ANNULUS, _annulus_pol, _annulus_pol_grad),
}

DISTANCE_IDS = tuple(_DISTANCES)


def distance_fn(id: str) -> DistanceFunction:
    try:
        dom, f, g = _DISTANCES[id]
    except KeyError:
        raise ValueError(f"unknown distance function {id!r}; expected one of {DISTANCE_IDS}") from None
    return DistanceFunction(id, dom, f, g)
