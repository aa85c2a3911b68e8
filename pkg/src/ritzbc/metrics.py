"""Monte Carlo error norms, ensemble statistics, the disk error bound and the loss/energy monitor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import net
from .geom import Domain, QuadratureSet, domain, sample_uniform
from .loss import measure_weighted_energy
from .problems import ReferenceSolution, problem as get_problem, robin_solution

__all__ = [
    "ErrorReport",
    "relative_errors",
    "network_model",
    "EnsembleStats",
    "ensemble",
    "BoundReport",
    "robin_energy_disk",
    "disk_bound",
    "MonitorSummary",
    "monitor_divergence",
]

Model = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]


def network_model(params, arch=None) -> Model:
    def evaluate(x):
        b = net.forward(params, x, arch)
        return b.values, b.input_grads

    return evaluate


@dataclass(frozen=True)
class ErrorReport:
    rel_l2: float
    rel_h1: float
    reference: str
    n_samples: int
    seed: int


def relative_errors(model: Model, reference: ReferenceSolution, dom: Domain | str, n: int = 10**6,
                    seed: int = 0, chunk: int = 200_000, reference_label: str = "dirichlet") -> ErrorReport:
    """Relative L² and full-H¹ errors on ``n`` uniform samples.

    The common measure factor |Ω|/n cancels in both ratios, so plain sums are used.
    """
    if isinstance(dom, str):
        dom = domain(dom)
    x = sample_uniform(dom, n, seed)
    diff_v = diff_g = ref_v = ref_g = 0.0
    for s in range(0, n, chunk):
        xs = x[s:s + chunk]
        v, g = model(xs)
        rv, rg = reference(xs)
        diff_v += np.sum((v - rv) ** 2)
        diff_g += np.sum((g - rg) ** 2)
        ref_v += np.sum(rv**2)
        ref_g += np.sum(rg**2)
    if ref_v == 0.0:
        raise ZeroDivisionError("reference vanishes on all samples")
    return ErrorReport(
        rel_l2=float(math.sqrt(diff_v / ref_v)),
        rel_h1=float(math.sqrt((diff_v + diff_g) / (ref_v + ref_g))),
        reference=reference_label,
        n_samples=n,
        seed=seed,
    )


@dataclass(frozen=True)
class EnsembleStats:
    mean: float
    sample_std: float
    n_runs: int
    n_failed: int


def ensemble(values: Sequence[float | None]) -> EnsembleStats:
    """Mean and n-1 sample std over successful runs; ``None``/NaN entries count as failures.

    A single successful run reports std 0.
    """
    values = list(values)
    if not values:
        raise ValueError("no reports")
    ok = [float(v) for v in values if v is not None and math.isfinite(v)]
    if not ok:
        raise ValueError("all runs failed")
    arr = np.asarray(ok)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return EnsembleStats(float(arr.mean()), std, len(values), len(values) - len(ok))


@dataclass(frozen=True)
class BoundReport:
    lam: float
    delta: float
    approx_term: float | None
    coefficient_a: float
    coefficient_b: float
    robin_gap_nominal: float     # π/(4λ), the constant the bound is quoted with
    robin_gap_computed: float    # √π/(4λ), the actual H¹ norm of u_λ - u₀
    bound_value: float
    # the Robin energy is the infimum over all of H¹, which lower-bounds the
    # infimum over the network class, so ``delta`` overestimates the true gap
    delta_is_upper_estimate: bool = True


def robin_energy_disk(lam: float) -> float:
    """Continuous penalized energy of the disk Robin solution, by radial quadrature."""
    ref = robin_solution("disk", lam)

    def integrand(r):
        p = np.array([[r, 0.0]])
        v, g = ref(p)
        return (0.5 * float(g[0] @ g[0]) - float(v[0])) * 2 * math.pi * r

    interior, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    v_bdr = float(ref.value(np.array([[1.0, 0.0]]))[0])
    return interior + lam * 2 * math.pi * v_bdr**2


def disk_bound(lam: float, loss_value: float | None = None, params=None, quadrature: QuadratureSet | None = None,
               approx_term: float | None = None, robin_energy: float | None = None,
               n_norm_samples: int = 0) -> BoundReport:
    """Evaluate the specialized disk error bound.

    The optimization gap is ``max(0, L(θ) - E_λ(u_λ))`` with the measure-weighted
    loss ``L`` either passed directly as ``loss_value`` or computed from
    ``params`` on ``quadrature``. ``approx_term`` (the ansatz-distance term) is
    only included when supplied.
    """
    if not lam > 0:
        raise ValueError("penalization strength must be positive")
    if quadrature is not None and quadrature.domain.kind != "disk":
        raise ValueError("the specialized bound holds on the disk only")
    if loss_value is None:
        if params is None or quadrature is None:
            raise ValueError("need loss_value or (params, quadrature)")
        loss_value = measure_weighted_energy(get_problem("disk"), quadrature, network_model(params), lam)
    if robin_energy is None:
        robin_energy = robin_energy_disk(lam)
    delta = max(0.0, loss_value - robin_energy)
    a = (8 + 10 * lam) / lam
    b = (4 + 5 * lam) / lam
    gap_nominal = math.pi / (4 * lam)
    # ‖1/(4λ)‖_{H¹(B₁)} = √|B₁| / (4λ)
    gap_computed = math.sqrt(math.pi) / (4 * lam)
    inner = a * delta + (b * approx_term if approx_term is not None else 0.0)
    return BoundReport(lam, delta, approx_term, a, b, gap_nominal, gap_computed, math.sqrt(inner) + gap_nominal)


@dataclass(frozen=True)
class MonitorSummary:
    max_abs_diff: float
    final_abs_diff: float
    iterations: np.ndarray
    abs_diff: np.ndarray


def monitor_divergence(trace) -> MonitorSummary:
    """Summarize a ``[(iteration, loss, energy), ...]`` trace."""
    arr = np.asarray(trace, dtype=np.float64)
    if arr.ndim != 2 or len(arr) == 0:
        raise ValueError("empty monitor trace")
    diff = np.abs(arr[:, 1] - arr[:, 2])
    return MonitorSummary(float(diff.max()), float(diff[-1]), arr[:, 0].astype(int), diff)
