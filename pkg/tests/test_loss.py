import numpy as np
import pytest

from ritzbc import geom, net
from ritzbc.loss import ExactBCLoss, PenaltyLoss, energy_estimate, measure_weighted_energy, ritz_loss
from ritzbc.problems import problem
from conftest import central_diff

ARCH = net.Architecture()


def constant_params(c):
    """All weights zero, output bias c: u ≡ c."""
    return net.shift_output_bias(np.zeros(ARCH.n_params), c)


def perturbed(seed, scale=0.1):
    rng = np.random.default_rng(seed)
    return net.init_glorot(ARCH, seed) + scale * rng.normal(size=ARCH.n_params)


def fd_check(objective, p, n_coords, seed, tol=1e-5):
    _, grad = objective(p)
    idx = np.random.default_rng(seed).choice(len(p), n_coords, replace=False)

    def f_restricted(v):
        q = p.copy()
        q[idx] = v
        return objective.value(q)

    fd = central_diff(f_restricted, p[idx], 1e-6)
    scale = max(np.max(np.abs(fd)), 1e-8)
    assert np.max(np.abs(grad[idx] - fd)) / scale < tol


@pytest.mark.parametrize("kind", ["disk", "annulus", "square"])
def test_zero_network_loss(kind):
    q = geom.build_quadrature(kind, 10)
    p0 = np.zeros(ARCH.n_params)
    assert PenaltyLoss(problem(kind), q, 10.0).value(p0) == 0.0
    d = geom.distance_fn(f"{kind}_trig")
    assert ExactBCLoss(problem(kind), q, d).value(p0) == 0.0


@pytest.mark.parametrize("kind", ["disk", "annulus", "square"])
@pytest.mark.parametrize("c", [-0.7, 0.0, 0.005, 1.3])
def test_constant_network_mean_consistency(kind, c):
    prob = problem(kind)
    q = geom.build_quadrature(kind, 20)
    lam = 37.0
    mean_f = np.sum(prob.f(q.interior_points)) / q.n_int
    loss = PenaltyLoss(prob, q, lam).value(constant_params(c))
    assert loss == pytest.approx(-c * mean_f + lam * c * c, abs=1e-12)


def test_constant_network_disk_minimizer():
    q = geom.build_quadrature("disk", 20)
    for lam in (1.0, 100.0, 1e4):
        L = PenaltyLoss(problem("disk"), q, lam)
        cs = np.linspace(-0.2, 0.8, 20001) / lam
        vals = [L.value(constant_params(c)) for c in cs[::50]]
        best = cs[::50][int(np.argmin(vals))]
        assert abs(best - 1 / (2 * lam)) <= 50 * (cs[1] - cs[0])
        # closed form −c + λc² at the minimizer
        assert L.value(constant_params(1 / (2 * lam))) == pytest.approx(-1 / (4 * lam), abs=1e-12)


@pytest.mark.parametrize("kind", ["disk", "annulus", "square"])
def test_penalty_gradient_finite_differences(kind):
    q = geom.build_quadrature(kind, 10)
    L = PenaltyLoss(problem(kind), q, 50.0)
    fd_check(L, perturbed(3), 25, seed=0)


@pytest.mark.parametrize("did", geom.DISTANCE_IDS)
def test_exactbc_gradient_finite_differences(did):
    d = geom.distance_fn(did)
    q = geom.build_quadrature(d.domain, 10)
    L = ExactBCLoss(problem(d.domain.kind), q, d)
    fd_check(L, perturbed(4), 25, seed=1)


def test_exactbc_quarter_constant_on_disk():
    prob = problem("disk")
    q = geom.build_quadrature("disk", 30)
    L = ExactBCLoss(prob, q, geom.distance_fn("disk_pol"))
    loss = L.value(constant_params(0.25))
    # d·u = (r² − 1)/4 = −u^D, so the linear term flips sign
    x = q.interior_points
    ud, gd = prob.dirichlet_ref(x)
    expected = np.mean(0.5 * np.sum(gd**2, axis=1) + prob.f(x) * ud)
    assert loss == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("did", geom.DISTANCE_IDS)
def test_exactbc_ansatz_boundary_values(did):
    d = geom.distance_fn(did)
    q = geom.build_quadrature(d.domain, 40)
    L = ExactBCLoss(problem(d.domain.kind), q, d)
    for seed in range(3):
        p = perturbed(seed, 0.5)
        w_bdr, _ = L.model(p)(q.boundary_points)
        u = net.forward(p, np.vstack([q.interior_points, q.boundary_points])).values
        assert np.max(np.abs(w_bdr)) <= 1e-10 * np.max(np.abs(u))


def test_mismatched_specs_rejected():
    q = geom.build_quadrature("disk", 10)
    with pytest.raises(ValueError):
        PenaltyLoss(problem("square"), q, 1.0)
    with pytest.raises(ValueError):
        PenaltyLoss(problem("disk"), q, 0.0)
    with pytest.raises(ValueError):
        ExactBCLoss(problem("disk"), q, geom.distance_fn("square_pol"))


def test_energy_estimate_on_training_grid_equals_loss():
    prob = problem("annulus")
    q = geom.build_quadrature("annulus", 20)
    p = perturbed(8)
    L = PenaltyLoss(prob, q, 100.0)
    assert energy_estimate(prob, p, q.interior_points, q.boundary_points, 100.0) == L.value(p)
    d = geom.distance_fn("annulus_trig")
    assert energy_estimate(prob, p, q.interior_points, q.boundary_points, 0.0, d=d) == \
        pytest.approx(ExactBCLoss(prob, q, d).value(p), rel=1e-14)


def test_energy_estimate_constant_network():
    prob = problem("disk")
    x = geom.sample_uniform("disk", 10**5, 3)
    z = geom.sample_boundary("disk", 10**4, 4)
    c = 0.02
    e = energy_estimate(prob, constant_params(c), x, z, 100.0)
    # f ≡ 1 and u ≡ c make both means exact
    assert e == pytest.approx(-c + 100 * c * c, abs=1e-14)
    assert energy_estimate(prob, np.zeros(ARCH.n_params), x, z, 100.0) == 0.0
    with pytest.raises(ValueError):
        energy_estimate(prob, constant_params(c), x[:0], z, 1.0)


def test_measure_weighted_energy_constant():
    prob = problem("disk")
    q = geom.build_quadrature("disk", 80)
    c = 0.1

    def model(x):
        return np.full(len(x), c), np.zeros((len(x), 2))

    e = measure_weighted_energy(prob, q, model, 5.0)
    area = q.n_int / 80**2
    assert e == pytest.approx(-c * area + 5.0 * 2 * np.pi * c * c, rel=1e-13)


def _bump_family(q, s):
    """``s · Σ_i φ(x − x_i)`` evaluated at the quadrature points.

    φ(y) = (1 − |y|²/ρ²)³ on |y| < ρ with ρ below half the lattice spacing and
    below the lattice-to-boundary gap: value s and zero gradient at every x_i,
    zero at every z_j.
    """
    N = q.lattice_constant
    gap = np.min(np.hypot(*(q.interior_points[:, None, :] - q.boundary_points[None, :, :]).transpose(2, 0, 1)))
    rho = 0.9 * min(0.5 / N, gap)

    def evaluate(x):
        nearest = np.round(x * N) / N
        y = x - nearest
        r2 = np.sum(y * y, axis=1) / rho**2
        on = (r2 < 1) & q.domain.contains(nearest)
        val = np.where(on, (1 - r2) ** 3, 0.0)
        grad = np.where(on[:, None], -6 * (1 - r2)[:, None] ** 2 * y / rho**2, 0.0)
        return s * val, s * grad

    return evaluate


def test_discrete_loss_unbounded_on_expressive_sets():
    prob = problem("disk")
    q = geom.build_quadrature("disk", 12)
    f_int = prob.f(q.interior_points)
    losses = []
    for s in (1.0, 10.0, 100.0, 1e4, -1e4):
        u = _bump_family(q, s)
        v, g = u(q.interior_points)
        vb, _ = u(q.boundary_points)
        np.testing.assert_array_equal(g, 0.0)
        np.testing.assert_array_equal(vb, 0.0)
        losses.append(ritz_loss(v, g, f_int, vb, lam=1e3))
    assert losses[0] > losses[1] > losses[2] > losses[3]
    assert losses[3] == pytest.approx(-1e4, rel=1e-12)
    assert losses[4] == pytest.approx(1e4, rel=1e-12)
