import numpy as np
import pytest

import gifslab as gl
from gifslab.measures import (
    DiscreteMeasure,
    PruneRule,
    extended_markov_step,
    iterate_hutchinson_measure,
    marginal,
    markov_step,
    transfer_apply,
    wasserstein,
)


def test_transfer_trivia(doubling):
    sys_d, ws_d = doubling
    one = transfer_apply(sys_d, ws_d, lambda p: 1.0, [0.3, 0.8])
    assert one == pytest.approx(1.0, abs=1e-12)
    # branch average of the identity: x/2 + 1/4
    for x, y in [(0.0, 0.5), (0.4, 0.1), (1.0, 0.9)]:
        val = transfer_apply(sys_d, ws_d, lambda p: float(p[0]), [x, y])
        assert val == pytest.approx(x / 2 + 0.25, abs=1e-12)


def test_transfer_extended_projection_identity(doubling, rng):
    # applying the extended operator to f(last slot) equals the base operator
    sys_d, ws_d = doubling
    ext = gl.build_extension(sys_d)
    f = lambda p: float(np.sin(p[0]))
    for _ in range(20):
        x, y = rng.uniform(0, 1, 2)
        lhs = transfer_apply(ext, ws_d, lambda z: f(z[1:]), [x, y])
        rhs = transfer_apply(sys_d, ws_d, f, [x, y])
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_markov_step_dirac_product(doubling):
    sys_d, ws_d = doubling
    box = sys_d.domain
    out = markov_step(sys_d, ws_d, [DiscreteMeasure.dirac([0.2], box), DiscreteMeasure.dirac([0.6], box)])
    assert out.size == 2
    assert sorted(out.points.ravel()) == [0.1, 0.6]
    assert np.allclose(out.weights, 0.5)
    assert out.mass == pytest.approx(1.0, abs=1e-12)


def test_markov_step_first_moment_oracle(doubling):
    # brute enumeration over all 2*9 output atoms fixes the first moment
    sys_d, ws_d = doubling
    box = sys_d.domain
    grid = DiscreteMeasure.uniform([[0.0], [0.5], [1.0]], box)
    out = markov_step(sys_d, ws_d, [grid, grid])
    expected = 0.0
    for x in (0.0, 0.5, 1.0):
        for _y in (0.0, 0.5, 1.0):
            for j, p in ((0, 0.5), (1, 0.5)):
                expected += (1 / 9) * p * (x / 2 + j / 2)
    assert out.moment([1]) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.5, abs=1e-12)


def test_markov_budget(doubling):
    sys_d, ws_d = doubling
    box = sys_d.domain
    mus = [DiscreteMeasure.uniform(np.linspace(0, 1, 40)[:, None], box)] * 2
    with pytest.raises(gl.AtomBudgetExceeded):
        markov_step(sys_d, ws_d, mus, budget=100)


def test_extended_markov_step(doubling):
    sys_d, ws_d = doubling
    ext = gl.build_extension(sys_d)
    alpha = DiscreteMeasure.dirac([0.2, 0.6], ext.domain, blocks=2)
    out = extended_markov_step(ext, ws_d, alpha)
    assert out.size == 2
    got = sorted(map(tuple, np.round(out.points, 12)))
    assert got == [(0.6, 0.1), (0.6, 0.6)]
    assert out.mass == pytest.approx(1.0, abs=1e-12)

    # one step from a product measure equalizes the slot means
    grid = DiscreteMeasure.grid_uniform(ext.domain, 3, blocks=2)
    stepped = extended_markov_step(ext, ws_d, grid)
    assert stepped.moment([1, 0]) == pytest.approx(stepped.moment([0, 1]), abs=1e-12)


def test_mass_conservation_over_steps(averaging_fde):
    sys_f, ws_f = averaging_fde
    box = sys_f.domain
    prune = PruneRule(1 / 128)
    hist = [DiscreteMeasure.dirac([0.25], box), DiscreteMeasure.dirac([0.75], box)]
    for k in range(1, 9):
        new = markov_step(sys_f, ws_f, hist)
        assert abs(new.mass - 1.0) <= k * 1e-9
        hist = [hist[1], prune.apply(new)]


def test_prune_preserves_mass_and_mean(rng):
    box = gl.Box.unit(2)
    pts = rng.uniform(0, 1, (500, 2))
    w = rng.dirichlet(np.ones(500))
    mu = DiscreteMeasure(pts, w, box)
    pruned = PruneRule(1 / 8).apply(mu)
    assert pruned.size <= 64
    assert pruned.mass == pytest.approx(mu.mass, abs=1e-12)
    assert np.allclose(pruned.mean(), mu.mean(), atol=1e-12)


def test_iterate_measure_constant_map():
    cmap = gl.GifsMap.affine(np.zeros((2, 1, 1)), np.array([0.3]))
    csys = gl.GifsSystem(domain=gl.Box.unit(1), degree=2, maps=(cmap,))
    cws = gl.WeightSystem.constant([1.0], degree=2)
    res = iterate_hutchinson_measure(csys, cws, tol=1e-6)
    assert res.converged
    assert res.measure.size == 1
    assert res.measure.points[0, 0] == pytest.approx(0.3, abs=1e-9)


def test_iterate_measure_doubling_base(doubling):
    sys_d, ws_d = doubling
    res = iterate_hutchinson_measure(sys_d, ws_d, tol=1e-3)
    mu = res.measure
    assert res.converged
    assert mu.mean()[0] == pytest.approx(0.5, abs=5e-3)
    assert mu.moment([2]) == pytest.approx(1 / 3, abs=5e-3)


def test_iterate_measure_fde_gaps_decrease(averaging_fde):
    sys_f, ws_f = averaging_fde
    res = iterate_hutchinson_measure(sys_f, ws_f, tol=1e-3, max_iter=200)
    g = res.gaps
    assert res.converged
    assert all(g[i + 1] <= g[i] * 1.0001 + 1e-12 for i in range(4, len(g) - 1))


def test_iterate_measure_no_convergence(averaging_fde):
    sys_f, ws_f = averaging_fde
    with pytest.raises(gl.NoConvergence) as exc:
        iterate_hutchinson_measure(sys_f, ws_f, tol=1e-9, max_iter=10)
    assert exc.value.partial.gaps


def test_extended_fixed_point_doubling(doubling):
    sys_d, ws_d = doubling
    ext = gl.build_extension(sys_d)
    res = iterate_hutchinson_measure(ext, ws_d, tol=1e-3)
    mu = res.measure
    assert res.converged
    assert mu.mean()[0] == pytest.approx(0.5, abs=5e-3)
    assert mu.mean()[1] == pytest.approx(0.5, abs=5e-3)
    assert mu.moment([1, 1]) == pytest.approx(0.25, abs=5e-3)
    defect = wasserstein(marginal(mu, 0), marginal(mu, 1)).cost
    assert defect <= 2e-3


def test_marginal_trivia():
    box2 = gl.Box.unit(2)
    prod = DiscreteMeasure.dirac([0.2, 0.7], box2, blocks=2)
    m0, m1 = marginal(prod, 0), marginal(prod, 1)
    assert m0.points[0, 0] == 0.2 and m1.points[0, 0] == 0.7

    anti = DiscreteMeasure.uniform([[0.0, 1.0], [1.0, 0.0]], box2, blocks=2)
    for b in (0, 1):
        mb = marginal(anti, b)
        assert sorted(mb.points.ravel()) == [0.0, 1.0]
        assert np.allclose(mb.weights, 0.5)


def test_measure_serialization_guard():
    box = gl.Box.unit(1)
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[0.5]]), np.array([0.5]), box)  # mass 0.5
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[2.0]]), np.array([1.0]), box)  # outside
