"""Acceptance suite: one test per release criterion, tolerances pinned.

Each test prints an `ACCEPTANCE <n>: PASS|FAIL` line so a plain
`pytest tests/test_acceptance.py -v -s` doubles as the sign-off report.
"""

import json
import subprocess
import sys
import time
from functools import lru_cache

import numpy as np
import pytest

import gifslab as gl
from gifslab import fileio
from gifslab.extension import block_metric
from gifslab.fde import closed_form_orbit, coefficients, initial_coefficients, iterate_fde
from gifslab.gallery import (
    affine_e2_weights,
    averaging_fde_spec,
    averaging_fde_system,
    doubling_system,
    mixed_sign_system,
)
from gifslab.grids import GridSet
from gifslab.measures import DiscreteMeasure, iterate_hutchinson_measure, marginal, wasserstein
from gifslab.transport import flow_plan, ground_cost_matrix, quantile_plan


def check(num, description, passed):
    print(f"ACCEPTANCE {num}: {'PASS' if passed else 'FAIL'} - {description}")
    assert passed, f"criterion {num}: {description}"


def test_criterion_1_mixed_sign_attractor():
    sys_m, _ = mixed_sign_system()
    eps = 1.0 / 512.0
    t0 = time.monotonic()
    res = gl.iterate_attractor(sys_m, eps=eps)
    elapsed = time.monotonic() - t0
    ref = GridSet.cover_box(sys_m.domain, eps, gl.Box.interval(0.0, 0.75))
    dh = gl.hausdorff_distance(res.attractor, ref)
    check(
        1,
        f"deterministic attractor within 2*eps of [0, 3/4] (got {dh / eps:.2f}*eps, "
        f"{elapsed:.1f}s)",
        res.converged and dh <= 2 * eps and elapsed < 60.0,
    )


def test_criterion_2_strict_projection_at_resolution():
    sys_m, ws_m = mixed_sign_system()
    eps = 1.0 / 64.0
    orbit = gl.chaos_orbit(sys_m, ws_m, [0.1, 0.2], 100_000, seed=gl.DEFAULT_SEED, burn_in=0)
    cover = gl.orbit_closure(orbit, eps, tail_start=1_000)
    proj = gl.project_set(cover, 0)
    ref = GridSet.cover_box(sys_m.domain, eps, gl.Box.interval(0.0, 0.75))
    contained = proj.issubset(ref)
    missing = int(ref.count - np.logical_and(ref.cells, proj.cells).sum())
    check(
        2,
        f"tail-cover projection inside [0, 3/4] cells with >= 1 cell uncovered "
        f"(missing {missing})",
        contained and missing >= 1,
    )


def test_criterion_3_doubling_chaos_and_averages():
    sys_d, ws_d = doubling_system()
    t0 = time.monotonic()
    orbit40 = gl.chaos_orbit(sys_d, ws_d, [0.3, 0.7], 40_000, seed=gl.DEFAULT_SEED, burn_in=0)
    cover = gl.orbit_closure(orbit40, 1.0 / 64.0, tail_start=0)
    n = 1_000_000
    orbit = gl.chaos_orbit(sys_d, ws_d, [0.3, 0.7], n + 1_000, seed=gl.DEFAULT_SEED)
    mean_x = gl.ergodic_average(orbit, lambda p: p[:, 0], n)
    mean_xy = gl.extended_ergodic_average(orbit, lambda w: w[:, 0] * w[:, 1], n)
    visit = gl.visitation_frequency(orbit, gl.Box.interval(0.0, 0.5), n)
    elapsed = time.monotonic() - t0
    check(
        3,
        f"full 64x64 cover ({cover.count} cells), mean x {mean_x:.4f}, "
        f"mean xy {mean_xy:.4f}, visitation {visit:.4f}, {elapsed:.1f}s",
        cover.count == 64 * 64
        and abs(mean_x - 0.5) <= 0.01
        and abs(mean_xy - 0.25) <= 0.01
        and abs(visit - 0.5) <= 0.01
        and elapsed < 30.0,
    )


def test_criterion_4_fde_coefficients_and_closed_form():
    series_ok = coefficients(9) == [1, 1, 5, 9, 29, 65, 181, 441, 1165]
    spec = averaging_fde_spec()
    rng = np.random.default_rng(gl.DEFAULT_SEED)
    worst = 0.0
    for _ in range(1000):
        x0, x1 = rng.uniform(0.0, 1.0, 2)
        controls = rng.integers(0, 2, 21).tolist()
        path = iterate_fde(spec, [x0, x1], controls)
        for n in range(21):
            worst = max(worst, abs(closed_form_orbit(x0, x1, controls, n) - path[n + 2]))
    decay = initial_coefficients(20)[0]
    check(
        4,
        f"series exact, closed form vs iteration max |d| {worst:.2e}, "
        f"x0 coefficient at n=20 is {decay:.2e}",
        series_ok and worst < 1e-10 and decay < 1e-3,
    )


def test_criterion_5_second_power_contractivity():
    worst_excess = -1.0
    for sys_, _ in (mixed_sign_system(), doubling_system(), averaging_fde_system()):
        ext = gl.build_extension(sys_)
        lam = sys_.contraction_factor
        ps = gl.power_system(ext, sys_.degree)
        rng = np.random.default_rng(gl.DEFAULT_SEED)
        u = rng.uniform(0.0, 1.0, (10_000, 2))
        v = rng.uniform(0.0, 1.0, (10_000, 2))
        den = block_metric(u, v, 1)
        keep = den > 1e-12
        for w in range(ps.word_count):
            num = block_metric(
                ps.eval_word_many(w, u[keep]), ps.eval_word_many(w, v[keep]), 1
            )
            worst_excess = max(worst_excess, float((num / den[keep]).max()) - lam)
    check(
        5,
        f"sampled power-word stretches <= lambda + 1e-9 (worst excess {worst_excess:.2e})",
        worst_excess <= 1e-9,
    )


def test_criterion_6_power_weight_modulus():
    sys_f, _ = averaging_fde_system()
    ws = affine_e2_weights()   # c + d = 0.35 < 1, delta = 0.3
    ps = gl.power_system(gl.build_extension(sys_f), 2, weights=ws)
    mod = gl.power_weight_modulus(ps, samples=10_000, seed=gl.DEFAULT_SEED)
    check(6, f"second-power weight modulus {mod:.3f} <= 2 + 1e-9", mod <= 2.0 + 1e-9)


def test_criterion_7_extended_measure_fixed_point():
    sys_d, ws_d = doubling_system()
    ext = gl.build_extension(sys_d)
    res = iterate_hutchinson_measure(ext, ws_d, tol=1e-3, max_iter=200)
    mu = res.measure
    mean = mu.mean()
    prod = mu.moment([1, 1])
    defect = wasserstein(marginal(mu, 0), marginal(mu, 1)).cost
    other_seed = DiscreteMeasure.grid_uniform(ext.domain, 3, blocks=2)
    res2 = iterate_hutchinson_measure(ext, ws_d, seeds=[other_seed], tol=1e-3, max_iter=200)
    seed_gap = wasserstein(mu, res2.measure).cost
    check(
        7,
        f"gap {res.gaps[-1]:.2e} <= 1e-3, moments ({mean[0]:.4f}, {mean[1]:.4f}, "
        f"{prod:.4f}), marginal defect {defect:.2e}, seed gap {seed_gap:.2e}",
        res.converged
        and res.gaps[-1] <= 1e-3
        and abs(mean[0] - 0.5) <= 5e-3
        and abs(mean[1] - 0.5) <= 5e-3
        and abs(prod - 0.25) <= 5e-3
        and defect <= 2e-3
        and seed_gap <= 3e-3,
    )


def _brute_force_min_cost(cost, a_units, b_units, scale):
    rows = [tuple(c) for c in cost]

    @lru_cache(maxsize=None)
    def rec(a, b):
        if sum(a) == 0:
            return 0.0
        best = None
        for i, ra in enumerate(a):
            if ra == 0:
                continue
            for j, rb in enumerate(b):
                if rb == 0:
                    continue
                take = min(ra, rb)
                na = a[:i] + (ra - take,) + a[i + 1:]
                nb = b[:j] + (rb - take,) + b[j + 1:]
                c = rows[i][j] * (take / scale) + rec(na, nb)
                if best is None or c < best:
                    best = c
        return best

    return rec(tuple(a_units), tuple(b_units))


def test_criterion_8_transport_oracle():
    rng = np.random.default_rng(gl.DEFAULT_SEED)
    scale = 64
    worst_flow = 0.0
    for _ in range(100):
        ka, kb = rng.integers(1, 7, size=2)
        ua = rng.multinomial(scale, np.ones(ka) / ka)
        ub = rng.multinomial(scale, np.ones(kb) / kb)
        ua, ub = ua[ua > 0], ub[ub > 0]
        pa = rng.uniform(0.0, 1.0, (len(ua), 2))
        pb = rng.uniform(0.0, 1.0, (len(ub), 2))
        cost = ground_cost_matrix(pa, pb, 2)
        exact = _brute_force_min_cost(cost, ua, ub, scale)
        plan = flow_plan(cost, ua / scale, ub / scale)
        worst_flow = max(worst_flow, abs(plan.cost - exact))
    worst_quant = 0.0
    for _ in range(100):
        ka, kb = rng.integers(2, 50, size=2)
        x, y = rng.uniform(0.0, 1.0, int(ka)), rng.uniform(0.0, 1.0, int(kb))
        wa, wb = rng.dirichlet(np.ones(int(ka))), rng.dirichlet(np.ones(int(kb)))
        qp = quantile_plan(x, wa, y, wb)
        fp = flow_plan(np.abs(x[:, None] - y[None, :]), wa, wb)
        worst_quant = max(worst_quant, abs(qp.cost - fp.cost))
    check(
        8,
        f"flow vs brute force {worst_flow:.2e}, quantile vs flow {worst_quant:.2e}",
        worst_flow <= 1e-9 and worst_quant <= 1e-9,
    )


def test_criterion_9_holonomic_defect_bound():
    sys_d, ws_d = doubling_system()
    orbit = gl.chaos_orbit(sys_d, ws_d, [0.3, 0.7], 12_000, seed=gl.DEFAULT_SEED, burn_in=100)
    rng = np.random.default_rng(gl.DEFAULT_SEED)
    ok = True
    for _ in range(50):
        vals = rng.uniform(-3.0, 3.0, (9, 9))

        def g(w, _v=vals):
            ix = np.clip((w[:, 0] * 8).astype(int), 0, 8)
            iy = np.clip((w[:, 1] * 8).astype(int), 0, 8)
            return _v[ix, iy]

        sup = float(np.abs(vals).max())
        for n in (1, 10, 10_000):
            ok = ok and gl.holonomic_defect(orbit, g, n) <= 2.0 * sup / n
    check(9, "defect <= 2*sup|g|/N for 50 observables, N in {1, 10, 1e4}", ok)


def test_criterion_10_cli_byte_determinism(tmp_path):
    runs = {
        "validate": ["validate", "--system", str(fileio.bundled_system_path("averaging_fde.json"))],
        "attract": [
            "attract", "--system", str(fileio.bundled_system_path("mixed_sign.json")),
            "--eps", str(1 / 128),
        ],
        "chaos": [
            "chaos", "--system", str(fileio.bundled_system_path("doubling.json")),
            "--steps", "5000", "--eps", str(1 / 32), "--tail-start", "100",
        ],
        "ergodic": [
            "ergodic", "--system", str(fileio.bundled_system_path("doubling.json")),
            "--steps", "6000",
        ],
        "measure": [
            "measure", "--system", str(fileio.bundled_system_path("doubling.json")),
            "--tol", "2e-3", "--prune-cell", str(1 / 16),
        ],
        "fde": [
            "fde", "--system", str(fileio.bundled_system_path("averaging_fde_spec.json")),
            "--trials", "20",
        ],
    }
    identical = True
    for name, args in runs.items():
        outs = []
        for tag in ("r1", "r2"):
            out = f"{name}_{tag}"
            r = subprocess.run(
                [sys.executable, "-m", "gifslab"] + args + ["--out", out],
                cwd=tmp_path, capture_output=True, text=True,
            )
            assert r.returncode == 0, f"{name}: {r.stderr}"
            outs.append({p.name: p.read_bytes() for p in sorted((tmp_path / out).iterdir())})
        if outs[0] != outs[1]:
            identical = False
    check(10, "all six commands re-run byte-identically", identical)
