import pytest

import gifslab as gl
from gifslab.fde import (
    CoefficientOracle,
    coefficients,
    closed_form_orbit,
    compile_fde,
    initial_coefficients,
    iterate_fde,
)
from gifslab.gallery import averaging_fde_spec, unstable_fde_spec


def test_coefficients_series():
    assert coefficients(9) == [1, 1, 5, 9, 29, 65, 181, 441, 1165]
    assert coefficients(1) == [1]


def test_coefficients_recurrence_exact():
    b = coefficients(40)
    for n in range(1, 39):
        assert b[n + 1] - b[n] - 4 * b[n - 1] == 0
    assert b[4] == b[3] + 4 * b[2] == 29


def test_closed_form_coefficients():
    orc = CoefficientOracle(32)
    assert abs(orc.closed_form(8) - 1165) <= 1e-6
    for n in range(31):
        assert abs(orc.closed_form(n) - orc.b[n]) <= 1e-9 * orc.b[n]
    # roots quadruple to the reported magnitudes
    r1, r2 = orc.roots
    assert 4 * r1 == pytest.approx(-2.5615528128)
    assert 4 * r2 == pytest.approx(1.5615528128)


def test_initial_coefficient_decay():
    assert initial_coefficients(20)[0] < 1e-3
    vals = [abs(initial_coefficients(n)[0]) for n in range(2, 25)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_compile_averaging_fde():
    sys_ = compile_fde(averaging_fde_spec())
    assert sys_.n == 2 and sys_.degree == 2
    assert gl.eval_map(sys_, 0, [0.2, 0.6])[0] == pytest.approx(0.2, abs=1e-15)
    assert gl.eval_map(sys_, 1, [0.2, 0.6])[0] == pytest.approx(0.7, abs=1e-15)
    assert sys_.contraction_factor == pytest.approx(0.5)
    assert sys_.certified


def test_compile_unstable_fde_rejected_later():
    sys_ = compile_fde(unstable_fde_spec(), lips=[(1.0, 1.0), (1.0, 1.0)])
    assert sys_.contraction_factor == pytest.approx(2.0)
    rep = gl.validate_system(sys_, samples=200, seed=0)
    assert not rep.e1_ok
    with pytest.raises(gl.E1Violation):
        gl.build_extension(sys_)


def test_compile_constant_rhs():
    spec = gl.FdeSpec(
        order=2, alphabet=(0,), rhs=lambda y0, y1, a: 0.25, domain=gl.Box.unit(1)
    )
    sys_ = compile_fde(spec)
    assert gl.eval_map(sys_, 0, [0.9, 0.1])[0] == 0.25
    assert sys_.contraction_factor <= 1e-9


def test_estimated_lips_flagged_uncertified():
    spec = averaging_fde_spec()
    nonlinear = gl.FdeSpec(
        order=2,
        alphabet=spec.alphabet,
        rhs=lambda y0, y1, a: 0.25 * y0 + 0.25 * y1 + 0.5 * a,
        domain=spec.domain,
    )
    sys_ = compile_fde(nonlinear)
    assert not sys_.certified
    assert sys_.contraction_factor == pytest.approx(0.5, abs=1e-6)


def test_closed_form_base_case():
    # n = 0 collapses to the map itself
    for x0, x1, a in [(0.0, 0.0, 0), (1.0, 0.0, 1), (0.3, 0.9, 1)]:
        assert closed_form_orbit(x0, x1, [a], 0) == pytest.approx(
            x0 / 4 + x1 / 4 + a / 2, abs=1e-15
        )


def test_closed_form_matches_iteration(rng):
    spec = averaging_fde_spec()
    worst = 0.0
    for _ in range(1000):
        x0, x1 = rng.uniform(0, 1, 2)
        controls = rng.integers(0, 2, 21).tolist()
        path = iterate_fde(spec, [x0, x1], controls)
        for n in range(21):
            worst = max(worst, abs(closed_form_orbit(x0, x1, controls, n) - path[n + 2]))
    assert worst < 1e-10
