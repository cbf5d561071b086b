"""Nonlinearity and effective-potential layer."""

import json

import numpy as np
import pytest

import kpevans as kp
from kpevans.errors import ConfigError

KDV = kp.NonlinearitySpec.kdv()
MKDV = kp.NonlinearitySpec.mkdv()


def test_eval_f_kdv_values():
    assert kp.eval_f(KDV, 2.0, 0) == pytest.approx(2.0, abs=0)
    assert kp.eval_f(KDV, 3.0, 1) == pytest.approx(3.0, abs=0)   # f'(u) = u
    assert kp.eval_f(KDV, 5.0, 2) == 1.0
    assert kp.eval_f(KDV, 5.0, 3) == 0.0


def test_eval_f_mkdv_second_derivative():
    # f(u) = u^3/3 so f''(u) = 2u
    assert kp.eval_f(MKDV, 2.0, 2) == pytest.approx(4.0, abs=0)


def test_eval_f_rejects_bad_order():
    with pytest.raises(ValueError):
        kp.eval_f(KDV, 1.0, 4)
    with pytest.raises(ValueError):
        kp.eval_f(KDV, 1.0, -1)


def test_eval_V_vanishes_at_zero():
    for params in (kp.WaveParams(0.3, -0.1, 1.7, KDV),
                   kp.WaveParams(-1.2, 0.4, 0.5, MKDV)):
        assert kp.eval_V(params, 0.0, 0) == 0.0


def test_eval_V_kdv_values():
    params = kp.WaveParams(0.0, -0.05, 1.0, KDV)
    # V(u) = u^3/6 - u^2/2: V(3) = 0, V''(2) = 2 - 1 = 1
    assert kp.eval_V(params, 3.0, 0) == pytest.approx(0.0, abs=1e-15)
    assert kp.eval_V(params, 2.0, 2) == pytest.approx(1.0, abs=0)


def test_fd_derivative_consistency():
    """Richardson check: FD of order-n derivative matches order n+1 to O(h^2)."""
    rng = np.random.default_rng(7)
    specs = [KDV, MKDV, kp.NonlinearitySpec.polynomial([0.3, -1.0, 0.25, 0.1])]
    for spec in specs:
        for u in rng.uniform(-2.0, 3.0, 6):
            for order in range(3):
                exact = kp.eval_f(spec, u, order + 1)
                errs = []
                for h in (1e-4, 5e-5):
                    fd = (kp.eval_f(spec, u + h, order)
                          - kp.eval_f(spec, u - h, order)) / (2.0 * h)
                    errs.append(abs(fd - exact))
                # O(h^2): quartering h halves... the error by ~4
                assert errs[0] <= 1e-6 * (1.0 + abs(exact))
                if errs[0] > 1e-11:
                    assert errs[1] <= 0.5 * errs[0]


def test_V_second_derivative_is_fprime_minus_c():
    params = kp.WaveParams(0.2, -0.1, 1.4, MKDV)
    grid = np.linspace(-2.0, 3.0, 41)
    lhs = np.array([kp.eval_V(params, u, 2) for u in grid])
    rhs = np.array([kp.eval_f(MKDV, u, 1) - params.c for u in grid])
    assert np.max(np.abs(lhs - rhs)) == 0.0


def test_eval_V_exact_for_polynomials():
    # expanded coefficients of V for KdV with a=0.3, c=1.2
    params = kp.WaveParams(0.3, 0.0, 1.2, KDV)
    grid = np.linspace(-3.0, 3.0, 25)
    expected = grid ** 3 / 6.0 - 0.3 * grid - 0.6 * grid ** 2
    got = np.array([kp.eval_V(params, u, 0) for u in grid])
    assert np.max(np.abs(got - expected)) <= 1e-14 * np.max(1.0 + np.abs(expected))


def test_wave_params_validation():
    with pytest.raises(ConfigError):
        kp.WaveParams(0.0, 0.0, -1.0, KDV)
    with pytest.raises(ConfigError):
        kp.WaveParams(0.0, 0.0, 1.0, KDV, sigma=2)


def test_nonlinearity_json_round_trip():
    for spec in (KDV, kp.NonlinearitySpec.polynomial([0.0, 0.0, 0.5])):
        back = kp.NonlinearitySpec.from_json_dict(json.loads(spec.to_json()))
        assert np.allclose(back.f_coeffs, spec.f_coeffs)
    d = json.loads(KDV.to_json())
    assert d == {"kind": "power", "coef": 0.5, "exponent": 2}


def test_power_and_poly_agree():
    poly = kp.NonlinearitySpec.polynomial([0.0, 0.0, 0.5])
    for u in (-1.3, 0.0, 2.7):
        for order in range(4):
            assert kp.eval_f(poly, u, order) == kp.eval_f(KDV, u, order)


def test_nonlinearity_rejects_bad_input():
    with pytest.raises(ConfigError):
        kp.NonlinearitySpec.power(1.0, 0)
    with pytest.raises(ConfigError):
        kp.NonlinearitySpec.from_json_dict({"kind": "exp"})
    with pytest.raises(ConfigError):
        kp.NonlinearitySpec.from_json_dict({"kind": "power", "coef": 1.0,
                                            "exponent": 2, "junk": 1})
