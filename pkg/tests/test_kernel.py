"""Kernel quadruple (u_x, u_a, u_E, phi), W matrix, and inverse-column checks."""

import numpy as np
import pytest

import kpevans as kp
from kpevans.kernel import (cross_identity_residual, displayed_deltaW,
                            predicted_deltaW, predicted_W0)

KERNEL_TOL = 1e-6


def test_kernel_relation_residuals(kdv_basis):
    res = kp.kernel_residuals(kdv_basis)
    for name in ("ux", "uE", "ua", "phi"):
        assert res[name] <= KERNEL_TOL


def test_translation_mode_boundary_values(kdv_basis):
    assert kdv_basis.ux[0] == 0.0
    assert abs(kdv_basis.ux[-1]) <= 1e-9


def test_ux_matches_profile_derivative(kdv_profile, kdv_basis):
    # ODE-propagated translation mode vs the profile interpolant derivative
    diff = kdv_basis.ux - kdv_profile.ux(kdv_basis.grid)
    assert np.max(np.abs(diff)) <= 1e-9 * (1.0 + np.max(np.abs(kdv_basis.ux)))


def test_phi_initial_data(kdv_basis):
    # fourth column of W(0,0,0) is (0, 0, 0, -1)
    assert kdv_basis.phi[0] == 0.0
    assert kdv_basis.phip[0] == 0.0
    assert kdv_basis.second_derivative("phi")[0] == pytest.approx(0.0, abs=1e-12)
    assert kdv_basis.third_derivative("phi")[0] == pytest.approx(-1.0, abs=1e-10)


def test_wronskian_is_one(kdv_basis):
    assert np.max(np.abs(kdv_basis.wronskian_ux_uE() - 1.0)) <= 1e-10


def test_turning_point_derivative_identities(kdv_params, kdv_profile, kdv_basis):
    """V'(u_-) du_-/dE = 1 and V'(u_-) du_-/da = u_- against FD of u_-."""
    Vm = kp.eval_V(kdv_params, kdv_profile.u_minus, 1)
    h = 1e-6
    from dataclasses import replace
    from kpevans.wave import turning_points_from_seed
    seed = (kdv_profile.u_minus, kdv_profile.u_plus)

    def u_minus_at(**kw):
        return turning_points_from_seed(replace(kdv_params, **kw), seed)[0]

    fd_dE = (u_minus_at(E=kdv_params.E + h) - u_minus_at(E=kdv_params.E - h)) / (2 * h)
    fd_da = (u_minus_at(a=kdv_params.a + h) - u_minus_at(a=kdv_params.a - h)) / (2 * h)
    assert Vm * fd_dE == pytest.approx(1.0, abs=1e-8)
    assert Vm * fd_da == pytest.approx(kdv_profile.u_minus, abs=1e-8)
    # and the basis uses exactly these derivatives as initial data
    assert kdv_basis.du_minus_dE == pytest.approx(fd_dE, rel=1e-7)
    assert kdv_basis.du_minus_da == pytest.approx(fd_da, rel=1e-7)


def test_ua_against_two_profile_fd(kdv_params, kdv_profile, kdv_basis):
    """Phase-locked finite difference of neighboring profiles (h = 1e-5)."""
    from dataclasses import replace
    h = 1e-5
    plus = kp.integrate_profile(replace(kdv_params, a=kdv_params.a + h))
    minus = kp.integrate_profile(replace(kdv_params, a=kdv_params.a - h))
    x = kdv_basis.grid[kdv_basis.grid <= 0.9 * min(plus.period, minus.period)]
    fd = (plus.u(x) - minus.u(x)) / (2.0 * h)
    ua = kdv_basis.ua[: len(x)]
    assert np.max(np.abs(fd - ua)) <= 1e-6 * (1.0 + np.max(np.abs(ua)))


def test_uE_against_two_profile_fd(kdv_params, kdv_basis):
    from dataclasses import replace
    h = 1e-6
    plus = kp.integrate_profile(replace(kdv_params, E=kdv_params.E + h))
    minus = kp.integrate_profile(replace(kdv_params, E=kdv_params.E - h))
    x = kdv_basis.grid[kdv_basis.grid <= 0.9 * min(plus.period, minus.period)]
    fd = (plus.u(x) - minus.u(x)) / (2.0 * h)
    uE = kdv_basis.uE[: len(x)]
    assert np.max(np.abs(fd - uE)) <= 1e-4 * (1.0 + np.max(np.abs(uE)))


def test_gram_determinant_nonzero(kdv_basis):
    T = kdv_basis.grid[-1]
    idx = [np.argmin(np.abs(kdv_basis.grid - f * T)) for f in (0.123, 0.37, 0.61, 0.83)]
    G = np.array([[getattr(kdv_basis, n)[i] for n in ("ux", "ua", "uE", "phi")]
                  for i in idx])
    norms = np.prod([np.linalg.norm(G[:, j]) for j in range(4)])
    assert abs(np.linalg.det(G)) > 1e-8 * norms


def test_det_W_is_one(kdv_wmatrix):
    T = kdv_wmatrix.grid[-1]
    dets = kdv_wmatrix.det_on_grid()
    for frac in (0.0, 0.25, 0.5, 1.0):
        i = np.argmin(np.abs(kdv_wmatrix.grid - frac * T))
        assert dets[i] == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(dets - 1.0)) <= 1e-8


def test_W0_matches_display(kdv_profile, kdv_basis, kdv_wmatrix):
    pred = predicted_W0(kdv_profile, kdv_basis)
    assert np.max(np.abs(kdv_wmatrix.W0 - pred)) <= 1e-12


def test_deltaW_first_column_vanishes(kdv_wmatrix):
    assert np.max(np.abs(kdv_wmatrix.deltaW[:, 0])) <= 1e-9


def test_deltaW_entry_22(kdv_params, kdv_profile, kdv_wmatrix, kdv_grads):
    Vm = kp.eval_V(kdv_params, kdv_profile.u_minus, 1)
    assert kdv_wmatrix.deltaW[1, 1] == pytest.approx(Vm * kdv_grads.dT[0], rel=1e-6)


def test_deltaW_matches_display(kdv_profile, kdv_basis, kdv_wmatrix, kdv_grads):
    pred = predicted_deltaW(kdv_profile, kdv_basis, kdv_grads.dT[0], kdv_grads.dT[1])
    scale = np.max(np.abs(pred))
    assert np.max(np.abs(kdv_wmatrix.deltaW - pred)) <= 1e-6 * scale
    # rows 1 and 3 of columns 2-3 vanish; the (a, E) block is rank one
    assert np.max(np.abs(pred[np.ix_([0, 2], [1, 2])])) == 0.0
    block = pred[np.ix_([1, 3], [1, 2])]
    assert abs(np.linalg.det(block)) <= 1e-12 * np.max(np.abs(block)) ** 2


def test_deltaW_column_reduction(kdv_profile, kdv_basis, kdv_grads):
    """The displayed variant differs by a column operation only."""
    pred = predicted_deltaW(kdv_profile, kdv_basis, kdv_grads.dT[0], kdv_grads.dT[1])
    disp = displayed_deltaW(kdv_profile, kdv_basis, kdv_grads.dT[0], kdv_grads.dT[1])
    Ix = kdv_basis.I_sx[-1]
    assert np.allclose(disp[:, 3], pred[:, 3] + Ix * pred[:, 2], rtol=0, atol=1e-12)
    assert np.allclose(disp[:, :3], pred[:, :3], rtol=0, atol=0)


def test_inverse_column_identity(kdv_wmatrix, kdv_basis):
    rep = kp.verify_inverse_column(kdv_wmatrix, kdv_basis)
    assert rep.sup_identity <= 1e-7
    assert rep.sup_vs_lu <= 1e-7
    assert rep.sup_intermediate <= 1e-7
    # at x = 0 the claimed vector is (0, 0, 0, -1); W(0) e4-column is too
    W0 = kdv_wmatrix.W0
    assert np.allclose(W0 @ np.array([0.0, 0.0, 0.0, -1.0]),
                       np.array([0.0, 0.0, 0.0, 1.0]), atol=1e-12)
    # first component at T equals the accumulated double integral of u_E
    assert rep.first_component_at_T == pytest.approx(-kdv_basis.II_E[-1], abs=0)


def test_cross_wronskian_identity(kdv_basis):
    # u_a u_Exx - u_axx u_E = -u_E, with FD second derivatives
    assert cross_identity_residual(kdv_basis) <= 1e-7 * (
        1.0 + np.max(np.abs(kdv_basis.uE)))


def test_debug_csv_dump(kdv_basis, tmp_path):
    from kpevans.kernel import write_debug_csv
    path = tmp_path / "kernel_debug.csv"
    write_debug_csv(kdv_basis, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("x,ux,ua,uE,phi,res_")
    assert len(lines) == len(kdv_basis.grid) + 1
