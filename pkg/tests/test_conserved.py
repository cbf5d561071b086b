"""Conserved quantities, gradients, and the {T, M}_{a,E} Jacobian."""

import numpy as np
import pytest

import kpevans as kp
from kpevans.conserved import cubic_discriminant, invariants_csv_row
from kpevans.errors import NotKdV

KDV = kp.NonlinearitySpec.kdv()
MKDV = kp.NonlinearitySpec.mkdv()

# frozen regression values for the KdV test wave (a=0, E=-0.05, c=1),
# fixed by the dual-method oracle: regularized quadrature vs dense-grid
# integration of the ODE profile agreed to ~5e-14 relative
FROZEN = {
    "T": 8.696063307048224,
    "M": 12.09443442424673,
    "P": 24.18886884849346,
    "H": -7.343621287618518,
    "jac": 57.7230547681213,
}

KDV_POINTS = [(0.0, -0.05, 1.0), (0.0, -0.2, 1.0), (0.0, -0.4, 1.0),
              (0.1, -0.1, 1.0), (0.0, -0.1, 1.3)]


def test_frozen_invariants(kdv_invariants):
    for key in ("T", "M", "P", "H"):
        assert getattr(kdv_invariants, key) == pytest.approx(FROZEN[key], rel=1e-11)


def test_invariants_match_profile_integrals(kdv_profile, kdv_invariants):
    pinv = kp.profile_invariants(kdv_profile)
    assert pinv.M == pytest.approx(kdv_invariants.M, rel=1e-8)
    assert pinv.P == pytest.approx(kdv_invariants.P, rel=1e-8)
    assert pinv.H == pytest.approx(kdv_invariants.H, rel=1e-8)


def test_momentum_identity_from_profile_ode(kdv_invariants, kdv_params):
    # integrating u'' = -V'(u) over a period gives P = 2cM + 2aT exactly
    lhs = kdv_invariants.P
    rhs = 2.0 * kdv_params.c * kdv_invariants.M + 2.0 * kdv_params.a * kdv_invariants.T
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_harmonic_limit_mean_value():
    # E just above the well bottom: the profile is nearly the constant u* = 2
    inv = kp.compute_invariants(kp.WaveParams(0.0, -2.0 / 3.0 + 1e-6, 1.0, KDV))
    assert inv.M / inv.T == pytest.approx(2.0, abs=1e-3)


def test_gradient_identity(kdv_params, kdv_grads):
    assert kp.gradient_identity_residual(kdv_params, kdv_grads) <= 1e-6
    # a second point with a != 0
    params = kp.WaveParams(0.1, -0.05, 1.0, KDV)
    grads = kp.gradients(params)
    assert kp.gradient_identity_residual(params, grads) <= 1e-6


def test_dT_dE_positive_toward_separatrix(kdv_grads):
    # oracle: the period sweep in test_wave shows T increasing with E
    assert kdv_grads.dT[1] > 0


def test_richardson_step_consistency(kdv_params):
    g1 = kp.gradients(kdv_params, h_rel=1e-5)
    g2 = kp.gradients(kdv_params, h_rel=2e-5)
    for a, b in ((g1.dT, g2.dT), (g1.dM, g2.dM)):
        assert np.max(np.abs(a - b)) <= 1e-7 * (1.0 + np.max(np.abs(a)))


def test_jacobian_frozen_and_deterministic(kdv_params, kdv_grads):
    jac = kp.jacobian_TM(kdv_params, kdv_grads)
    assert jac == pytest.approx(FROZEN["jac"], rel=1e-8)
    assert kp.jacobian_TM(kdv_params, kdv_grads) == jac


def test_kdv_jacobian_positive_everywhere():
    for a, E, c in KDV_POINTS:
        params = kp.WaveParams(a, E, c, KDV)
        assert kp.jacobian_TM(params) > 0


def test_closed_form_matches_fd():
    for a, E, c in KDV_POINTS:
        params = kp.WaveParams(a, E, c, KDV)
        fd = kp.jacobian_TM(params)
        cf = kp.kdv_jacobian_closed_form(params)
        assert cf == pytest.approx(fd, rel=1e-5)
        assert cf > 0


def test_vprime_at_mean_negative():
    # Jensen on the strictly convex V': V'(M/T) < (1/T) int V'(u) dx = 0
    for a, E, c in KDV_POINTS:
        params = kp.WaveParams(a, E, c, KDV)
        inv = kp.compute_invariants(params)
        assert kp.eval_V(params, inv.M / inv.T, 1) < 0


def test_discriminant_sign_convention():
    # disc > 0 iff three distinct real roots, for (u-r1)(u-r2)(u-r3)
    def from_roots(r1, r2, r3):
        return np.array([-r1 * r2 * r3, r1 * r2 + r1 * r3 + r2 * r3,
                         -(r1 + r2 + r3), 1.0])

    assert cubic_discriminant(from_roots(-1.0, 0.5, 2.0)) > 0
    assert cubic_discriminant(from_roots(1.0, 1.0, 2.0)) == pytest.approx(0.0, abs=1e-14)
    # complex pair: u^3 + u = u(u^2+1)
    assert cubic_discriminant(np.array([0.0, 1.0, 0.0, 1.0])) < 0
    # scaling invariance used by the closed form: disc(s*p) = s^4 disc(p)
    p = from_roots(-0.3, 0.4, 2.2)
    assert cubic_discriminant(-6.0 * p) == pytest.approx(
        1296.0 * cubic_discriminant(p), rel=1e-12)


def test_discriminant_positive_for_periodic_kdv():
    for a, E, c in KDV_POINTS:
        params = kp.WaveParams(a, E, c, KDV)
        assert cubic_discriminant(params.energy_poly()) > 0


def test_closed_form_rejects_non_kdv(dnoidal_params):
    with pytest.raises(NotKdV):
        kp.kdv_jacobian_closed_form(dnoidal_params)


def test_mkdv_branch_signs(dnoidal_params, dnoidal_grads,
                           cnoidal_mkdv_params, cnoidal_mkdv_grads):
    assert kp.jacobian_TM(dnoidal_params, dnoidal_grads) > 0
    assert kp.jacobian_TM(cnoidal_mkdv_params, cnoidal_mkdv_grads) < 0


def test_jensen_margin_positive(kdv_invariants, dnoidal_params,
                                cnoidal_mkdv_params):
    assert kdv_invariants.jensen_margin() > 0
    for params, hint in ((dnoidal_params, (0.5, 3.0)), (cnoidal_mkdv_params, None)):
        inv = kp.compute_invariants(params, bracket_hint=hint)
        assert inv.jensen_margin() > 0


def test_cnoidal_mkdv_mass_vanishes(cnoidal_mkdv_params):
    # odd symmetric profile: the mass integral cancels exactly
    inv = kp.compute_invariants(cnoidal_mkdv_params)
    assert abs(inv.M) <= 1e-12 * inv.P


def test_csv_row_format(kdv_params, kdv_invariants):
    row = invariants_csv_row(kdv_params, kdv_invariants, FROZEN["jac"])
    fields = row.split(",")
    assert len(fields) == 8
    assert float(fields[3]) == pytest.approx(FROZEN["T"], rel=1e-15)


def test_stencil_leaves_region():
    from kpevans.errors import StencilLeftRegion
    from kpevans.wave import turning_points_from_seed
    # seeds from the dnoidal well, but E below the well bottom: no orbit
    params = kp.WaveParams(0.0, -1.0, 1.0, MKDV)
    with pytest.raises(StencilLeftRegion):
        turning_points_from_seed(params, (1.13, 2.17))
