"""Shared fixtures: the standard test waves, built once per session."""

import numpy as np
import pytest

import kpevans as kp

# canonical KdV test wave: near-separatrix well around u = 2
KDV_A, KDV_E, KDV_C = 0.0, -0.05, 1.0

# mKdV test waves at a = 0: dnoidal branch (E < 0, one of two wells) and
# cnoidal branch (E > 0, single symmetric well)
DNOIDAL_E = -0.5
CNOIDAL_E = 0.3
DNOIDAL_HINT = (0.5, 3.0)


@pytest.fixture(scope="session")
def kdv_params():
    return kp.WaveParams(KDV_A, KDV_E, KDV_C, kp.NonlinearitySpec.kdv(), sigma=1)


@pytest.fixture(scope="session")
def kdv_profile(kdv_params):
    return kp.integrate_profile(kdv_params)


@pytest.fixture(scope="session")
def kdv_basis(kdv_profile):
    return kp.phi_solution(kdv_profile, kp.variational_solutions(kdv_profile))


@pytest.fixture(scope="session")
def kdv_wmatrix(kdv_profile, kdv_basis):
    return kp.build_W(kdv_profile, kdv_basis)


@pytest.fixture(scope="session")
def kdv_grads(kdv_params):
    return kp.gradients(kdv_params)


@pytest.fixture(scope="session")
def kdv_invariants(kdv_params):
    return kp.compute_invariants(kdv_params)


@pytest.fixture(scope="session")
def dnoidal_params():
    return kp.WaveParams(0.0, DNOIDAL_E, 1.0, kp.NonlinearitySpec.mkdv(), sigma=1)


@pytest.fixture(scope="session")
def dnoidal_profile(dnoidal_params):
    return kp.integrate_profile(dnoidal_params, bracket_hint=DNOIDAL_HINT)


@pytest.fixture(scope="session")
def dnoidal_grads(dnoidal_params):
    return kp.gradients(dnoidal_params, bracket_hint=DNOIDAL_HINT)


@pytest.fixture(scope="session")
def cnoidal_mkdv_params():
    return kp.WaveParams(0.0, CNOIDAL_E, 1.0, kp.NonlinearitySpec.mkdv(), sigma=-1)


@pytest.fixture(scope="session")
def cnoidal_mkdv_profile(cnoidal_mkdv_params):
    return kp.integrate_profile(cnoidal_mkdv_params)


@pytest.fixture(scope="session")
def cnoidal_mkdv_grads(cnoidal_mkdv_params):
    return kp.gradients(cnoidal_mkdv_params)


def cardano_real_roots(p3, p2, p1, p0):
    """Closed-form real roots of p3 u^3 + p2 u^2 + p1 u + p0 (oracle).

    Trigonometric method for the three-real-root case, Cardano otherwise;
    independent of the production companion-matrix path.
    """
    b, c, d = p2 / p3, p1 / p3, p0 / p3
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    shift = -b / 3.0
    disc = -(4.0 * p ** 3 + 27.0 * q * q)
    if disc > 0:
        m = 2.0 * np.sqrt(-p / 3.0)
        theta = np.arccos(np.clip(3.0 * q / (p * m), -1.0, 1.0)) / 3.0
        return sorted(shift + m * np.cos(theta - 2.0 * np.pi * k / 3.0)
                      for k in range(3))
    # one real root
    t = np.cbrt(-q / 2.0 + np.sqrt(q * q / 4.0 + p ** 3 / 27.0)) \
        + np.cbrt(-q / 2.0 - np.sqrt(q * q / 4.0 + p ** 3 / 27.0))
    return [shift + t]
