"""High/low frequency limits of D(mu, k, 1) and the orientation index.

Two one-sided limits combine into the instability test:

* high frequency: for k != 0, sgn D(mu, k, 1) -> sgn(sigma) as mu -> +inf.
  The mechanism is delicate: after rescaling x by |mu|^{1/3} the transverse
  term sits two orders down, and only the averaging of the periodic
  coefficients (int A1_x = int A1 A1_x = 0 over a period) lets it set the
  sign.  verify_block_reduction() checks the whole reduction chain
  numerically: the constant diagonalization Q, the structure of
  B~ = Q^{-1} B Q, the near-triangularity after the periodic shear S, and
  the averaging cancellations.

* low frequency: D(0, k, 1) = -(P T - M^2) {T, M}_{a,E} (sigma k^2)^2 +
  O(k^6), fitted here from Evans samples on a small-k ladder and compared
  against the prediction assembled from the conserved quantities.

If the two signs disagree -- equivalently sigma * {T, M}_{a,E} > 0, since
P T - M^2 > 0 -- the Evans function has a real positive root and the wave
is transversely unstable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import conserved
from .errors import FitIllConditioned, HighFreqInconclusive, StructureViolation
from .evans import evans
from .model import WaveParams, _poly_derivative, eval_V, polyval_ascending
from .quadrature import gauss_legendre
from .wave import DEFAULT_ODE_TOL, DEFAULT_QUAD_TOL, WaveProfile

LAMBDA_ROT = 0.5 * (1.0 + 1j * math.sqrt(3.0))  # e^{i pi/3}

#: constant diagonalizer of the principal part H0 (columns: eigenvectors
#: for eigenvalues -1, lambda, lambda*, 0)
Q_MATRIX = np.array([
    [-1.0, -1.0, -1.0, 1.0],
    [1.0, -LAMBDA_ROT, -np.conj(LAMBDA_ROT), 0.0],
    [-1.0, np.conj(LAMBDA_ROT), LAMBDA_ROT, 0.0],
    [1.0, 1.0, 1.0, 0.0],
], dtype=complex)

H0_MATRIX = np.array([
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, -1.0, 0.0, 0.0],
])

D4_MATRIX = np.diag([-1.0 + 0j, LAMBDA_ROT, np.conj(LAMBDA_ROT), 0.0])


# ----------------------------------------------------------------------
# high-frequency sign
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class HighFreqReport:
    k: float
    probes: tuple            # (mu, sign, log|D|)
    onset_mu: float          # first mu of the trailing constant-sign run
    verdict: int             # +1 / -1, or 0 when inconclusive
    fit_slope: float         # advisory: growth-rate slope, expect ~ 1
    fit_intercept: float

    def to_json_dict(self) -> dict:
        return {"k": self.k,
                "probes": [{"mu": m, "sign": s, "log_abs_D": la}
                           for m, s, la in self.probes],
                "onset_mu": self.onset_mu, "verdict": self.verdict,
                "fit_slope": self.fit_slope, "fit_intercept": self.fit_intercept}


def high_freq_sign(profile: WaveProfile, k: float, mu_list,
                   ode_tol: float = DEFAULT_ODE_TOL, strict: bool = False) -> HighFreqReport:
    """Probe sgn D(mu, k, 1) along increasing positive mu.

    Conclusive once the last three probes agree; evenness in mu justifies
    probing mu > 0 only.  The advisory magnitude fit regresses
    log|D| - log(k^2/mu) on mu^{1/3} T and should produce a slope near the
    unstable-pair growth rate 1; it never gates the verdict.
    """
    if k == 0.0:
        raise ValueError("high-frequency limit requires k != 0")
    mu_list = [float(m) for m in mu_list]
    if any(m <= 0 for m in mu_list) or any(b <= a for a, b in zip(mu_list, mu_list[1:])):
        raise ValueError("mu_list must be positive and increasing")
    probes = []
    for mu in mu_list:
        ev = evans(profile, mu, k, 1.0, ode_tol=ode_tol)
        probes.append((mu, ev.sign(), ev.log_abs))

    signs = [s for _, s, _ in probes]
    verdict = 0
    onset = math.nan
    if len(signs) >= 3 and signs[-1] != 0 and signs[-3:] == [signs[-1]] * 3:
        verdict = signs[-1]
        onset = probes[-1][0]
        for mu, s, _ in reversed(probes):
            if s != verdict:
                break
            onset = mu
    if verdict == 0 and strict:
        raise HighFreqInconclusive(
            f"sign still oscillating at mu={mu_list[-1]:g}: {signs}")

    T = profile.period
    xs = np.array([m ** (1.0 / 3.0) * T for m, _, _ in probes])
    ys = np.array([la - math.log(k * k / m) for m, _, la in probes])
    A = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return HighFreqReport(k=k, probes=tuple(probes), onset_mu=onset,
                          verdict=verdict, fit_slope=float(coef[0]),
                          fit_intercept=float(coef[1]))


# ----------------------------------------------------------------------
# block reduction verifier (structure behind the high-frequency limit)
# ----------------------------------------------------------------------

def _coefficient_functions(profile: WaveProfile):
    """Original-x coefficient samples A1 = -2 f''(u) u_x, A2 = c - f'(u), etc.

    Vectorized over x; returns (A1, A2, A1_x, A1_xx, A2_x).
    """
    par = profile.params
    f = par.nonlinearity.f_coeffs
    d1 = _poly_derivative(f, 1)
    d2 = _poly_derivative(f, 2)
    d3 = _poly_derivative(f, 3)
    d4 = _poly_derivative(f, 4)

    def fields(x):
        u = profile.u(x)
        ux = profile.ux(x)
        uxx = -eval_V(par, u, 1)
        uxxx = -eval_V(par, u, 2) * ux
        f2 = polyval_ascending(d2, u)
        f3 = polyval_ascending(d3, u)
        f4 = polyval_ascending(d4, u)
        A1 = -2.0 * f2 * ux
        A2 = par.c - polyval_ascending(d1, u)
        A1x = -2.0 * (f3 * ux * ux + f2 * uxx)
        A1xx = -2.0 * (f4 * ux ** 3 + 3.0 * f3 * ux * uxx + f2 * uxxx)
        A2x = -f2 * ux
        return A1, A2, A1x, A1xx, A2x

    return fields


@dataclass(frozen=True)
class BlockReductionReport:
    mu: float
    k: float
    eps: float
    q_diag_error: float
    btilde_numeric_error: float
    last_column_error: float
    upper_left_sup: float
    upper_left_bound: float
    e44_residual: float
    e44_bound: float
    lower_left_sup: float
    lower_left_bound: float
    lower_left_full_sup: float   # including the S' term; the tracking delta
    avg_A1x: float
    avg_A1A1x: float
    grid_tilde: np.ndarray
    system_tilde: np.ndarray     # full transformed coefficient matrices

    def to_json_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "mu", "k", "eps", "q_diag_error", "btilde_numeric_error",
            "last_column_error", "upper_left_sup", "upper_left_bound",
            "e44_residual", "e44_bound", "lower_left_sup", "lower_left_bound",
            "lower_left_full_sup", "avg_A1x", "avg_A1A1x")}
        return d


def verify_block_reduction(profile: WaveProfile, mu: float, k: float,
                           n_samples: int = 768, raise_on_violation: bool = True
                           ) -> BlockReductionReport:
    """Numerically certify the block structure of the rescaled system.

    Conventions: eps = |mu|^{-2/3}; in the stretched variable x~ =
    |mu|^{1/3} x the coefficient functions contract, so A1 and A1_x pick up
    factors eps^{1/2} and eps against their original-x values.  The shear

        S = I + e4 (sigma1, sigma2, sigma3, 0)

    uses the exact first-order cancellation sigma1 = -v1, sigma2 = v2/rot,
    sigma3 = v3/rot* (v = row vector of Q^{-1} B Q), which is the displayed
    periodic shear with the rotation phases fixed so the O(eps) lower-left
    terms cancel against the diagonal commutator.  The reported "S-conjugated"
    error matrix is E = S^{-1} (D4 + B~) S - D4.
    """
    if mu < 25.0:
        raise ValueError("block reduction verifier expects mu >= 25")
    rot = LAMBDA_ROT
    Qinv = np.linalg.inv(Q_MATRIX)
    q_diag_error = float(np.max(np.abs(Qinv @ H0_MATRIX @ Q_MATRIX - D4_MATRIX)))

    s = mu ** (-1.0 / 3.0)
    eps = s * s
    T_t = profile.period / s
    sigma = profile.params.sigma
    fields = _coefficient_functions(profile)

    grid_t = np.linspace(0.0, T_t, n_samples + 1)
    w = np.array([1 / 3, 1 / 3, 1 / 3, 1.0], dtype=complex)
    e44_pred_err = 0.0
    btilde_numeric_error = 0.0
    last_column_error = 0.0
    upper_left_sup = 0.0
    lower_left_sup = 0.0
    lower_left_full_sup = 0.0
    supA1 = supA2 = supA1x = 0.0
    system = np.empty((len(grid_t), 4, 4), dtype=complex)

    for idx, xt in enumerate(grid_t):
        x = xt * s
        A1, A2, A1x, A1xx, A2x = fields(x)
        supA1, supA2 = max(supA1, abs(A1)), max(supA2, abs(A2))
        supA1x = max(supA1x, abs(A1x))
        At1 = s * A1            # x~-convention coefficients
        At1x = eps * A1x
        chi = 0.5 * At1x * eps - sigma * k * k * eps * eps
        b = np.array([chi, At1 * eps, A2 * eps, 0.0], dtype=complex)
        v = Q_MATRIX.T @ b
        Bt = np.outer(w, v)

        B4 = np.zeros((4, 4), dtype=complex)
        B4[3, :] = b
        Bt_num = Qinv @ B4 @ Q_MATRIX
        btilde_numeric_error = max(btilde_numeric_error,
                                   float(np.max(np.abs(Bt_num - Bt))))
        last_column_error = max(last_column_error,
                                float(np.max(np.abs(Bt_num[:, 3] - chi * w))))
        upper_left_sup = max(upper_left_sup, float(np.max(np.abs(Bt[:3, :3]))))

        sig = np.array([-v[0], v[1] / rot, v[2] / np.conj(rot)])
        S = np.eye(4, dtype=complex)
        S[3, :3] = sig
        E = np.linalg.solve(S, (D4_MATRIX + Bt) @ S) - D4_MATRIX
        e44_pred = 0.5 * At1x * eps + eps * eps * (0.5 * At1 * At1x - sigma * k * k)
        e44_pred_err = max(e44_pred_err, abs(E[3, 3] - e44_pred))
        lower_left_sup = max(lower_left_sup, float(np.max(np.abs(E[3, :3]))))

        # full transformed system, S' included: S^{-1} ((D4 + B~) S - dS/dx~)
        dsig_dx = np.array([
            0.5 * A1xx * eps * eps - s * A1x * eps + A2x * eps,
            (-0.5 * A1xx * eps * eps - rot * s * A1x * eps
             + np.conj(rot) * A2x * eps) / rot,
            (-0.5 * A1xx * eps * eps - np.conj(rot) * s * A1x * eps
             + rot * A2x * eps) / np.conj(rot),
        ])
        Sp = np.zeros((4, 4), dtype=complex)
        Sp[3, :3] = s * dsig_dx
        A_full = np.linalg.solve(S, (D4_MATRIX + Bt) @ S - Sp)
        system[idx] = A_full
        lower_left_full_sup = max(lower_left_full_sup,
                                  float(np.max(np.abs(A_full[3, :3]))))

    # averaging cancellations over one original period: both integrands are
    # exact x-derivatives of periodic quantities, so the integrals vanish
    T = profile.period
    avg_A1x = gauss_legendre(lambda x: fields(x)[2], 0.0, T, 2048)
    avg_A1A1x = gauss_legendre(lambda x: fields(x)[0] * fields(x)[2], 0.0, T, 2048)

    upper_left_bound = 10.0 * eps * (supA2 + s * supA1 + k * k * eps)
    e44_bound = 10.0 * eps ** 2.5 * (1.0 + k * k * supA1 + supA1x)
    lower_left_bound = 10.0 * eps ** 3 * (1.0 + supA1) * (1.0 + supA2)

    report = BlockReductionReport(
        mu=mu, k=k, eps=eps, q_diag_error=q_diag_error,
        btilde_numeric_error=btilde_numeric_error,
        last_column_error=last_column_error,
        upper_left_sup=upper_left_sup, upper_left_bound=upper_left_bound,
        e44_residual=e44_pred_err, e44_bound=e44_bound,
        lower_left_sup=lower_left_sup, lower_left_bound=lower_left_bound,
        lower_left_full_sup=lower_left_full_sup,
        avg_A1x=avg_A1x, avg_A1A1x=avg_A1A1x,
        grid_tilde=grid_t, system_tilde=system)

    if raise_on_violation:
        checks = [
            ("Q diagonalization", q_diag_error, 1e-14),
            ("upper-left block", upper_left_sup, upper_left_bound),
            ("(4,4) entry", e44_pred_err, e44_bound),
            ("lower-left block", lower_left_sup, lower_left_bound),
        ]
        for name, val, bound in checks:
            if val > bound:
                raise StructureViolation(
                    f"{name}: measured {val:.3e} exceeds bound {bound:.3e} "
                    f"at mu={mu:g}")
    return report


def lower_left_slope(profile: WaveProfile, k: float, mu_pair=(100.0, 800.0),
                     n_samples: int = 768):
    """Two-mu log-log slope of the S-conjugated lower-left block vs eps."""
    r1 = verify_block_reduction(profile, mu_pair[0], k, n_samples,
                                raise_on_violation=False)
    r2 = verify_block_reduction(profile, mu_pair[1], k, n_samples,
                                raise_on_violation=False)
    slope = math.log(r2.lower_left_sup / r1.lower_left_sup) \
        / math.log(r2.eps / r1.eps)
    return slope, (r1, r2)


# ----------------------------------------------------------------------
# low-frequency coefficient
# ----------------------------------------------------------------------

DEFAULT_K_LADDER = (0.04, 0.057, 0.08, 0.113, 0.16)


@dataclass(frozen=True)
class LowFreqReport:
    k_samples: tuple
    d_values: tuple
    fitted_c4: float
    fitted_c6: float
    predicted_c4: float
    relative_error: float
    fit_residual: float

    def to_json_dict(self) -> dict:
        return {"k_samples": list(self.k_samples), "d_values": list(self.d_values),
                "fitted_c4": self.fitted_c4, "fitted_c6": self.fitted_c6,
                "predicted_c4": self.predicted_c4,
                "relative_error": self.relative_error,
                "fit_residual": self.fit_residual}


def low_freq_coefficient(profile: WaveProfile, k_ladder=DEFAULT_K_LADDER,
                         ode_tol: float = DEFAULT_ODE_TOL,
                         quad_tol: float = DEFAULT_QUAD_TOL,
                         grads: conserved.GradientSet = None,
                         bracket_hint=None) -> LowFreqReport:
    """Fit D(0, k, 1) = c4 k^4 + c6 k^6 and compare c4 with the prediction.

    Predicted c4 = -(P T - M^2) {T, M}_{a,E}; the dispersion sign enters
    only as sigma^2 = 1, so the prediction is sigma-independent.
    """
    ks = [float(k) for k in k_ladder]
    if len(ks) < 4:
        raise ValueError("need at least 4 k samples for the k^4/k^6 fit")
    d_vals = [evans(profile, 0.0, k, 1.0, ode_tol=ode_tol).value for k in ks]

    karr = np.array(ks)
    X = np.column_stack([karr ** 4, karr ** 6])
    col_scale = np.max(np.abs(X), axis=0)
    Xs = X / col_scale
    if np.linalg.cond(Xs) > 1e8:
        raise FitIllConditioned(
            f"k ladder {ks} produces condition number {np.linalg.cond(Xs):.2e}")
    coef_s, res, *_ = np.linalg.lstsq(Xs, np.array(d_vals), rcond=None)
    coef = coef_s / col_scale
    resid = float(np.linalg.norm(X @ coef - np.array(d_vals))
                  / max(np.linalg.norm(d_vals), 1e-300))

    params = profile.params
    tps = (profile.u_minus, profile.u_plus)
    inv = conserved.compute_invariants(params, turning_points=tps, quad_tol=quad_tol)
    g = grads or conserved.gradients(params, quad_tol=quad_tol,
                                     bracket_hint=bracket_hint or tps)
    jac = conserved.jacobian_TM(params, g)
    predicted = -(inv.P * inv.T - inv.M ** 2) * jac
    rel = abs(coef[0] - predicted) / abs(predicted)
    return LowFreqReport(k_samples=tuple(ks), d_values=tuple(float(d) for d in d_vals),
                         fitted_c4=float(coef[0]), fitted_c6=float(coef[1]),
                         predicted_c4=float(predicted), relative_error=float(rel),
                         fit_residual=resid)


# ----------------------------------------------------------------------
# orientation index
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class IndexVerdict:
    jacobian: float
    sigma: int
    product_sign: int
    conclusion: str   # UnstableDetected | IndexInconclusive | DegenerateJacobian

    def to_json_dict(self) -> dict:
        return {"jacobian_TM": self.jacobian, "sigma": self.sigma,
                "product_sign": self.product_sign, "conclusion": self.conclusion}


def orientation_index(params: WaveParams, grads: conserved.GradientSet = None,
                      bracket_hint=None, quad_tol: float = DEFAULT_QUAD_TOL,
                      degeneracy_tol: float = 1e-8) -> IndexVerdict:
    """Instability verdict from the sign of sigma * {T, M}_{a,E}.

    One-sided: a positive product certifies transverse spectral instability;
    a negative one decides nothing.
    """
    g = grads or conserved.gradients(params, quad_tol=quad_tol,
                                     bracket_hint=bracket_hint)
    jac = conserved.jacobian_TM(params, g)
    scale = abs(g.dT[0] * g.dM[1]) + abs(g.dT[1] * g.dM[0])
    if abs(jac) <= degeneracy_tol * max(scale, 1e-300):
        return IndexVerdict(jacobian=jac, sigma=params.sigma, product_sign=0,
                            conclusion="DegenerateJacobian")
    product = params.sigma * jac
    sign = 1 if product > 0 else -1
    conclusion = "UnstableDetected" if sign > 0 else "IndexInconclusive"
    return IndexVerdict(jacobian=jac, sigma=params.sigma, product_sign=sign,
                        conclusion=conclusion)
