"""Periodic orbits of the profile oscillator u_x^2/2 = E - V(u; a, c).

Construction pipeline: locate the two simple turning points of E - V,
evaluate the period by quadrature regularized with u = u_- +
(u_+ - u_-) sin^2(theta) (which cancels the square-root branch points
exactly for polynomial potentials), then integrate u'' = -V'(u) with the
adaptive RK pair to fill a uniform grid over one period.

Also hosts the Jacobi-elliptic layer consumers: the closed-form KdV cnoidal
wave together with recovery of its (a, E, c) parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import elliptic
from .errors import (AmbiguousWell, DegenerateTurningPoint, KPEvansError,
                     NoPeriodicOrbit, PeriodicityViolation, StencilLeftRegion)
from .integrate import integrate
from .model import NonlinearitySpec, WaveParams, eval_V, polyval_ascending
from .quadrature import adaptive_gauss_legendre

DEFAULT_ODE_TOL = 1e-12
DEFAULT_QUAD_TOL = 1e-13
DEFAULT_SIMPLICITY_TOL = 1e-8


# ----------------------------------------------------------------------
# turning points
# ----------------------------------------------------------------------

def _real_roots(asc_coeffs: np.ndarray):
    """Sorted, deduplicated real roots of an ascending-coefficient polynomial."""
    c = np.trim_zeros(np.asarray(asc_coeffs, dtype=float), trim="b")
    if len(c) <= 1:
        return []
    desc = c[::-1]
    raw = np.roots(desc)
    scale = 1.0 + np.max(np.abs(raw)) if len(raw) else 1.0
    d1 = np.polyder(desc)
    out = []
    for r in raw:
        if abs(r.imag) > 1e-7 * scale:
            continue
        x = float(r.real)
        for _ in range(3):  # Newton polish; skipped near multiple roots
            dp = np.polyval(d1, x)
            if abs(dp) < 1e-12 * scale:
                break
            step = np.polyval(desc, x) / dp
            x -= step
            if abs(step) < 1e-16 * (1.0 + abs(x)):
                break
        out.append(x)
    out.sort()
    merged = []
    for x in out:
        if merged and abs(x - merged[-1][0] / merged[-1][1]) <= 1e-7 * (1.0 + abs(x)):
            s, n = merged[-1]
            merged[-1] = (s + x, n + 1)
        else:
            merged.append((x, 1))
    return [s / n for s, n in merged]


def _simplicity_scale(params: WaveParams, u: float) -> float:
    return 1.0 + abs(u) + abs(params.E)


def find_turning_points(params: WaveParams, bracket_hint=None,
                        simplicity_tol: float = DEFAULT_SIMPLICITY_TOL):
    """Adjacent simple roots (u_-, u_+) of E = V with E - V > 0 between them.

    bracket_hint is an (lo, hi) interval singling out one well when the
    potential admits several; with more than one candidate and no hint the
    search refuses to guess and raises AmbiguousWell.
    """
    p = params.energy_poly()
    roots = _real_roots(p)
    wells = []
    for lo, hi in zip(roots[:-1], roots[1:]):
        if polyval_ascending(p, 0.5 * (lo + hi)) > 0.0:
            wells.append((lo, hi))
    if bracket_hint is not None:
        lo_h, hi_h = float(bracket_hint[0]), float(bracket_hint[1])
        wells = [w for w in wells if w[1] > lo_h and w[0] < hi_h]
    if not wells:
        raise NoPeriodicOrbit(
            f"no potential well with E - V > 0 for a={params.a}, E={params.E}, c={params.c}")
    if len(wells) > 1:
        raise AmbiguousWell(
            f"{len(wells)} disjoint wells admit periodic orbits; pass bracket_hint")
    u_minus, u_plus = wells[0]
    for u in (u_minus, u_plus):
        if abs(eval_V(params, u, 1)) <= simplicity_tol * _simplicity_scale(params, u):
            raise DegenerateTurningPoint(
                f"|V'({u:.6g})| = {abs(eval_V(params, u, 1)):.3e} below simplicity "
                "tolerance (separatrix or equilibrium boundary)")
    return u_minus, u_plus


def turning_points_from_seed(params: WaveParams, seed,
                             simplicity_tol: float = DEFAULT_SIMPLICITY_TOL):
    """Polish turning points of a perturbed parameter set from known seeds.

    Used by finite-difference stencils: parameters move slightly, so Newton
    from the base-wave roots tracks the same well deterministically.
    """
    p = params.energy_poly()
    desc = np.trim_zeros(p, trim="b")[::-1]
    d1 = np.polyder(desc)
    out = []
    for s in seed:
        x = float(s)
        ok = False
        for _ in range(60):
            fx = np.polyval(desc, x)
            dfx = np.polyval(d1, x)
            if dfx == 0.0:
                break
            step = fx / dfx
            x -= step
            if abs(step) <= 1e-15 * (1.0 + abs(x)):
                ok = True
                break
        if not ok and abs(np.polyval(desc, x)) > 1e-10 * (1.0 + abs(params.E)):
            raise StencilLeftRegion(f"turning point lost near seed {s:.6g}")
        out.append(x)
    u_minus, u_plus = sorted(out)
    if not u_minus < u_plus:
        raise StencilLeftRegion("turning points collapsed at stencil point")
    if polyval_ascending(p, 0.5 * (u_minus + u_plus)) <= 0.0:
        raise StencilLeftRegion("E - V not positive between tracked roots")
    for u in (u_minus, u_plus):
        if abs(eval_V(params, u, 1)) <= simplicity_tol * _simplicity_scale(params, u):
            raise StencilLeftRegion("stencil point reached a degenerate turning point")
    return u_minus, u_plus


# ----------------------------------------------------------------------
# regularized quadrature over one well
# ----------------------------------------------------------------------

def _deflate(desc: np.ndarray, r: float) -> np.ndarray:
    """Synthetic division of a descending-coefficient polynomial by (u - r)."""
    q = np.empty(len(desc) - 1)
    acc = desc[0]
    for i in range(len(desc) - 1):
        q[i] = acc
        acc = desc[i + 1] + r * acc
    return q


def well_integral(params: WaveParams, turning_points, h_of_u,
                  quad_tol: float = DEFAULT_QUAD_TOL) -> float:
    """Integral of h(u) / sqrt(E - V(u)) over (u_-, u_+), branch points removed.

    With u = u_- + (u_+ - u_-) sin^2(theta) and the exact polynomial
    deflation E - V = (u - u_-)(u_+ - u) g(u), the integrand becomes
    2 h(u) / sqrt(g(u)), analytic in theta on [0, pi/2].
    """
    u_minus, u_plus = turning_points
    p_desc = np.trim_zeros(params.energy_poly(), trim="b")[::-1]
    g_desc = -_deflate(_deflate(p_desc, u_minus), u_plus)

    width = u_plus - u_minus

    def integrand(theta):
        u = u_minus + width * np.sin(theta) ** 2
        g = np.polyval(g_desc, u)
        if np.any(g <= 0.0):
            raise KPEvansError("deflated energy polynomial not positive on the well")
        return 2.0 * h_of_u(u) / np.sqrt(g)

    return adaptive_gauss_legendre(integrand, 0.0, np.pi / 2.0, rel_tol=quad_tol)


def compute_period(params: WaveParams, turning_points=None,
                   quad_tol: float = DEFAULT_QUAD_TOL, bracket_hint=None) -> float:
    """Period T = sqrt(2) * integral du / sqrt(E - V(u)) over the well."""
    tps = turning_points or find_turning_points(params, bracket_hint)
    return np.sqrt(2.0) * well_integral(params, tps, lambda u: np.ones_like(u), quad_tol)


# ----------------------------------------------------------------------
# profile
# ----------------------------------------------------------------------

class _QuinticHermite:
    """Piecewise-quintic interpolant from (value, d/dx, d2/dx2) node data.

    Matching three derivatives at both ends of each interval gives an O(h^6)
    local error for smooth data, comfortably above the quintic contract.
    Uniform, periodic grid assumed.
    """

    def __init__(self, grid, y, dy, d2y):
        self.x0 = grid[0]
        self.period = grid[-1] - grid[0]
        self.h = grid[1] - grid[0]
        self.n = len(grid) - 1
        h = self.h
        y0, y1 = y[:-1], y[1:]
        D0, D1 = dy[:-1] * h, dy[1:] * h
        S0, S1 = d2y[:-1] * h * h, d2y[1:] * h * h
        d = y1 - y0
        coeffs = np.empty((self.n, 6))
        coeffs[:, 0] = y0
        coeffs[:, 1] = D0
        coeffs[:, 2] = 0.5 * S0
        coeffs[:, 3] = 10.0 * d - 6.0 * D0 - 4.0 * D1 - 1.5 * S0 + 0.5 * S1
        coeffs[:, 4] = -15.0 * d + 8.0 * D0 + 7.0 * D1 + 1.5 * S0 - S1
        coeffs[:, 5] = 6.0 * d - 3.0 * (D0 + D1) - 0.5 * (S0 - S1)
        self.coeffs = coeffs
        self._rows = coeffs.tolist()  # plain floats for the scalar hot path

    def _locate(self, x):
        xw = np.mod(np.asarray(x, dtype=float) - self.x0, self.period)
        idx = np.clip((xw / self.h).astype(int), 0, self.n - 1)
        t = xw / self.h - idx
        # guard against float fuzz at interval boundaries
        bad = t > 1.0 + 1e-9
        if np.any(bad):
            idx = np.where(bad, np.minimum(idx + 1, self.n - 1), idx)
            t = xw / self.h - idx
        return idx, t

    def value(self, x):
        idx, t = self._locate(x)
        c = self.coeffs[idx]
        out = c[..., 5]
        for j in range(4, -1, -1):
            out = out * t + c[..., j]
        return out if np.ndim(x) else float(out)

    def derivative(self, x):
        idx, t = self._locate(x)
        c = self.coeffs[idx]
        out = 5.0 * c[..., 5]
        for j in range(4, 0, -1):
            out = out * t + j * c[..., j]
        out = out / self.h
        return out if np.ndim(x) else float(out)

    def value_and_derivative_scalar(self, x: float):
        """Fast path for ODE right-hand sides: returns (value, d/dx)."""
        xw = (x - self.x0) % self.period
        fi = xw / self.h
        idx = int(fi)
        if idx >= self.n:
            idx = self.n - 1
        t = fi - idx
        c0, c1, c2, c3, c4, c5 = self._rows[idx]
        v = ((((c5 * t + c4) * t + c3) * t + c2) * t + c1) * t + c0
        d = (((5.0 * c5 * t + 4.0 * c4) * t + 3.0 * c3) * t + 2.0 * c2) * t + c1
        return v, d / self.h


@dataclass(eq=False)
class WaveProfile:
    """One period of a traveling-wave profile on a uniform grid.

    Starts at the minimum turning point with zero slope (u(0) = u_-,
    u_x(0) = 0); treated as immutable after construction.
    """

    params: WaveParams
    u_minus: float
    u_plus: float
    period: float
    grid: np.ndarray
    u_samples: np.ndarray
    ux_samples: np.ndarray
    _interp: _QuinticHermite = field(init=False, repr=False)

    def __post_init__(self):
        uxx = -polyval_ascending(self.params.V_coeffs(1), self.u_samples)
        self._interp = _QuinticHermite(self.grid, self.u_samples, self.ux_samples, uxx)

    def u(self, x):
        return self._interp.value(x)

    def ux(self, x):
        return self._interp.derivative(x)

    def uxx(self, x):
        """Second derivative through the profile ODE, u'' = -V'(u)."""
        return -eval_V(self.params, self.u(x), 1)

    def energy_residual(self) -> float:
        """sup |u_x^2/2 - (E - V(u))| over the stored grid."""
        V = np.array([eval_V(self.params, u, 0) for u in self.u_samples])
        return float(np.max(np.abs(0.5 * self.ux_samples ** 2 - (self.params.E - V))))

    def to_json_dict(self) -> dict:
        p = self.params
        return {
            "params": {"a": p.a, "E": p.E, "c": p.c, "sigma": p.sigma,
                       "nonlinearity": p.nonlinearity.to_json_dict()},
            "u_minus": self.u_minus, "u_plus": self.u_plus, "period": self.period,
            "grid": [float(x) for x in self.grid],
            "u_samples": [float(v) for v in self.u_samples],
            "ux_samples": [float(v) for v in self.ux_samples],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "WaveProfile":
        pd = d["params"]
        params = WaveParams(pd["a"], pd["E"], pd["c"],
                            NonlinearitySpec.from_json_dict(pd["nonlinearity"]),
                            pd["sigma"])
        return WaveProfile(params, d["u_minus"], d["u_plus"], d["period"],
                           np.asarray(d["grid"]), np.asarray(d["u_samples"]),
                           np.asarray(d["ux_samples"]))

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("x,u,ux\n")
            for x, u, ux in zip(self.grid, self.u_samples, self.ux_samples):
                fh.write(f"{x:.17e},{u:.17e},{ux:.17e}\n")


def integrate_profile(params: WaveParams, samples_per_period: int = 1024,
                      ode_tol: float = DEFAULT_ODE_TOL, bracket_hint=None,
                      turning_points=None, quad_tol: float = DEFAULT_QUAD_TOL) -> WaveProfile:
    """Solve u'' = -V'(u) from (u_-, 0) over one period onto a uniform grid."""
    if samples_per_period < 64:
        raise ValueError("samples_per_period must be at least 64")
    tps = turning_points or find_turning_points(params, bracket_hint)
    u_minus, u_plus = tps
    T = compute_period(params, tps, quad_tol=quad_tol)
    grid = np.linspace(0.0, T, samples_per_period + 1)
    vp_desc = np.trim_zeros(params.V_coeffs(1), trim="b")[::-1]

    def rhs(x, y):
        return np.array([y[1], -np.polyval(vp_desc, y[0])])

    y_end, rec = integrate(rhs, 0.0, T, np.array([u_minus, 0.0]),
                           rtol=ode_tol, atol=ode_tol, checkpoints=grid)
    closure = abs(y_end[0] - u_minus) + abs(y_end[1])
    if closure > 100.0 * ode_tol * max(1.0, u_plus - u_minus):
        raise PeriodicityViolation(
            f"profile fails to close after one period (defect {closure:.3e})")
    samples = np.array(rec)
    u_s, ux_s = samples[:, 0].copy(), samples[:, 1].copy()
    # pin the endpoint to the exact periodic image of the start
    u_s[-1], ux_s[-1] = u_minus, 0.0
    return WaveProfile(params, u_minus, u_plus, T, grid, u_s, ux_s)


# ----------------------------------------------------------------------
# Jacobi elliptic layer re-exports and the cnoidal closed form
# ----------------------------------------------------------------------

EllipticModulus = elliptic.EllipticModulus
jacobi_elliptic = elliptic.jacobi_elliptic
complete_K = elliptic.complete_K
complete_E = elliptic.complete_E


def cnoidal_wave(u0: float, kappa: float, m, samples_per_period: int = 1024,
                 sigma: int = 1) -> WaveProfile:
    """KdV cnoidal wave u = u0 + 12 k^2 kappa^2 cn^2(kappa x + K(k), k) at t = 0.

    The phase shift by the quarter period K(k) starts the profile at its
    trough, matching the u(0) = u_- normalization of integrated profiles.
    Wave parameters are recovered from the traveling frame x + c t, which
    forces c = 8 k^2 kappa^2 - 4 kappa^2 + u0, and then (E, a) by inserting
    the closed form into the oscillator equation at two sample points.
    """
    k = m.k if isinstance(m, EllipticModulus) else float(m)
    if not (0.0 < k < 1.0):
        raise elliptic.ModulusOutOfRange(f"cnoidal modulus must lie in (0, 1), got {k}")
    if kappa <= 0.0:
        raise ValueError("kappa must be positive")
    K = complete_K(k)
    T = 2.0 * K / kappa
    amp = 12.0 * k * k * kappa * kappa
    c = 8.0 * k * k * kappa * kappa - 4.0 * kappa * kappa + u0

    grid = np.linspace(0.0, T, samples_per_period + 1)
    sn, cn, dn = jacobi_elliptic(kappa * grid + K, k)
    u_s = u0 + amp * cn ** 2
    ux_s = -2.0 * amp * kappa * cn * sn * dn
    u_s[0] = u_s[-1] = u0
    ux_s[0] = ux_s[-1] = 0.0

    kdv = NonlinearitySpec.kdv()
    # quad1 at two generic points: u_x^2/2 = E + a u + (c/2) u^2 - F(u)
    idx = [int(0.13 * samples_per_period), int(0.37 * samples_per_period)]
    A = np.array([[1.0, u_s[i]] for i in idx])
    b = np.array([0.5 * ux_s[i] ** 2 + polyval_ascending(kdv.F_coeffs, u_s[i])
                  - 0.5 * c * u_s[i] ** 2 for i in idx])
    E, a = np.linalg.solve(A, b)
    params = WaveParams(float(a), float(E), float(c), kdv, sigma)
    return WaveProfile(params, u0, u0 + amp, T, grid, u_s, ux_s)


def phase_align(profile_a: WaveProfile, profile_b: WaveProfile, n: int = 512) -> float:
    """Sup-norm difference of two profiles after aligning their troughs.

    Both profile conventions already start at the trough, so alignment is a
    straight comparison on a common grid over the shorter period.
    """
    T = min(profile_a.period, profile_b.period)
    x = np.linspace(0.0, T, n)
    return float(np.max(np.abs(profile_a.u(x) - profile_b.u(x))))
