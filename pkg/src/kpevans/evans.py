"""Monodromy of the transverse spectral problem and the periodic Evans function.

The linearization of the gKP flow about a periodic gKdV profile, for
perturbations e^{-mu t + i k y} v(x), reduces to the first-order system
Y' = H(x; mu, k) Y with the companion matrix

    H = [[0, 1, 0, 0],
         [0, 0, 1, 0],
         [0, 0, 0, 1],
         [-sigma k^2 - f'''(u) u_x^2 - f''(u) u_xx,  -2 f''(u) u_x - mu,
          -f'(u) + c,  0]].

H is trace free, so the fundamental matrix has constant determinant; the
monodromy M(mu, k) = Phi(T) is stored as a normalized matrix plus a real
log of the factored-out scale.  The Evans function is

    D(mu, k, lambda) = det(M(mu, k) - lambda I),

evaluated through a complete-pivot LU so the sign survives near zeros even
when the scale bookkeeping is large.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonRealEvans, ScaleOverflow
from .integrate import integrate
from .model import _poly_derivative
from .wave import DEFAULT_ODE_TOL, WaveProfile

_LOG_MAX = 690.0  # exp() overflow guard for float64


def _horner(desc, u: float) -> float:
    r = 0.0
    for c in desc:
        r = r * u + c
    return r


def _poly_rows(profile: WaveProfile):
    """Descending coefficient tuples for f', f'', f''' and V'."""
    par = profile.params

    def desc(asc):
        a = np.trim_zeros(np.asarray(asc, dtype=float), trim="b")
        return tuple(a[::-1]) if len(a) else (0.0,)

    f = par.nonlinearity.f_coeffs
    return (desc(_poly_derivative(f, 1)), desc(_poly_derivative(f, 2)),
            desc(_poly_derivative(f, 3)), desc(par.V_coeffs(1)))


def coefficient_matrix(profile: WaveProfile, mu, k: float, x: float) -> np.ndarray:
    """H(x; mu, k) with u, u_x from the interpolant and u_xx = -V'(u)."""
    fp, fpp, fppp, vp = _poly_rows(profile)
    u, ux = profile._interp.value_and_derivative_scalar(float(x))
    uxx = -_horner(vp, u)
    sigma = profile.params.sigma
    c = profile.params.c
    h41 = -sigma * k * k - _horner(fppp, u) * ux * ux - _horner(fpp, u) * uxx
    h42 = -2.0 * _horner(fpp, u) * ux - mu
    h43 = c - _horner(fp, u)
    dtype = complex if isinstance(mu, complex) else float
    H = np.zeros((4, 4), dtype=dtype)
    H[0, 1] = H[1, 2] = H[2, 3] = 1.0
    H[3, 0], H[3, 1], H[3, 2] = h41, h42, h43
    return H


@dataclass(frozen=True)
class SpectralPoint:
    mu: complex
    k: float
    lam: complex


@dataclass(frozen=True)
class Monodromy:
    """Normalized period map: the true monodromy is exp(log_scale) * matrix.

    log_det carries the accumulated complex log of the segment-map
    determinants: determinants are multiplicative, and each segment map has
    moderate dynamic range, so the product evaluates det(e^{log_scale} M)
    faithfully even when the full monodromy's eigenvalues span hundreds of
    orders of magnitude and a direct 4x4 determinant would drown in
    roundoff.
    """

    matrix: np.ndarray
    log_scale: float
    log_det: complex
    mu: complex
    k: float

    def full(self) -> np.ndarray:
        if abs(self.log_scale) > _LOG_MAX:
            raise ScaleOverflow(
                f"monodromy scale e^{self.log_scale:.1f} not representable")
        return math.exp(self.log_scale) * self.matrix

    def det_residual(self) -> float:
        """|det(e^{log_scale} M) - 1|; Liouville forces this to vanish."""
        if abs(self.log_det.real) > _LOG_MAX:
            raise ScaleOverflow("determinant reconstruction overflows")
        return abs(np.exp(self.log_det) - 1.0)


def det_complete_pivot(A: np.ndarray):
    """Determinant of a small matrix by LU with complete pivoting."""
    return det_with_noise(A)[0]


def det_with_noise(A: np.ndarray):
    """(det, noise) by complete-pivot LU on a small matrix.

    Full pivoting keeps the tiny last pivot meaningful when the matrix is
    dominated by the huge stable/unstable Floquet directions, and the
    elimination runs in extended (80-bit) precision so the roundoff floor
    sits well below the structurally tiny determinants that arise at large
    spectral frequency.  noise estimates that floor: extended-precision
    epsilon times the product of all but the smallest pivot magnitudes.
    """
    complex_in = np.iscomplexobj(A)
    A = np.array(A, dtype=np.clongdouble if complex_in else np.longdouble)
    n = A.shape[0]
    det = A.dtype.type(1.0)
    sign = 1.0
    eps = float(np.finfo(np.longdouble).eps)
    scale0 = float(np.max(np.abs(A))) or 1.0
    pivots = []
    for p in range(n - 1):
        sub = np.abs(A[p:, p:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if i != 0:
            A[[p, p + i]] = A[[p + i, p]]
            sign = -sign
        if j != 0:
            A[:, [p, p + j]] = A[:, [p + j, p]]
            sign = -sign
        piv = A[p, p]
        if piv == 0.0:
            noise = eps * scale0 * float(np.prod(pivots)) if pivots else eps
            return (complex(det) * 0.0 if complex_in else 0.0), noise
        det *= piv
        pivots.append(float(abs(piv)))
        A[p + 1:, p:] -= np.outer(A[p + 1:, p] / piv, A[p, p:])
    det *= A[n - 1, n - 1]
    pivots.append(float(abs(A[n - 1, n - 1])))
    pivots.sort()
    noise = eps * scale0 * float(np.prod(pivots[1:]))
    det = det * sign
    return (complex(det) if complex_in else float(det)), noise


def monodromy(profile: WaveProfile, mu, k: float,
              ode_tol: float = DEFAULT_ODE_TOL) -> Monodromy:
    """Integrate Y' = H Y over one period with segmented rescaling.

    [0, T] is split into ceil(|mu|^{1/3} T / 5) segments; each segment map
    is normalized by its max entry with the log accumulated, which keeps
    every factor well conditioned for |mu| into the hundreds.  The local
    tolerance tightens as ode_tol / (1 + |mu|), floored at 1e-14.
    """
    mu_c = complex(mu)
    real_mode = mu_c.imag == 0.0
    mu_val = mu_c.real if real_mode else mu_c
    dtype = float if real_mode else complex

    fp, fpp, fppp, vp = _poly_rows(profile)
    interp = profile._interp
    sigma_k2 = profile.params.sigma * k * k
    c = profile.params.c

    def rhs(x, Y):
        u, ux = interp.value_and_derivative_scalar(x)
        uxx = -_horner(vp, u)
        h41 = -sigma_k2 - _horner(fppp, u) * ux * ux - _horner(fpp, u) * uxx
        h42 = -2.0 * _horner(fpp, u) * ux - mu_val
        h43 = c - _horner(fp, u)
        out = np.empty_like(Y)
        out[0] = Y[1]
        out[1] = Y[2]
        out[2] = Y[3]
        out[3] = h41 * Y[0] + h42 * Y[1] + h43 * Y[2]
        return out

    T = profile.period
    nseg = max(1, math.ceil(abs(mu_c) ** (1.0 / 3.0) * T / 5.0))
    edges = np.linspace(0.0, T, nseg + 1)
    tol = max(ode_tol / (1.0 + abs(mu_c)), 1e-14)

    P = np.eye(4, dtype=dtype)
    log_scale = 0.0
    log_det = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        seg, _ = integrate(rhs, lo, hi, np.eye(4, dtype=dtype), rtol=tol, atol=tol)
        m = float(np.max(np.abs(seg)))
        if not np.isfinite(m) or m == 0.0:
            raise ScaleOverflow(f"segment map degenerate on [{lo:.3g}, {hi:.3g}]")
        # segment determinant (theoretically 1) while it is well conditioned
        log_det += complex(np.log(complex(det_complete_pivot(seg))))
        seg = seg / m
        log_scale += math.log(m)
        P = seg @ P
        m2 = float(np.max(np.abs(P)))
        P = P / m2
        log_scale += math.log(m2)
    return Monodromy(matrix=P, log_scale=log_scale, log_det=log_det,
                     mu=mu_c, k=k)


@dataclass(frozen=True)
class EvansValue:
    """D = mantissa * exp(log_factor), with a roundoff floor for the sign."""

    mantissa: complex
    log_factor: float
    noise: float
    point: SpectralPoint

    @property
    def log_abs(self) -> float:
        return math.log(abs(self.mantissa)) + self.log_factor if self.mantissa != 0 \
            else -math.inf

    @property
    def value(self):
        """The true determinant when representable, else a signed infinity."""
        if self.mantissa == 0:
            return 0.0
        if self.log_abs > _LOG_MAX:
            u = self.mantissa / abs(self.mantissa)
            return u * math.inf
        v = self.mantissa * math.exp(self.log_factor)
        return v.real if isinstance(self.mantissa, float) else v

    def sign(self, safety: float = 30.0) -> int:
        """Sign of Re D; 0 when |D| sits below the LU roundoff floor."""
        re = self.mantissa.real if isinstance(self.mantissa, complex) else self.mantissa
        if abs(re) <= safety * self.noise:
            return 0
        return 1 if re > 0 else -1


def evans(profile: WaveProfile, mu, k: float, lam=1.0,
          mono: Monodromy = None, ode_tol: float = DEFAULT_ODE_TOL) -> EvansValue:
    """Periodic Evans function D(mu, k, lambda) = det(M(mu, k) - lambda I).

    Computed as e^{4 ls} det(M_hat - lambda e^{-ls} I) so the determinant of
    the normalized matrix stays O(1) regardless of the accumulated scale.
    """
    if mono is None:
        mono = monodromy(profile, mu, k, ode_tol=ode_tol)
    ls = mono.log_scale
    if -ls > _LOG_MAX:
        raise ScaleOverflow("monodromy scale underflow")
    lam_c = complex(lam)
    real_case = not np.iscomplexobj(mono.matrix) and lam_c.imag == 0.0
    shift = (lam_c.real if real_case else lam_c) * math.exp(-ls) if ls < _LOG_MAX else 0.0
    A = mono.matrix - shift * np.eye(4, dtype=mono.matrix.dtype)
    mant, noise = det_with_noise(A)
    mant = float(mant.real) if real_case else complex(mant)
    return EvansValue(mantissa=mant, log_factor=4.0 * ls, noise=noise,
                      point=SpectralPoint(complex(mu), k, lam_c))


def char_poly_coeffs(mono: Monodromy):
    """(a, b, c) with det(M - lam I) = lam^4 + a lam^3 + b lam^2 + c lam + det M.

    Newton's identities on the full (unscaled) monodromy; intended for the
    moderate-mu regime where the scale is representable.
    """
    M = mono.full()
    p1 = np.trace(M)
    p2 = np.trace(M @ M)
    p3 = np.trace(M @ M @ M)
    e1 = p1
    e2 = (p1 * p1 - p2) / 2.0
    e3 = (p1 ** 3 - 3.0 * p1 * p2 + 2.0 * p3) / 6.0
    return -e1, e2, -e3


# ----------------------------------------------------------------------
# scanning
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class EvansSample:
    mu: float
    re: float
    im: float
    log_factor: float
    sign: int


@dataclass(frozen=True)
class RefinedRoot:
    mu_lo: float
    mu_hi: float
    mu_star: float

    @property
    def width(self) -> float:
        return self.mu_hi - self.mu_lo


@dataclass(frozen=True)
class ScanReport:
    k: float
    lam: complex
    samples: tuple
    roots: tuple
    unstable: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "unstable", any(r.mu_star > 0 for r in self.roots))

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda": {"re": self.lam.real, "im": self.lam.imag},
            "samples": [{"mu": s.mu, "re_mantissa": s.re, "im_mantissa": s.im,
                         "log_factor": s.log_factor, "sign": s.sign}
                        for s in self.samples],
            "roots": [{"mu_lo": r.mu_lo, "mu_hi": r.mu_hi, "mu_star": r.mu_star,
                       "width": r.width} for r in self.roots],
            "unstable": self.unstable,
        }

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("mu,k,re_D,im_D,log_scale,sign\n")
            for s in self.samples:
                fh.write(f"{s.mu:.17e},{self.k:.17e},{s.re:.17e},{s.im:.17e},"
                         f"{s.log_factor:.17e},{s.sign}\n")


def evans_scan(profile: WaveProfile, mu_grid, k: float, lam=1.0,
               ode_tol: float = DEFAULT_ODE_TOL, refine_tol: float = 1e-6,
               sign_safety: float = 30.0) -> ScanReport:
    """Evaluate D along a real mu grid, bracket sign changes, bisect roots.

    For real mu and lambda the system has real coefficients, so the scan
    runs entirely in real arithmetic; a nonzero imaginary part can only
    arrive through a complex code path and trips NonRealEvans.
    """
    mu_grid = [float(m) for m in mu_grid]
    if any(m2 <= m1 for m1, m2 in zip(mu_grid, mu_grid[1:])):
        raise ValueError("mu_grid must be strictly increasing")
    lam_c = complex(lam)

    def eval_point(mu: float) -> EvansValue:
        ev = evans(profile, mu, k, lam_c.real if lam_c.imag == 0 else lam_c,
                   ode_tol=ode_tol)
        m = complex(ev.mantissa)
        if abs(m.imag) > 1e-9 * max(abs(m), 1e-300):
            raise NonRealEvans(
                f"Im D = {m.imag:.3e} at mu={mu:.6g} on real data")
        return ev

    samples = []
    for mu in mu_grid:
        ev = eval_point(mu)
        m = complex(ev.mantissa)
        samples.append(EvansSample(mu=mu, re=m.real, im=m.imag,
                                   log_factor=ev.log_factor,
                                   sign=ev.sign(sign_safety)))

    roots = []
    for s0, s1 in zip(samples, samples[1:]):
        if s0.sign != 0 and s1.sign != 0 and s0.sign != s1.sign:
            lo, hi = s0.mu, s1.mu
            sign_lo = s0.sign
            while hi - lo > refine_tol:
                mid = 0.5 * (lo + hi)
                s_mid = eval_point(mid).sign(sign_safety)
                if s_mid == 0 or s_mid == sign_lo:
                    lo = mid
                else:
                    hi = mid
            roots.append(RefinedRoot(mu_lo=lo, mu_hi=hi, mu_star=0.5 * (lo + hi)))
    return ScanReport(k=k, lam=lam_c, samples=tuple(samples), roots=tuple(roots))
