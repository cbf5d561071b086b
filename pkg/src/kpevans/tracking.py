"""Conjugation of approximately block-triangular periodic systems.

Given W' = [[M1, N], [delta*Theta, M2]] W with a spectral gap between the
blocks and a small coupling delta, there is a periodic shear

    S = [[I, 0], [Phi, I]],   Phi of size n2 x n1,

turning the system exactly block upper triangular with blocks

    M1~ = M1 + N Phi,   M2~ = M2 - Phi N,   N~ = N,

where Phi solves Phi' = M2 Phi - Phi M1 + delta*Theta - Phi N Phi.  The
half-line Duhamel fixed point is realized here as a sequence of linear
periodic Sylvester boundary-value problems: each iterate integrates the
linear flow over one period and closes it with the unique periodic initial
condition (I - P) vec(Phi(0)) = vec(q(T)), P being the period map of the
homogeneous Sylvester flow.  Uniqueness (and hence periodicity of the
fixed point) is exactly the invertibility of I - P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoContraction, PeriodMapSingular, ResidualExceeded
from .integrate import integrate


class TrigInterp:
    """Trigonometric interpolation of periodic samples on a uniform grid.

    samples[j] at x_j = j * period / n, j = 0..n-1 (no duplicated endpoint);
    works for tensor-valued samples, interpolating along axis 0.
    """

    def __init__(self, period: float, samples: np.ndarray):
        self.period = period
        self.n = len(samples)
        self.coeffs = np.fft.fft(np.asarray(samples, dtype=complex), axis=0) / self.n
        self.freqs = 2.0 * np.pi / period * np.fft.fftfreq(self.n, d=1.0 / self.n)

    def __call__(self, x: float):
        phases = np.exp(1j * self.freqs * x)
        return np.tensordot(phases, self.coeffs, axes=(0, 0))

    def derivative(self, x: float):
        phases = 1j * self.freqs * np.exp(1j * self.freqs * x)
        return np.tensordot(phases, self.coeffs, axes=(0, 0))


@dataclass(eq=False)
class BlockSystem:
    """Periodic coefficient blocks; all entries are callables of x."""

    period: float
    n1: int
    n2: int
    M1: callable
    M2: callable
    N: callable
    Theta: callable
    delta: callable
    eta: callable

    def full_matrix(self, x) -> np.ndarray:
        top = np.hstack([np.atleast_2d(self.M1(x)), np.atleast_2d(self.N(x))])
        bot = np.hstack([self.delta(x) * np.atleast_2d(self.Theta(x)),
                         np.atleast_2d(self.M2(x))])
        return np.vstack([top, bot])

    def gap_margin(self, n_check: int = 64):
        """min over x of [min spec Re M1 - max spec Re M2 - eta]; also the raw gap.

        Reported, not assumed: the periodic-BVP solver only needs I - P
        invertible, so a negative margin is diagnostic rather than fatal.
        """
        margin = np.inf
        raw = np.inf
        for x in np.linspace(0.0, self.period, n_check, endpoint=False):
            m1 = np.atleast_2d(self.M1(x))
            m2 = np.atleast_2d(self.M2(x))
            lo = np.min(np.linalg.eigvalsh(0.5 * (m1 + m1.conj().T)))
            hi = np.max(np.linalg.eigvalsh(0.5 * (m2 + m2.conj().T)))
            raw = min(raw, lo - hi)
            margin = min(margin, lo - hi - float(np.real(self.eta(x))))
        return margin, raw

    def delta_eta_sup(self, n_check: int = 256) -> float:
        xs = np.linspace(0.0, self.period, n_check, endpoint=False)
        return float(max(abs(self.delta(x)) / abs(self.eta(x)) for x in xs))

    @staticmethod
    def from_json_dict(d: dict) -> "BlockSystem":
        """Sampled coefficient table as JSON: uniform grid + full matrices.

        Schema: {"period": T, "n1": .., "n2": .., "grid": [...],
        "matrices": [[[re or [re, im], ...], ...], ...]}.
        """
        def entry(v):
            return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)

        mats = np.array([[[entry(v) for v in row] for row in m]
                         for m in d["matrices"]])
        return BlockSystem.from_tables(float(d["period"]), np.asarray(d["grid"]),
                                       mats, int(d["n1"]), int(d["n2"]))

    @staticmethod
    def from_tables(period: float, grid: np.ndarray, matrices: np.ndarray,
                    n1: int, n2: int, eta=None) -> "BlockSystem":
        """Build a system from sampled full coefficient matrices.

        grid must be uniform over [0, period); a trailing duplicated endpoint
        is dropped.  The lower-left block is factored as delta(x) * Theta(x)
        with delta its overall sup so Theta stays uniformly bounded by 1.
        """
        mats = np.asarray(matrices)
        g = np.asarray(grid)
        if len(g) >= 2 and abs((g[-1] - g[0]) - period) < 1e-9 * period:
            mats, g = mats[:-1], g[:-1]
        interp = TrigInterp(period, mats)
        delta_scale = float(np.max(np.abs(mats[:, n1:, :n1]))) or 1.0
        eta_fn = eta if eta is not None else (lambda x: 1.0)
        return BlockSystem(
            period=period, n1=n1, n2=n2,
            M1=lambda x: interp(x)[:n1, :n1],
            M2=lambda x: interp(x)[n1:, n1:],
            N=lambda x: interp(x)[:n1, n1:],
            Theta=lambda x: interp(x)[n1:, :n1] / delta_scale,
            delta=lambda x: delta_scale,
            eta=eta_fn)


@dataclass(eq=False)
class Conjugator:
    """Periodic solution Phi of the conjugation equation, with certificates."""

    system: BlockSystem
    grid: np.ndarray             # uniform, endpoint excluded
    samples: np.ndarray          # (n_grid, n2, n1)
    interp: TrigInterp
    norm_bound: float
    residual: float
    periodicity_defect: float
    iterations: int
    contraction_ratios: tuple
    measured_C: float

    def __call__(self, x: float) -> np.ndarray:
        return self.interp(x)


def _sylvester_rhs(system: BlockSystem, forcing):
    def rhs(x, Phi):
        out = np.atleast_2d(system.M2(x)) @ Phi - Phi @ np.atleast_2d(system.M1(x))
        if forcing is not None:
            out = out + forcing(x)
        return out
    return rhs


def _growth_rate(system: BlockSystem, n_check: int = 32) -> float:
    """Crude bound on the Sylvester flow's exponential rate, for shooting."""
    rate = 0.0
    for x in np.linspace(0.0, system.period, n_check, endpoint=False):
        m1 = np.atleast_2d(system.M1(x))
        m2 = np.atleast_2d(system.M2(x))
        r1 = np.max(np.abs(np.linalg.eigvalsh(0.5 * (m1 + m1.conj().T))))
        r2 = np.max(np.abs(np.linalg.eigvalsh(0.5 * (m2 + m2.conj().T))))
        rate = max(rate, r1 + r2)
    return rate


def _linear_periodic_solve(system: BlockSystem, forcing, checkpoints: np.ndarray,
                           n_seg: int, rtol: float, atol: float):
    """Periodic solution of Phi' = M2 Phi - Phi M1 + forcing by multiple shooting.

    The period splits into n_seg segments; per segment the d homogeneous
    basis solutions and the particular solution integrate jointly, and the
    cyclic matching system for the segment starting values keeps every
    block's growth at e^O(1) even when the Sylvester flow carries a full
    exponential dichotomy (stable and unstable directions at once), as the
    reduced Evans system does.

    Returns (values at checkpoints, periodicity defect estimate).
    """
    n1, n2, T = system.n1, system.n2, system.period
    d = n1 * n2
    edges = np.linspace(0.0, T, n_seg + 1)

    def rhs(x, Y):  # Y: (d+1, n2, n1); slices 0..d-1 homogeneous, d particular
        M2 = np.atleast_2d(system.M2(x))
        M1 = np.atleast_2d(system.M1(x))
        out = np.einsum("ij,kjl->kil", M2, Y) - np.einsum("kij,jl->kil", Y, M1)
        out[d] += forcing(x)
        return out

    Y0 = np.zeros((d + 1, n2, n1), dtype=complex)
    Y0[:d] = np.eye(d, dtype=complex).reshape(d, n2, n1)
    seg_prop = []       # (d, d) propagators
    seg_part_end = []   # particular increments at segment ends
    seg_records = []    # per-segment checkpoint records, shape (n_cp, d+1, n2, n1)
    cp_index = []
    for i in range(n_seg):
        lo, hi = edges[i], edges[i + 1]
        mask = (checkpoints >= lo - 1e-12 * T) & (checkpoints < hi - 1e-12 * T)
        cps = checkpoints[mask]
        cp_index.append(np.nonzero(mask)[0])
        y_end, rec = integrate(rhs, lo, hi, Y0, rtol=rtol, atol=atol,
                               checkpoints=cps if len(cps) else None)
        seg_prop.append(y_end[:d].reshape(d, d).T)
        seg_part_end.append(y_end[d].reshape(-1))
        seg_records.append(np.array(rec) if len(cps) else np.zeros((0, d + 1, n2, n1)))

    # cyclic matching: v_{i+1} = P_i v_i + q_i with v_{n_seg} = v_0
    A = np.eye(n_seg * d, dtype=complex)
    rhs_vec = np.zeros(n_seg * d, dtype=complex)
    for i in range(n_seg):
        j = (i + 1) % n_seg
        A[j * d:(j + 1) * d, i * d:(i + 1) * d] -= seg_prop[i]
        rhs_vec[j * d:(j + 1) * d] += seg_part_end[i]
    if np.linalg.cond(A) > 1e13:
        raise PeriodMapSingular(
            f"shooting matrix nearly singular (cond {np.linalg.cond(A):.2e}); "
            "no unique periodic solution -- spectral gap failure")
    v = np.linalg.solve(A, rhs_vec).reshape(n_seg, d)

    values = np.zeros((len(checkpoints), n2, n1), dtype=complex)
    for i in range(n_seg):
        rec = seg_records[i]
        if len(rec) == 0:
            continue
        # Phi(x) = sum_k Hom_k(x) v_i[k] + q(x) on segment i
        hom = rec[:, :d]
        values[cp_index[i]] = np.tensordot(hom, v[i], axes=(1, 0)) + rec[:, d]
    defect = float(np.max(np.abs(seg_prop[-1] @ v[-1] + seg_part_end[-1] - v[0])))
    return values, defect


def solve_conjugator(system: BlockSystem, max_iter: int = 60, fp_tol: float = 1e-12,
                     ode_rtol: float = 1e-12, ode_atol: float = 1e-13,
                     n_grid: int = 256, n_seg: int = None) -> Conjugator:
    """Fixed-point iteration over linear periodic Sylvester problems.

    Each sweep solves Phi' = M2 Phi - Phi M1 + [delta*Theta - Phi_prev N
    Phi_prev] with the periodic closure imposed by multiple shooting, then
    re-interpolates Phi_prev trigonometrically.
    """
    n1, n2, T = system.n1, system.n2, system.period
    if n_seg is None:
        n_seg = max(1, min(64, int(np.ceil(T * _growth_rate(system) / 2.0))))
    grid = np.linspace(0.0, T, n_grid, endpoint=False)
    phi_interp = None
    samples = np.zeros((n_grid, n2, n1), dtype=complex)
    changes = []
    periodicity_defect = np.inf

    for it in range(1, max_iter + 1):
        if phi_interp is None:
            def forcing(x):
                return system.delta(x) * np.atleast_2d(system.Theta(x)).astype(complex)
        else:
            def forcing(x):
                Phi = phi_interp(x)
                return (system.delta(x) * np.atleast_2d(system.Theta(x))
                        - Phi @ np.atleast_2d(system.N(x)) @ Phi)

        new, periodicity_defect = _linear_periodic_solve(
            system, forcing, grid, n_seg, ode_rtol, ode_atol)
        change = float(np.max(np.abs(new - samples)))
        samples = new
        phi_interp = TrigInterp(T, samples)
        changes.append(change)
        if change < fp_tol:
            break
        if len(changes) >= 3 and changes[-1] > changes[-2] > changes[-3] \
                and changes[-1] > 10.0 * changes[0]:
            raise NoContraction(
                f"iteration diverging: increments {changes[-3:]} "
                f"(sup delta/eta = {system.delta_eta_sup():.3e})")
    else:
        raise NoContraction(
            f"no convergence to {fp_tol:g} in {max_iter} sweeps "
            f"(last increment {changes[-1]:.3e})")

    # residual certificate with an independent (spectral) derivative
    sup_phi = float(np.max(np.abs(samples)))
    resid = 0.0
    for j, x in enumerate(grid):
        Phi = samples[j]
        dPhi = phi_interp.derivative(x)
        rhs_val = (np.atleast_2d(system.M2(x)) @ Phi
                   - Phi @ np.atleast_2d(system.M1(x))
                   + system.delta(x) * np.atleast_2d(system.Theta(x))
                   - Phi @ np.atleast_2d(system.N(x)) @ Phi)
        resid = max(resid, float(np.max(np.abs(dPhi - rhs_val))))

    de_sup = system.delta_eta_sup()
    ratios = tuple(b / a for a, b in zip(changes[:-1], changes[1:]) if a > 0)
    return Conjugator(system=system, grid=grid, samples=samples, interp=phi_interp,
                      norm_bound=sup_phi, residual=resid,
                      periodicity_defect=periodicity_defect,
                      iterations=len(changes), contraction_ratios=ratios,
                      measured_C=sup_phi / de_sup if de_sup > 0 else 0.0)


def triangularized_blocks(system: BlockSystem, conj: Conjugator):
    """Exact-triangular coefficient functions (M1~, M2~, N~).

    M1~ = M1 + N Phi and M2~ = M2 - Phi N; the displayed convention is
    validated by the residual certificate S' + S A~ - A S = 0 rather than
    trusted blindly.
    """
    def M1t(x):
        return np.atleast_2d(system.M1(x)) + np.atleast_2d(system.N(x)) @ conj(x)

    def M2t(x):
        return np.atleast_2d(system.M2(x)) - conj(x) @ np.atleast_2d(system.N(x))

    return M1t, M2t, system.N


def conjugation_residual(system: BlockSystem, conj: Conjugator,
                         n_check: int = 64, tol: float = None) -> float:
    """sup |S' + S A~ - A S| over a grid; raises if tol given and exceeded."""
    n1, n2 = system.n1, system.n2
    M1t, M2t, Nt = triangularized_blocks(system, conj)
    sup = 0.0
    for x in np.linspace(0.0, system.period, n_check, endpoint=False):
        S = np.eye(n1 + n2, dtype=complex)
        S[n1:, :n1] = conj(x)
        Sp = np.zeros((n1 + n2, n1 + n2), dtype=complex)
        Sp[n1:, :n1] = conj.interp.derivative(x)
        At = np.zeros((n1 + n2, n1 + n2), dtype=complex)
        At[:n1, :n1] = M1t(x)
        At[:n1, n1:] = np.atleast_2d(Nt(x))
        At[n1:, n1:] = M2t(x)
        A = system.full_matrix(x)
        sup = max(sup, float(np.max(np.abs(Sp + S @ At - A @ S))))
    if tol is not None and sup > tol:
        raise ResidualExceeded(f"conjugation residual {sup:.3e} exceeds {tol:g}")
    return sup


def period_map(A_of_x, dim: int, period: float, rtol: float = 1e-12,
               atol: float = 1e-13) -> np.ndarray:
    """Fundamental-solution period map of a general linear periodic system."""
    def rhs(x, Y):
        return np.atleast_2d(A_of_x(x)) @ Y

    Y, _ = integrate(rhs, 0.0, period, np.eye(dim, dtype=complex),
                     rtol=rtol, atol=atol)
    return Y
