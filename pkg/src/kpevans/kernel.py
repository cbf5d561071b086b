"""Stationary solutions of the mu = 0, k = 0 spectral problem.

The traveling-wave ODE is integrable, which hands us three solutions of
d/dx L[u] v = 0 directly: u_x, u_a, u_E (variations of the profile in
translation and in the integration constants), satisfying

    L[u] u_x = 0,   L[u] u_E = 0,   L[u] u_a = -1,

with L[u] = -d^2/dx^2 - f'(u) + c = -d^2/dx^2 - V''(u).  The missing
direction solves L[u] phi = x and comes from variation of parameters over
the fundamental pair (u_x, u_E), whose Wronskian the turning-point
normalization pins to exactly 1:

    phi(x) = (int_0^x s u_E ds) u_x - (int_0^x s u_x ds) u_E.

Initial data follow from differentiating u(0) = u_-(a, E, c) and the
turning-point identities V'(u_-) du_-/dE = 1, V'(u_-) du_-/da = u_-.
All running integrals ride along as extra ODE state, and third derivatives
are assembled from the governing equations, never by differencing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import WronskianDegenerate
from .integrate import integrate
from .model import eval_V
from .wave import DEFAULT_ODE_TOL, WaveProfile


@dataclass(eq=False)
class KernelBasis:
    """Sampled kernel quadruple (u_x, u_a, u_E, phi) with running integrals.

    phi/phip are None until phi_solution() attaches them.  I_sE, I_sx, J,
    I_E, II_E hold int s*u_E, int s*u_x, int u, int u_E, and the iterated
    int int u_E, all from 0 to x.
    """

    profile: WaveProfile
    grid: np.ndarray
    u: np.ndarray
    up: np.ndarray
    ux: np.ndarray
    uxp: np.ndarray
    ua: np.ndarray
    uap: np.ndarray
    uE: np.ndarray
    uEp: np.ndarray
    I_sE: np.ndarray
    I_sx: np.ndarray
    J: np.ndarray
    I_E: np.ndarray
    II_E: np.ndarray
    phi: np.ndarray = None
    phip: np.ndarray = None

    @property
    def du_minus_da(self) -> float:
        p = self.profile.params
        return self.profile.u_minus / eval_V(p, self.profile.u_minus, 1)

    @property
    def du_minus_dE(self) -> float:
        p = self.profile.params
        return 1.0 / eval_V(p, self.profile.u_minus, 1)

    def second_derivative(self, name: str) -> np.ndarray:
        """v'' from the governing equation v'' = -V''(u) v + r."""
        vpp = -self._V2() * getattr(self, name)
        if name == "ua":
            vpp = vpp + 1.0
        elif name == "phi":
            vpp = vpp - self.grid
        return vpp

    def third_derivative(self, name: str) -> np.ndarray:
        """v''' = -V'''(u) u' v - V''(u) v' + r'."""
        vppp = -self._V3() * self.up * getattr(self, name) \
            - self._V2() * getattr(self, name + "p")
        if name == "phi":
            vppp = vppp - 1.0
        return vppp

    def _V2(self):
        return eval_V(self.profile.params, self.u, 2)

    def _V3(self):
        return eval_V(self.profile.params, self.u, 3)

    def wronskian_ux_uE(self) -> np.ndarray:
        """u_x u_E' - u_x' u_E; equals 1 identically for our initial data."""
        return self.ux * self.uEp - self.uxp * self.uE


def variational_solutions(profile: WaveProfile,
                          ode_tol: float = DEFAULT_ODE_TOL) -> KernelBasis:
    """Integrate u_x, u_a, u_E and the running integrals over one period.

    The profile is re-integrated jointly so every quantity sits at the same
    integrator accuracy; u_x doubles as a consistency check against the
    stored profile derivative.
    """
    params = profile.params
    vp_desc = np.trim_zeros(params.V_coeffs(1), trim="b")[::-1]
    v2_desc = np.trim_zeros(params.V_coeffs(2), trim="b")[::-1]
    if len(v2_desc) == 0:
        v2_desc = np.zeros(1)
    u_minus = profile.u_minus
    Vm = eval_V(params, u_minus, 1)

    def rhs(x, y):
        u, up, ux, uxp, ua, uap, uE, uEp = y[:8]
        V2 = np.polyval(v2_desc, u)
        return np.array([
            up,
            -np.polyval(vp_desc, u),
            uxp,
            -V2 * ux,
            uap,
            -V2 * ua + 1.0,
            uEp,
            -V2 * uE,
            x * uE,        # I_sE
            x * ux,        # I_sx
            u,             # J
            uE,            # I_E
            y[11],         # II_E
        ])

    y0 = np.zeros(13)
    y0[0] = u_minus
    y0[3] = -Vm
    y0[4] = u_minus / Vm
    y0[6] = 1.0 / Vm
    _, rec = integrate(rhs, 0.0, profile.period, y0, rtol=ode_tol, atol=ode_tol,
                       checkpoints=profile.grid)
    S = np.array(rec)
    return KernelBasis(
        profile=profile, grid=profile.grid.copy(),
        u=S[:, 0], up=S[:, 1], ux=S[:, 2], uxp=S[:, 3],
        ua=S[:, 4], uap=S[:, 5], uE=S[:, 6], uEp=S[:, 7],
        I_sE=S[:, 8], I_sx=S[:, 9], J=S[:, 10], I_E=S[:, 11], II_E=S[:, 12])


def phi_solution(profile: WaveProfile, basis: KernelBasis,
                 wronskian_tol: float = 1e-8) -> KernelBasis:
    """Attach phi = I_sE u_x - I_sx u_E (and phi') to the basis.

    Valid only while the (u_x, u_E) Wronskian stays at its normalized value
    1; drift beyond wronskian_tol signals an exceptional parameter point.
    """
    wron = basis.wronskian_ux_uE()
    drift = float(np.max(np.abs(wron - 1.0)))
    if drift > max(wronskian_tol, 1e-6):
        raise WronskianDegenerate(
            f"Wronskian of (u_x, u_E) drifted {drift:.3e} from 1")
    phi = basis.I_sE * basis.ux - basis.I_sx * basis.uE
    phip = basis.I_sE * basis.uxp - basis.I_sx * basis.uEp
    return replace(basis, phi=phi, phip=phip)


# ----------------------------------------------------------------------
# the 4x4 solution matrix W(x, 0, 0)
# ----------------------------------------------------------------------

_COLUMNS = ("ux", "ua", "uE", "phi")


@dataclass(eq=False)
class WMatrix:
    """W(x, 0, 0): columns (v, v', v'', v''') for v in (u_x, u_a, u_E, phi)."""

    basis: KernelBasis
    grid: np.ndarray
    values: np.ndarray  # shape (n, 4, 4)
    W0: np.ndarray = field(init=False)
    WT: np.ndarray = field(init=False)
    deltaW: np.ndarray = field(init=False)

    def __post_init__(self):
        self.W0 = self.values[0]
        self.WT = self.values[-1]
        self.deltaW = self.WT - self.W0

    def det_on_grid(self) -> np.ndarray:
        return np.linalg.det(self.values)

    def at_index(self, i: int) -> np.ndarray:
        return self.values[i]


def build_W(profile: WaveProfile, basis: KernelBasis) -> WMatrix:
    """Assemble W on the grid; derivatives of order 2, 3 from the ODEs."""
    if basis.phi is None:
        basis = phi_solution(profile, basis)
    n = len(basis.grid)
    W = np.empty((n, 4, 4))
    for j, name in enumerate(_COLUMNS):
        W[:, 0, j] = getattr(basis, name)
        W[:, 1, j] = getattr(basis, name + "p")
        W[:, 2, j] = basis.second_derivative(name)
        W[:, 3, j] = basis.third_derivative(name)
    return WMatrix(basis=basis, grid=basis.grid.copy(), values=W)


def predicted_W0(profile: WaveProfile, basis: KernelBasis) -> np.ndarray:
    """The explicit W(0, 0, 0) built from turning-point data alone."""
    Vm = eval_V(profile.params, profile.u_minus, 1)
    Vmm = eval_V(profile.params, profile.u_minus, 2)
    aa, aE = basis.du_minus_da, basis.du_minus_dE
    return np.array([
        [0.0, aa, aE, 0.0],
        [-Vm, 0.0, 0.0, 0.0],
        [0.0, 1.0 - Vmm * aa, -Vmm * aE, 0.0],
        [Vmm * Vm, 0.0, 0.0, -1.0],
    ])


def predicted_deltaW(profile: WaveProfile, basis: KernelBasis,
                     T_a: float, T_E: float) -> np.ndarray:
    """delta W(0,0) built from V'(u_-), T_a, T_E, and the moment integrals.

    Column 4 (the phi direction) carries the periodicity defects of u_E:
    since u_Ex(T) = V'(u_-) T_E and u_Exxx(T) = -V'(u_-) V''(u_-) T_E, the
    entries (2,4) and (4,4) pick up the extra moment T_E * int x u_x dx on
    top of int x u_E dx.  The extra terms equal -int(x u_x) times column 3,
    so the determinant is unchanged; see displayed_deltaW for the reduced
    variant with those terms dropped.
    """
    Vm = eval_V(profile.params, profile.u_minus, 1)
    Vmm = eval_V(profile.params, profile.u_minus, 2)
    aE = basis.du_minus_dE
    T = profile.period
    Ix = basis.I_sx[-1]   # int_0^T x u_x dx
    IE = basis.I_sE[-1]   # int_0^T x u_E dx
    mom = IE + T_E * Ix
    return np.array([
        [0.0, 0.0, 0.0, -aE * Ix],
        [0.0, Vm * T_a, Vm * T_E, -Vm * mom],
        [0.0, 0.0, 0.0, -T + Vmm * aE * Ix],
        [0.0, -Vm * Vmm * T_a, -Vm * Vmm * T_E, Vmm * Vm * mom],
    ])


def displayed_deltaW(profile: WaveProfile, basis: KernelBasis,
                     T_a: float, T_E: float) -> np.ndarray:
    """The delta W variant with the pure int x u_E moment in column 4.

    Differs from predicted_deltaW by (int x u_x) * column 3 added to
    column 4, a determinant-preserving column operation.
    """
    dW = predicted_deltaW(profile, basis, T_a, T_E)
    dW[:, 3] += basis.I_sx[-1] * dW[:, 2]
    return dW


# ----------------------------------------------------------------------
# inverse-column identity checks
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class InverseColumnReport:
    """Residuals for W(x)^{-1} e4 = (-int int u_E, -x, int u, -1)^T."""
    sup_identity: float        # |W(x) * claimed - e4|, sup over the grid
    sup_vs_lu: float           # claimed vs direct linear solve
    sup_intermediate: float    # u_ax u_E - u_a u_Ex - int u_E
    first_component_at_T: float


def verify_inverse_column(wmatrix: WMatrix, basis: KernelBasis) -> InverseColumnReport:
    """Check the closed-form last column of W^{-1} without inverting W."""
    n = len(basis.grid)
    claimed = np.stack([-basis.II_E, -basis.grid, basis.J, -np.full(n, 1.0)], axis=1)
    e4 = np.zeros(4)
    e4[3] = 1.0
    prod = np.einsum("nij,nj->ni", wmatrix.values, claimed)
    sup_identity = float(np.max(np.abs(prod - e4)))
    rhs = np.repeat(e4[None, :, None], n, axis=0)
    solved = np.linalg.solve(wmatrix.values, rhs)[:, :, 0]
    sup_vs_lu = float(np.max(np.abs(solved - claimed)))
    inter = basis.uap * basis.uE - basis.ua * basis.uEp - basis.I_E
    return InverseColumnReport(
        sup_identity=sup_identity,
        sup_vs_lu=sup_vs_lu,
        sup_intermediate=float(np.max(np.abs(inter))),
        first_component_at_T=float(-basis.II_E[-1]),
    )


def second_derivative_fd(grid: np.ndarray, vals: np.ndarray):
    """Interior second derivative by the 7-point O(h^6) central stencil.

    Independent of the ODE route, so residuals of L[u]v computed with it
    genuinely test the integrated solutions.  Returns (grid_core, d2vals).
    """
    h = grid[1] - grid[0]
    v = vals
    d2 = (2.0 * (v[:-6] + v[6:]) - 27.0 * (v[1:-5] + v[5:-1])
          + 270.0 * (v[2:-4] + v[4:-2]) - 490.0 * v[3:-3]) / (180.0 * h * h)
    return grid[3:-3], d2


def kernel_residuals(basis: KernelBasis) -> dict:
    """Sup-norm residuals of the four kernel relations, relative scaling.

    L[u] v = -v'' - V''(u) v evaluated with finite-difference second
    derivatives; keys: 'ux', 'uE', 'ua', 'phi' with targets 0, 0, -1, x.
    """
    out = {}
    V2 = eval_V(basis.profile.params, basis.u, 2)
    targets = {"ux": 0.0, "uE": 0.0, "ua": -1.0}
    for name, target in targets.items():
        v = getattr(basis, name)
        xc, d2 = second_derivative_fd(basis.grid, v)
        L = -d2 - (V2 * v)[3:-3]
        out[name] = float(np.max(np.abs(L - target)) / (1.0 + np.max(np.abs(v))))
    if basis.phi is not None:
        xc, d2 = second_derivative_fd(basis.grid, basis.phi)
        L = -d2 - (V2 * basis.phi)[3:-3]
        out["phi"] = float(np.max(np.abs(L - xc)) / (1.0 + np.max(np.abs(basis.phi))))
    return out


def cross_identity_residual(basis: KernelBasis) -> float:
    """Residual of u_a u_Exx - u_axx u_E = -u_E, the derivative of the
    (u_a, u_E) cross-Wronskian, with finite-difference second derivatives."""
    _, d2uE = second_derivative_fd(basis.grid, basis.uE)
    _, d2ua = second_derivative_fd(basis.grid, basis.ua)
    core = slice(3, -3)
    resid = basis.ua[core] * d2uE - d2ua * basis.uE[core] + basis.uE[core]
    return float(np.max(np.abs(resid)))


def write_debug_csv(basis: KernelBasis, path) -> None:
    """Dump (x, u_x, u_a, u_E, phi) plus the kernel residual curves."""
    V2 = eval_V(basis.profile.params, basis.u, 2)
    cols = {"x": basis.grid, "ux": basis.ux, "ua": basis.ua,
            "uE": basis.uE, "phi": basis.phi}
    resid = {}
    for name, target in (("ux", 0.0), ("uE", 0.0), ("ua", -1.0)):
        xc, d2 = second_derivative_fd(basis.grid, getattr(basis, name))
        r = np.full(len(basis.grid), np.nan)
        r[3:-3] = -d2 - (V2 * getattr(basis, name))[3:-3] - target
        resid[f"res_{name}"] = r
    if basis.phi is not None:
        xc, d2 = second_derivative_fd(basis.grid, basis.phi)
        r = np.full(len(basis.grid), np.nan)
        r[3:-3] = -d2 - (V2 * basis.phi)[3:-3] - xc
        resid["res_phi"] = r
    cols.update(resid)
    names = list(cols)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for i in range(len(basis.grid)):
            fh.write(",".join(f"{cols[n][i]:.17e}" for n in names) + "\n")
