"""Command-line front end: profile, invariants, scan, index, verify.

A problem is a JSON config naming the nonlinearity, the parameters
(a, E, c, sigma), optional tolerance overrides, and an optional scan block.
Outputs are deterministic: CSV in full-precision scientific notation, JSON
with sorted keys, no timestamps inside data files.

Exit codes: 0 success (or index inconclusive), 2 invalid input, 3 numerical
failure, 4 degenerate Jacobian, 5 verification failures, 10 instability
detected by the orientation index.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymptotics, conserved, kernel, tracking, wave
from .errors import ConfigError, DegenerateTurningPoint, KPEvansError
from .evans import evans as evans_value
from .evans import evans_scan, monodromy
from .model import NonlinearitySpec, WaveParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DEGENERATE = 4
EXIT_VERIFY_FAILED = 5
EXIT_UNSTABLE = 10

_TOL_KEYS = {"ode_tol", "quad_tol", "simplicity_tol", "kernel_tol", "refine_tol"}
_TOP_KEYS = {"nonlinearity", "a", "E", "c", "sigma", "tolerances", "scan",
             "bracket_hint", "samples_per_period"}
_SCAN_KEYS = {"mu_grid", "k", "lambda", "high_freq", "low_freq"}


@dataclass
class ProblemConfig:
    params: WaveParams
    bracket_hint: tuple
    tolerances: dict
    scan: dict
    samples_per_period: int

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))


def load_config(path) -> ProblemConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("nonlinearity", "a", "E", "c"):
        if key not in raw:
            raise ConfigError(f"missing required config key '{key}'")
    nl = NonlinearitySpec.from_json_dict(raw["nonlinearity"])
    sigma = raw.get("sigma", 1)
    if sigma not in (-1, 1):
        raise ConfigError(f"sigma must be +1 or -1, got {sigma!r}")
    try:
        params = WaveParams(float(raw["a"]), float(raw["E"]), float(raw["c"]),
                            nl, int(sigma))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter value: {exc}")
    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict) or set(tols) - _TOL_KEYS:
        raise ConfigError(f"tolerances must use keys from {sorted(_TOL_KEYS)}")
    scan = raw.get("scan", {})
    if not isinstance(scan, dict) or set(scan) - _SCAN_KEYS:
        raise ConfigError(f"scan block must use keys from {sorted(_SCAN_KEYS)}")
    hint = raw.get("bracket_hint")
    if hint is not None:
        if not (isinstance(hint, (list, tuple)) and len(hint) == 2):
            raise ConfigError("bracket_hint must be a [lo, hi] pair")
        hint = (float(hint[0]), float(hint[1]))
    spp = int(raw.get("samples_per_period", 1024))
    return ProblemConfig(params=params, bracket_hint=hint, tolerances=tols,
                         scan=scan, samples_per_period=spp)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _build_profile(cfg: ProblemConfig) -> wave.WaveProfile:
    return wave.integrate_profile(
        cfg.params, samples_per_period=cfg.samples_per_period,
        ode_tol=cfg.tol("ode_tol", wave.DEFAULT_ODE_TOL),
        quad_tol=cfg.tol("quad_tol", wave.DEFAULT_QUAD_TOL),
        bracket_hint=cfg.bracket_hint)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_profile(cfg: ProblemConfig, out: Path) -> int:
    profile = _build_profile(cfg)
    profile.write_csv(out / "profile.csv")
    inv = conserved.compute_invariants(
        cfg.params, turning_points=(profile.u_minus, profile.u_plus),
        quad_tol=cfg.tol("quad_tol", wave.DEFAULT_QUAD_TOL))
    _write_json(out / "profile.json", {
        "params": {"a": cfg.params.a, "E": cfg.params.E, "c": cfg.params.c,
                   "sigma": cfg.params.sigma,
                   "nonlinearity": cfg.params.nonlinearity.to_json_dict()},
        "u_minus": profile.u_minus, "u_plus": profile.u_plus,
        "period": profile.period,
        "invariants": {"T": inv.T, "M": inv.M, "P": inv.P, "H": inv.H},
        "energy_residual": profile.energy_residual(),
    })
    return EXIT_OK


def cmd_invariants(cfg: ProblemConfig, out: Path) -> int:
    quad_tol = cfg.tol("quad_tol", wave.DEFAULT_QUAD_TOL)
    tps = wave.find_turning_points(cfg.params, cfg.bracket_hint)
    inv = conserved.compute_invariants(cfg.params, turning_points=tps,
                                       quad_tol=quad_tol)
    grads = conserved.gradients(cfg.params, quad_tol=quad_tol,
                                bracket_hint=cfg.bracket_hint)
    jac = conserved.jacobian_TM(cfg.params, grads)
    with open(out / "invariants.csv", "w", newline="\n") as fh:
        fh.write("a,E,c,T,M,P,H,jacobian_TM\n")
        fh.write(conserved.invariants_csv_row(cfg.params, inv, jac) + "\n")
    _write_json(out / "invariants.json", {
        "T": inv.T, "M": inv.M, "P": inv.P, "H": inv.H,
        "PT_minus_M2": inv.jensen_margin(), "jacobian_TM": jac,
        "gradients": {"dT": list(grads.dT), "dM": list(grads.dM),
                      "dP": list(grads.dP), "dH": list(grads.dH)},
        "gradient_identity_residual":
            conserved.gradient_identity_residual(cfg.params, grads),
    })
    return EXIT_OK


def cmd_index(cfg: ProblemConfig, out: Path) -> int:
    verdict = asymptotics.orientation_index(
        cfg.params, bracket_hint=cfg.bracket_hint,
        quad_tol=cfg.tol("quad_tol", wave.DEFAULT_QUAD_TOL))
    _write_json(out / "index.json", verdict.to_json_dict())
    print(f"orientation index: {verdict.conclusion} "
          f"(jacobian {verdict.jacobian:.6e}, sigma {verdict.sigma:+d})")
    if verdict.conclusion == "UnstableDetected":
        return EXIT_UNSTABLE
    if verdict.conclusion == "DegenerateJacobian":
        return EXIT_DEGENERATE
    return EXIT_OK


def _mu_grid_from_spec(spec: dict):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("mu_grid must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "list":
        return [float(v) for v in spec["values"]]
    if kind == "geometric":
        return list(np.geomspace(float(spec["start"]), float(spec["stop"]),
                                 int(spec["n"])))
    if kind == "linear":
        return list(np.linspace(float(spec["start"]), float(spec["stop"]),
                                int(spec["n"])))
    raise ConfigError(f"unknown mu_grid kind {kind!r}")


def cmd_scan(cfg: ProblemConfig, out: Path, threads: int = 1) -> int:
    if not cfg.scan:
        raise ConfigError("scan command requires a 'scan' block in the config")
    ode_tol = cfg.tol("ode_tol", wave.DEFAULT_ODE_TOL)
    refine_tol = cfg.tol("refine_tol", 1e-6)
    profile = _build_profile(cfg)
    consolidated = {}

    jobs = []
    if "mu_grid" in cfg.scan:
        mu_grid = _mu_grid_from_spec(cfg.scan["mu_grid"])
        lam = float(cfg.scan.get("lambda", 1.0))
        for k in cfg.scan.get("k", [0.1]):
            jobs.append(("evans", float(k), mu_grid, lam))

    def run_evans(job):
        _, k, mu_grid, lam = job
        return evans_scan(profile, mu_grid, k, lam, ode_tol=ode_tol,
                          refine_tol=refine_tol)

    evans_jobs = [j for j in jobs if j[0] == "evans"]
    if threads > 1 and len(evans_jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(run_evans, evans_jobs))
    else:
        reports = [run_evans(j) for j in evans_jobs]
    scans_json = []
    for job, rep in zip(evans_jobs, reports):
        tag = f"evans_scan_k{job[1]:g}".replace(".", "p").replace("-", "m")
        rep.write_csv(out / f"{tag}.csv")
        scans_json.append(rep.to_json_dict())
    if scans_json:
        consolidated["evans_scans"] = scans_json

    if "high_freq" in cfg.scan:
        hf = cfg.scan["high_freq"]
        k = float(hf.get("k", 0.5))
        if k == 0.0:
            raise ConfigError("high_freq scan requires k != 0")
        mu_list = [float(m) for m in hf.get("mu_list", [25.0, 50.0, 100.0, 200.0])]
        report = asymptotics.high_freq_sign(profile, k, mu_list, ode_tol=ode_tol)
        with open(out / "high_freq.csv", "w", newline="\n") as fh:
            fh.write("mu,sign,log_abs_D\n")
            for mu, s, la in report.probes:
                fh.write(f"{mu:.17e},{s},{la:.17e}\n")
        consolidated["high_freq"] = report.to_json_dict()

    if "low_freq" in cfg.scan:
        lf = cfg.scan["low_freq"]
        ladder = tuple(float(k) for k in lf.get("k_ladder",
                                                asymptotics.DEFAULT_K_LADDER))
        report = asymptotics.low_freq_coefficient(
            profile, ladder, ode_tol=ode_tol,
            quad_tol=cfg.tol("quad_tol", wave.DEFAULT_QUAD_TOL),
            bracket_hint=cfg.bracket_hint)
        with open(out / "low_freq.csv", "w", newline="\n") as fh:
            fh.write("k,D\n")
            for k, d in zip(report.k_samples, report.d_values):
                fh.write(f"{k:.17e},{d:.17e}\n")
        consolidated["low_freq"] = report.to_json_dict()

    _write_json(out / "scan.json", consolidated)
    return EXIT_OK


def cmd_verify(cfg: ProblemConfig, out: Path, tol_scale: float = 1.0) -> int:
    """Full invariant suite; prints a pass/fail table, writes verify.json."""
    rows = []

    def check(name, measured, tol):
        rows.append({"check": name, "measured": float(measured),
                     "tolerance": float(tol), "pass": bool(measured <= tol)})

    ode_tol = cfg.tol("ode_tol", wave.DEFAULT_ODE_TOL)
    quad_tol = cfg.tol("quad_tol", wave.DEFAULT_QUAD_TOL)
    kernel_tol = cfg.tol("kernel_tol", 1e-6) * tol_scale

    profile = _build_profile(cfg)
    params = cfg.params
    tps = (profile.u_minus, profile.u_plus)
    check("profile energy residual", profile.energy_residual(),
          10.0 * ode_tol * tol_scale * max(1.0, profile.u_plus - profile.u_minus))

    inv = conserved.compute_invariants(params, turning_points=tps, quad_tol=quad_tol)
    pinv = conserved.profile_invariants(profile)
    rel = max(abs(inv.M - pinv.M) / abs(inv.M), abs(inv.P - pinv.P) / abs(inv.P),
              abs(inv.H - pinv.H) / max(abs(inv.H), 1.0))
    check("invariants quadrature vs profile", rel, 1e-8 * tol_scale)
    check("Jensen margin P*T - M^2 > 0", -inv.jensen_margin(), 0.0)

    grads = conserved.gradients(params, quad_tol=quad_tol, bracket_hint=tps)
    if abs(params.E) > 1e-8:
        check("gradient identity", conserved.gradient_identity_residual(params, grads),
              1e-6 * tol_scale)
    jac = conserved.jacobian_TM(params, grads)

    basis = kernel.phi_solution(profile, kernel.variational_solutions(profile, ode_tol))
    residuals = kernel.kernel_residuals(basis)
    for name in ("ux", "uE", "ua", "phi"):
        check(f"kernel residual L[u]{name}", residuals[name], kernel_tol)
    wm = kernel.build_W(profile, basis)
    check("det W = 1", float(np.max(np.abs(wm.det_on_grid() - 1.0))),
          1e-8 * tol_scale)
    dw_pred = kernel.predicted_deltaW(profile, basis, grads.dT[0], grads.dT[1])
    scale = np.max(np.abs(dw_pred))
    check("deltaW matches display", float(np.max(np.abs(wm.deltaW - dw_pred))) / scale,
          1e-6 * tol_scale)
    inv_col = kernel.verify_inverse_column(wm, basis)
    check("inverse-column identity", inv_col.sup_identity, 1e-7 * tol_scale)

    mono = monodromy(profile, 1.7, 0.3, ode_tol=ode_tol)
    check("monodromy det = 1", mono.det_residual(), 1e-8 * tol_scale)
    mono00 = monodromy(profile, 0.0, 0.0, ode_tol=ode_tol)
    WtWinv = wm.WT @ np.linalg.inv(wm.W0)
    check("monodromy vs W(T) W(0)^-1",
          float(np.max(np.abs(mono00.full() - WtWinv))) / max(1.0, float(np.max(np.abs(WtWinv)))),
          1e-7 * tol_scale)
    d_plus = evans_value(profile, 0.9, 0.4, 1.0, ode_tol=ode_tol).value
    d_minus = evans_value(profile, complex(-0.9), 0.4, 1.0, ode_tol=ode_tol).value
    check("evenness in mu", abs(d_plus - d_minus) / max(1.0, abs(d_plus)),
          1e-8 * tol_scale)
    check("translation-mode zero", abs(evans_value(profile, 0.0, 0.0, 1.0,
                                                  ode_tol=ode_tol).value),
          1e-7 * tol_scale)

    lf = asymptotics.low_freq_coefficient(profile, ode_tol=ode_tol,
                                          quad_tol=quad_tol, grads=grads)
    check("low-frequency c4 match", lf.relative_error, 5e-3 * tol_scale)

    br = asymptotics.verify_block_reduction(profile, 100.0, 0.5,
                                            raise_on_violation=False)
    check("Q diagonalization", br.q_diag_error, 1e-14 * tol_scale)
    check("averaging int A1_x", abs(br.avg_A1x), 1e-10 * tol_scale)
    check("averaging int A1 A1_x", abs(br.avg_A1A1x), 1e-10 * tol_scale)
    check("reduced lower-left order", br.lower_left_sup, br.lower_left_bound)
    slope, _ = asymptotics.lower_left_slope(profile, 0.5)
    check("lower-left eps^3 slope", abs(slope - 3.0), 0.6)

    hf = asymptotics.high_freq_sign(profile, 0.5, [50.0, 100.0, 200.0],
                                    ode_tol=ode_tol)
    check("high-frequency sign = sigma", abs(hf.verdict - params.sigma), 0.0)

    sys_const = tracking.BlockSystem(
        period=2.0, n1=1, n2=1,
        M1=lambda x: np.array([[1.0]]), M2=lambda x: np.array([[-1.0]]),
        N=lambda x: np.array([[1.0]]), Theta=lambda x: np.array([[1.0]]),
        delta=lambda x: 0.1, eta=lambda x: 2.0)
    conj = tracking.solve_conjugator(sys_const, fp_tol=1e-14)
    root = -1.0 + math.sqrt(1.1)
    check("tracking fixed point", float(np.max(np.abs(conj.samples - root))),
          1e-12 * tol_scale)
    check("tracking residual", conj.residual, 1e-10 * tol_scale)
    check("tracking periodicity", conj.periodicity_defect, 1e-10 * tol_scale)

    verdict = asymptotics.orientation_index(params, grads=grads)
    report = {"checks": rows, "jacobian_TM": jac,
              "orientation": verdict.to_json_dict(), "tol_scale": tol_scale}
    _write_json(out / "verify.json", report)

    width = max(len(r["check"]) for r in rows)
    n_fail = 0
    for r in rows:
        status = "PASS" if r["pass"] else "FAIL"
        n_fail += 0 if r["pass"] else 1
        print(f"{status}  {r['check']:<{width}}  measured {r['measured']:.3e}"
              f"  tol {r['tolerance']:.3e}")
    print(f"{len(rows) - n_fail}/{len(rows)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY_FAILED


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kpevans",
        description="Transverse-instability toolbox for periodic gKdV waves "
                    "(periodic Evans function, orientation index).")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_txt in (
            ("profile", "construct the wave profile, write CSV/JSON"),
            ("invariants", "compute T, M, P, H, gradients, and {T,M}_{a,E}"),
            ("scan", "run Evans / high-frequency / low-frequency scans"),
            ("index", "evaluate the orientation index verdict"),
            ("verify", "run the full numerical verification suite")):
        sp = sub.add_parser(name, help=help_txt)
        sp.add_argument("--config", required=True, help="problem JSON path")
        sp.add_argument("--out", default=".", help="output directory")
        if name == "scan":
            sp.add_argument("--threads", type=int, default=1)
        if name == "verify":
            sp.add_argument("--tol-scale", type=float, default=1.0,
                            help="multiply all verification tolerances")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "profile":
            return cmd_profile(cfg, out)
        if args.command == "invariants":
            return cmd_invariants(cfg, out)
        if args.command == "scan":
            return cmd_scan(cfg, out, threads=args.threads)
        if args.command == "index":
            return cmd_index(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out, tol_scale=args.tol_scale)
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateTurningPoint as exc:
        print(f"numerical failure: DegenerateTurningPoint: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KPEvansError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
