"""Command-line entry point: run orchestration and file output.

Every command writes a manifest recording the resolved configuration and
library versions, plus CSV/JSON artifacts.  All floats are printed with 17
significant digits so files round-trip exactly and repeated runs are
byte-identical regardless of MZK_THREADS.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__, analysis, config as cfgmod, dynamics, groundstate
from . import kernels, rescale as rescale_mod, selfsimilar
from .errors import BoundaryMassWarning, FitFailure, MzkError
from .fields import (Grid2D, boundary_mass_fraction, read_checkpoint,
                     write_checkpoint)
from .parallel import worker_count


# ---------------------------------------------------------------------------
# deterministic serialization

def fmt(x) -> str:
    """17-significant-digit float text; exact round trip."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _json_text(obj, indent=0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(str(k))}: {_json_text(v, indent + 1)}'
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    val = float(obj)
    if math.isnan(val):
        return "NaN"
    if math.isinf(val):
        return "Infinity" if val > 0 else "-Infinity"
    return fmt(val)


def write_json(path, obj) -> None:
    Path(path).write_text(_json_text(obj) + "\n", encoding="utf-8")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt(cell) for cell in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_diagnostics_csv(path):
    """Read a diagnostics CSV back into {column: array}."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = [[float(cell) for cell in line.strip().split(",")]
                for line in fh if line.strip()]
    cols = np.array(data, dtype=float).T if data else np.empty((len(header), 0))
    return {name: cols[j] for j, name in enumerate(header)}


def _write_manifest(outdir, command, resolved) -> None:
    write_json(Path(outdir) / "manifest.json", {
        "command": command,
        "config": resolved,
        "versions": {"package": __version__,
                     "numpy": np.__version__,
                     "scipy": scipy.__version__,
                     "kernels_backend": kernels.BACKEND},
    })


def _outdir(args, cfg=None) -> Path:
    path = args.out or (cfg.output_dir if cfg is not None else None) or "."
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands

def _cmd_ground_state(args) -> int:
    out = _outdir(args)
    Q = groundstate.solve_Q(r_max=args.rmax, n_points=args.points, tol=args.tol)
    qmass = groundstate.profile_mass(Q)
    poho = groundstate.pohozaev_check(Q)
    window = groundstate.threshold_window(args.eta, qmass)
    write_csv(out / "q_profile.csv", ("r", "Q"), zip(Q.r, Q.values))
    write_json(out / "ground_state.json", {
        "Q0": Q.values[0],
        "mass": qmass,
        "grad_sq": groundstate.profile_gradient_norm_sq(Q),
        "l4_norm_4": groundstate.profile_l4(Q),
        "decay_rate": Q.decay_rate,
        "pohozaev_mass_defect": poho.defect_mass,
        "pohozaev_grad_defect": poho.defect_grad,
        "eta": args.eta,
        "mass_window": {"lower": window.lower, "upper": window.upper},
    })
    _write_manifest(out, "ground-state",
                    {"rmax": args.rmax, "points": args.points,
                     "tol": args.tol, "eta": args.eta})
    return 0


def _load_run_config(args) -> cfgmod.RunConfig:
    if args.preset is not None:
        return cfgmod.parse_config(cfgmod.PRESETS[args.preset])
    return cfgmod.parse_config(Path(args.config).read_text(encoding="utf-8"))


def _cmd_simulate(args) -> int:
    cfg = _load_run_config(args)
    out = _outdir(args, cfg)
    state0 = cfgmod.build_initial_state(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for name, field in (("E1", state0.E1), ("E2", state0.E2)):
            frac = boundary_mass_fraction(field)
            if frac > 1e-10:
                warnings.warn(
                    f"initial {name} carries mass fraction {frac:.3e} within "
                    f"L/4 of the boundary; enlarge the box to decouple the "
                    f"periodic images", BoundaryMassWarning)
        stepper = dynamics.StepperConfig(
            dt=cfg.dt, eta=cfg.eta, adaptive=cfg.adaptive,
            lambda_cap=cfg.lambda_cap, drift_tolerance=cfg.drift_tolerance,
            nsub=cfg.nsub)
        traj = dynamics.run(state0, stepper, horizon=cfg.horizon,
                            checkpoint_interval=cfg.checkpoint_interval)
    write_csv(out / "diagnostics.csv", dynamics.DIAG_COLUMNS, traj.rows)
    for idx, snap in enumerate(traj.checkpoints):
        write_checkpoint(out / f"checkpoint_{idx:04d}.mzk", snap)
    write_checkpoint(out / "final_state.mzk", traj.final)

    lams = np.array(traj.column("lambda"))
    ham = np.array(traj.column("hamiltonian"))
    masses = np.array(traj.column("mass"))
    summary = {
        "stop_reason": traj.stop_reason,
        "steps": len(traj.rows) - 1,
        "t_final": traj.final.t,
        "lambda_initial": lams[0],
        "lambda_max": lams.max(),
        "lambda_growth": lams.max() / lams[0],
        "mass_initial": masses[0],
        "mass_drift_rel": float(np.abs(masses - masses[0]).max()
                                / max(abs(masses[0]), 1e-300)),
        "hamiltonian_initial": ham[0],
        "hamiltonian_drift_abs": float(np.abs(ham - ham[0]).max()),
        "band_energy_min": float(min(traj.column("dealias_fraction_energy"))),
        "max_substep_drift_rho": traj.max_drift_rho,
        "max_substep_drift_m": traj.max_drift_m,
        "boundary_mass_fraction_final": boundary_mass_fraction(traj.final.E1),
        "warnings": sorted({type(w.message).__name__ for w in caught}),
        "checkpoints": len(traj.checkpoints),
    }
    write_json(out / "summary.json", summary)
    _write_manifest(out, "simulate", cfg.as_dict())
    return 0


def _cmd_selfsimilar(args) -> int:
    out = _outdir(args)
    Q = groundstate.solve_Q()
    if args.mode == "solved":
        pair = selfsimilar.solve_profile(args.omega, args.eta, Q)
    else:
        pair = selfsimilar.seeded_profile(args.omega, args.eta, Q)
    sol = selfsimilar.ExplicitSolution(profile=pair, T=args.T, theta=args.theta)
    grid = Grid2D(nx=args.nx, ny=args.nx, L=args.L)
    times = [float(s) for s in args.times.split(",")]
    report = selfsimilar.scaling_check(sol, times, grid)

    write_csv(out / "scaling_table.csv",
              ("t", "tmt_grad_E1", "tmt_grad_E2", "tmt_n_norm", "tmt_v_norm"),
              [row[:5] for row in report.table])
    n_series = [(t, row[3] / (args.T - t))
                for t, row in zip(report.times, report.table)]
    doc = {
        "omega": args.omega, "eta": args.eta, "T": args.T, "theta": args.theta,
        "profile_mode": args.mode,
        "profile_residuals": {"eq_E": pair.residual_norms[0],
                              "eq_n": pair.residual_norms[1]},
        "grad_norms_equal": report.grad_norms_equal,
        "column_spread": {
            "tmt_grad_E1": report.column_spread(0),
            "tmt_grad_E2": report.column_spread(1),
            "tmt_n_norm": report.column_spread(2),
            "tmt_v_norm": report.column_spread(3)},
    }
    try:
        fit = analysis.fit_rate(n_series, model="fixed_exponent_1",
                                window_fraction=1.0)
        doc["n_norm_fit"] = {"c": fit.c, "T_est": fit.T_est,
                             "exponent": fit.exponent,
                             "rms_log_residual": fit.rms_log_residual}
    except FitFailure as exc:
        doc["n_norm_fit"] = {"error": str(exc)}
    write_json(out / "selfsimilar.json", doc)
    _write_manifest(out, "selfsimilar",
                    {"omega": args.omega, "eta": args.eta, "T": args.T,
                     "theta": args.theta, "nx": args.nx, "L": args.L,
                     "times": times, "mode": args.mode})
    return 0


def _cmd_rescale_check(args) -> int:
    run_dir = Path(args.run)
    out = _outdir(args)
    paths = sorted(run_dir.glob("checkpoint_*.mzk"))
    if not paths:
        raise MzkError(f"no checkpoint_*.mzk files in {run_dir}")
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    eta = args.eta if args.eta is not None else manifest["config"]["eta"]

    def check(path):
        state = read_checkpoint(path)
        lam = rescale_mod.lambda_of(state)
        scaled = rescale_mod.rescale_state(state, lam)
        lam_tilde = rescale_mod.lambda_of(scaled)
        m_base = dynamics.mass(state)
        m_tilde = dynamics.mass(scaled)
        h_base = dynamics.hamiltonian(state, eta)
        h_tilde = dynamics.hamiltonian(scaled, eta)
        h_ref = h_base / lam ** 2
        return (state.t, lam,
                abs(lam_tilde - 1.0),
                abs(m_tilde - m_base) / max(abs(m_base), 1e-300),
                abs(h_tilde - h_ref) / max(abs(h_ref), 1e-300))

    with ThreadPoolExecutor(max_workers=min(worker_count(), len(paths))) as pool:
        rows = list(pool.map(check, paths))

    write_csv(out / "rescale_check.csv",
              ("t", "lambda", "identity_2_5_defect", "mass_defect",
               "hamiltonian_scaling_defect"), rows)
    arr = np.array(rows)
    write_json(out / "rescale_check.json", {
        "checkpoints": len(rows),
        "eta": eta,
        "max_identity_2_5_defect": float(arr[:, 2].max()),
        "max_mass_defect": float(arr[:, 3].max()),
        "max_hamiltonian_scaling_defect": float(arr[:, 4].max()),
        "unit_seminorm_ok": bool(arr[:, 2].max() < 1e-10),
        "mass_ok": bool(arr[:, 3].max() < 1e-10),
        "hamiltonian_ok": bool(arr[:, 4].max() < 1e-8),
    })
    _write_manifest(out, "rescale-check",
                    {"run": str(run_dir), "eta": eta})
    return 0


def _cmd_fit_rate(args) -> int:
    out = _outdir(args)
    cols = read_diagnostics_csv(args.csv)
    if args.column not in cols:
        raise MzkError(f"column {args.column!r} not in {sorted(cols)}")
    series = list(zip(cols["t"], cols[args.column]))
    try:
        fit = analysis.fit_rate(series, model=args.model,
                                window_fraction=args.window_fraction)
        verdict = analysis.check_lower_bound(fit, which=args.column)
        doc = {"column": args.column, "model": args.model,
               "c": fit.c, "T_est": fit.T_est, "exponent": fit.exponent,
               "rms_log_residual": fit.rms_log_residual,
               "verdict": "pass" if verdict.passed else "fail",
               "super_rate": verdict.super_rate,
               "note": verdict.note}
    except FitFailure as exc:
        doc = {"column": args.column, "model": args.model,
               "c": None, "T_est": None, "exponent": None,
               "rms_log_residual": None,
               "verdict": "not blowing up", "note": str(exc)}
    write_json(out / "fit_rate.json", doc)
    sys.stdout.write(_json_text(doc) + "\n")
    _write_manifest(out, "fit-rate",
                    {"csv": str(args.csv), "column": args.column,
                     "model": args.model,
                     "window_fraction": args.window_fraction})
    return 0


def _cmd_gn_check(args) -> int:
    from .fields import smooth_random_field
    out = _outdir(args)
    Q = groundstate.solve_Q()
    qmass = groundstate.profile_mass(Q)
    grid = Grid2D(nx=args.nx, ny=args.nx, L=args.L)
    rng = np.random.default_rng(args.seed)
    ratios = []
    violations = 0
    for _ in range(args.count):
        u = smooth_random_field(grid, rng, complex_valued=True)
        res = groundstate.gn_check(u, qmass)
        ratios.append(res.lhs / res.rhs if res.rhs > 0 else 0.0)
        violations += 0 if res.holds else 1
    # equality case: the interpolated ground state saturates the inequality
    res_q = groundstate.gn_check(groundstate.profile_to_grid(Q, grid), qmass)
    eq_defect = abs(res_q.lhs - res_q.rhs) / res_q.rhs
    write_json(out / "gn_check.json", {
        "count": args.count, "seed": args.seed,
        "violations": violations,
        "max_ratio": max(ratios),
        "equality_rel_defect": eq_defect,
        "holds": violations == 0,
    })
    _write_manifest(out, "gn-check",
                    {"count": args.count, "seed": args.seed,
                     "nx": args.nx, "L": args.L})
    return 0


def _cmd_classify(args) -> int:
    cfg = _load_run_config(args)
    out = _outdir(args, cfg)
    state = cfgmod.build_initial_state(cfg)
    qmass = groundstate.profile_mass(groundstate.solve_Q())
    cls = analysis.classify_initial_data(state, cfg.eta, qmass,
                                         radial=cfg.radial)
    if cls.radial and cls.negative_energy and cls.in_window:
        note = ("radial data, negative Hamiltonian, mass inside the window: "
                "finite-time collapse expected")
    elif cls.mass < cls.window.lower:
        note = "mass below the lower threshold: global existence expected"
    elif cls.negative_energy:
        note = ("negative Hamiltonian outside the radial in-window case: "
                "no classification asserted")
    else:
        note = "no collapse indicator triggered"
    write_json(out / "classify.json", {
        "mass": cls.mass,
        "window": {"lower": cls.window.lower, "upper": cls.window.upper},
        "in_window": cls.in_window,
        "hamiltonian": cls.hamiltonian,
        "negative_energy": cls.negative_energy,
        "radial": cls.radial,
        "note": note,
    })
    _write_manifest(out, "classify", cfg.as_dict())
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzk", description="Magnetic Zakharov simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground-state", help="solve the radial ground state")
    p.add_argument("--rmax", type=float, default=25.0)
    p.add_argument("--points", type=int, default=4000)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ground_state)

    p = sub.add_parser("simulate", help="integrate a configured run")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", default=None)
    group.add_argument("--preset", choices=sorted(cfgmod.PRESETS), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("selfsimilar",
                       help="evaluate the explicit collapsing family")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--L", type=float, default=48.0)
    p.add_argument("--times", required=True,
                   help="comma-separated sample times in [0, T)")
    p.add_argument("--mode", choices=("seeded", "solved"), default="seeded")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_selfsimilar)

    p = sub.add_parser("rescale-check",
                       help="verify rescaling identities on stored checkpoints")
    p.add_argument("--run", required=True,
                   help="simulate output directory with checkpoint_*.mzk")
    p.add_argument("--eta", type=float, default=None,
                   help="override eta (default: from the run manifest)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_rescale_check)

    p = sub.add_parser("fit-rate", help="fit a blow-up rate to a diagnostics column")
    p.add_argument("--csv", required=True)
    p.add_argument("--column", default="n_norm")
    p.add_argument("--model", choices=("fixed_exponent_1", "free_exponent"),
                   default="fixed_exponent_1")
    p.add_argument("--window-fraction", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_fit_rate)

    p = sub.add_parser("gn-check",
                       help="test the interpolation inequality on random fields")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nx", type=int, default=128)
    p.add_argument("--L", type=float, default=24.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gn_check)

    p = sub.add_parser("classify", help="classify configured initial data")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", default=None)
    group.add_argument("--preset", choices=sorted(cfgmod.PRESETS), default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_classify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MzkError as exc:
        sys.stdout.write(_json_text(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
