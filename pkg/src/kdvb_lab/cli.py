"""Command line runner: ``kdvb-lab <command> [--config run.ini] [flags]``.

Each command writes CSV tables and a ``manifest.json`` into the output
directory. Exit status is 0 on success, 2 when the configuration violates a
precondition, 3 on numerical failure (non-convergence, singular systems,
support violations).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import carleman, control, linear, nonlinear, periodic
from .io import RunConfig, config_hash, load_config, write_csv, write_manifest
from .numerics import Grid1D

log = logging.getLogger("kdvb_lab")

COMMANDS = ("solve-ivp", "solve-ibvp", "solve-nonlinear", "spectrum", "observability", "carleman",
            "hum", "modes", "steer", "energy-audit")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class NumericalFailure(RuntimeError):
    pass


# flag -> (config key, type)
FLAGS = {
    "--seed": ("run.seed", int),
    "--output": ("run.output", str),
    "--nx": ("grid.nx", int),
    "--nt": ("grid.nt", int),
    "--x-max": ("grid.x_max", float),
    "--T": ("grid.T", float),
    "--L": ("physics.L", float),
    "--l": ("physics.l", float),
    "--s": ("physics.s", float),
    "--epsilon": ("physics.epsilon", float),
    "--beta": ("physics.beta", float),
    "--amplitude": ("physics.amplitude", float),
    "--tau": ("physics.tau", float),
    "--X": ("physics.X", float),
    "--n-max": ("physics.n_max", int),
    "--draws": ("physics.draws", int),
    "--tol": ("tolerances.tol", float),
    "--max-iter": ("tolerances.max_iter", int),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [run], [grid], [physics], [tolerances]")
    for flag, (key, typ) in FLAGS.items():
        common.add_argument(flag, dest=key, type=typ, default=None)
    common.add_argument("--a", dest="physics.a_values", type=lambda s: tuple(float(v) for v in s.split(",")),
                        default=None, help="comma-separated a values (modes)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="kdvb-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


# ---------------------------------------------------------------- commands

def _grids(cfg: RunConfig):
    g = cfg.grid
    return Grid1D(0.0, float(g["x_max"]), int(g["nx"])), Grid1D(0.0, float(g["T"]), int(g["nt"]))


def _field_rows(x, t, values):
    return ((xi, tj, values[i, j]) for i, xi in enumerate(x) for j, tj in enumerate(t))


def cmd_solve_ivp(cfg, out, h):
    sg, tg = _grids(cfg)
    x = sg.points
    u0 = cfg.physics["amplitude"] * np.exp(-(x - sg.x_max / 2) ** 2)
    vals = linear.whole_line_propagate(u0, sg, tg.points).T
    f = write_csv(out / "field.csv", ["x", "t", "u"], _field_rows(x, tg.points, vals), h)
    return [f], {"max_abs": float(np.abs(vals).max())}


def _ibvp_problem(cfg, nonlinear_on):
    sg, tg = _grids(cfg)
    x, t = sg.points, tg.points
    amp = cfg.physics["amplitude"]
    u0 = amp * x**2 * np.exp(-(x - 3) ** 2)
    h = cfg.physics.get("h_amp", 0.0) * np.sin(np.pi * t / tg.x_max) ** 2
    g = cfg.physics.get("g_amp", 0.0) * np.sin(np.pi * t / tg.x_max) ** 2
    return nonlinear.IbvpProblem(u0, sg, linear.BoundaryData(tg, h, g), nonlinearity_on=nonlinear_on)


def _solve(cfg, out, h, nonlinear_on):
    prob = _ibvp_problem(cfg, nonlinear_on)
    rep = nonlinear.solve_fixed_point(prob, tol=cfg.tolerances["tol"], max_iter=cfg.tolerances["max_iter"],
                                      audit=True)
    if not rep.converged:
        raise NumericalFailure(f"Picard iteration did not converge in {rep.iterations} iterations "
                               f"(last residual {rep.residual_history[-1]:.3e})")
    st = rep.solution
    files = [write_csv(out / "field.csv", ["x", "t", "u"],
                       _field_rows(st.space_grid.points, st.time_grid.points, st.values), h),
             write_csv(out / "residuals.csv", ["iteration", "residual"],
                       enumerate(rep.residual_history, start=1), h)]
    return files, {"iterations": rep.iterations, "converged": rep.converged,
                   "contraction_ratio": rep.contraction_ratio,
                   "energy_residual_max": rep.energy_audit.max_residual}


def cmd_solve_ibvp(cfg, out, h):
    return _solve(cfg, out, h, False)


def cmd_solve_nonlinear(cfg, out, h):
    return _solve(cfg, out, h, True)


def cmd_spectrum(cfg, out, h):
    spec = periodic.spectrum(cfg.physics["L"], cfg.physics["n_max"])
    rows = zip(spec.n, spec.eigenvalues.real, spec.eigenvalues.imag)
    f = write_csv(out / "spectrum.csv", ["n", "re_lambda", "im_lambda"], rows, h)
    gamma, tmin = periodic.ingham_params(spec.L)
    return [f], {"gap": gamma, "t_star_min": tmin, "min_pair_gap": float(spec.pair_gaps().min()),
                 "min_sorted_gap": float(spec.sorted_gaps().min())}


def cmd_observability(cfg, out, h):
    p = cfg.physics
    L = p["L"]
    l = p["l"] if p["l"] is not None else L / 2
    T = cfg.grid["T"]
    ratios = periodic.ratio_ensemble(L, l, T, p["n_max"], draws=p["draws"], seed=cfg.seed)
    single = periodic.observability_ratio(periodic.ModeCoeffs.single(1, p["n_max"]), L, l, T)
    f = write_csv(out / "ratios.csv", ["draw", "ratio"], enumerate(ratios), h)
    return [f], {"max_ratio": float(ratios.max()), "single_mode_ratio": single, "l": l, "T": T}


def cmd_carleman(cfg, out, h):
    p = cfg.physics
    L, T, eps = p["L"], cfg.grid["T"], p["epsilon"]
    scan = carleman.positivity_scan(L, T, epsilon=eps)
    if not scan.found:
        raise NumericalFailure(f"no s on the ladder makes D, E, F positive (last minima {scan.minima[-1]})")
    s = p["s"] if p["s"] is not None else 2 * scan.s0
    n = int(cfg.grid["nx"]) | 1
    ratios = carleman.sample_ratios(L, T, s, nx=n, nt=n, samples=p["draws"], seed=cfg.seed)
    c_fit = 1.05 * float(ratios.max())
    cf = carleman.coefficients_def(carleman.CarlemanWeight(L, T, s), nx=41, nt=41, epsilon=eps)
    X, Tm = np.meshgrid(cf.x, cf.t, indexing="ij")
    files = [write_csv(out / "coefficients.csv", ["x", "t", "D", "E", "F"],
                       zip(X.ravel(), Tm.ravel(), cf.D.ravel(), cf.E.ravel(), cf.F.ravel()), h),
             write_csv(out / "ratios.csv", ["sample", "ratio"], enumerate(ratios), h)]
    return files, {"s0": scan.s0, "s": s, "C_fit": c_fit, "fd_error": cf.fd_error,
                   "margin": scan.margin, "epsilon": eps}


def cmd_hum(cfg, out, h):
    p, T = cfg.physics, cfg.grid["T"]
    L = p["L"]
    t1, t2 = p.get("t1") or 0.3 * T, p.get("t2") or 0.7 * T
    eps = p.get("window") or 0.5 * min(t1, T - t2)
    nx, nt = int(cfg.grid["nx"]), int(cfg.grid["nt"])
    f = p["amplitude"] * control.bump_forcing(nx, nt, L, T, t1, t2)
    sol = control.hum_solve(control.ControlProblem(L, T, t1, t2, eps, f))
    x, t = np.linspace(-L, L, nx), np.linspace(0, T, nt)
    files = [write_csv(out / "control.csv", ["x", "t", "v"], _field_rows(x, t, sol.v), h)]
    return files, {"forward_residual": sol.forward_residual, "support_leakage": sol.support_leakage,
                   "quadratic_cost": sol.quadratic_cost, "dual_pairing": sol.dual_pairing,
                   "regularized": sol.regularized}


def cmd_modes(cfg, out, h):
    p = cfg.physics
    a_vals = np.atleast_1d(np.asarray(p["a_values"], dtype=float))
    order = np.argsort(-a_vals)
    rows_scan = control.noncontrol_scan(a_vals[order], X=p["X"], T=cfg.grid["T"])
    rows = []
    for r in rows_scan:
        m = control.mode_construct(r.a)
        rows.append((r.a, m.b, m.lam, m.lam_printed, *m.cubic_residuals(), r.N, r.D, r.ratio))
    f = write_csv(out / "modes.csv", ["a", "b", "lambda", "lambda_printed", "cubic_residual", "cubic_residual_z1",
                                      "N", "D", "ratio"], rows, h)
    ratios = [r.ratio for r in rows_scan]
    return [f], {"ratio_increasing_as_a_decreases": bool(np.all(np.diff(ratios) > 0))}


def cmd_steer(cfg, out, h):
    p = cfg.physics
    X, T = p["X"], cfg.grid["T"]
    plan = control.SteeringPlan(lambda x: p["amplitude"] * np.exp(-(x - 0.35 * X) ** 2),
                                lambda x: p["amplitude"] * np.exp(-(x - 0.6 * X) ** 2 / 10), X=X, T=T,
                                tau=p["tau"], beta=p["beta"], nx=int(cfg.grid["nx"]), nt=int(cfg.grid["nt"]))
    res = control.steer_pipeline(plan)
    t = plan.t
    stage = [(tj, np.linalg.norm(res.nu1[:, j]), np.linalg.norm(res.nu2[:, j]), np.linalg.norm(res.omega[:, j]),
              np.linalg.norm(res.nu[:, j])) for j, tj in enumerate(t)]
    files = [write_csv(out / "stages.csv", ["t", "nu1", "nu2", "omega", "nu"], stage, h),
             write_csv(out / "nu.csv", ["x", "t", "nu"], _field_rows(plan.x, t, res.nu), h)]
    return files, {"error_initial": res.error_initial, "error_final_weighted": res.error_final,
                   "hum_forward_residual": res.hum.forward_residual, "scheme_residual": res.scheme_residual}


def cmd_energy_audit(cfg, out, h):
    sg, tg = _grids(cfg)
    x = sg.points
    st = linear.halfline_semigroup(cfg.physics["amplitude"] * x**2 * np.exp(-(x - 3) ** 2), sg, tg)
    au = nonlinear.energy_audit(st)
    f = write_csv(out / "energy.csv", ["t_mid", "lhs", "rhs", "residual"],
                  zip(au.time_mid, au.lhs, au.rhs, au.residual), h)
    return [f], {"max_residual": au.max_residual, "monotone": au.monotone}


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def dispatch(cfg: RunConfig) -> int:
    out = Path(cfg.output)
    resolved = cfg.resolved()
    h = config_hash(resolved)
    files, report = HANDLERS[cfg.command](cfg, out, h)
    write_manifest(out, resolved, files, report)
    for k, v in report.items():
        log.info("%s = %s", k, v)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    overrides = {k: v for k, v in vars(args).items() if "." in k}
    overrides["run.command"] = args.command
    try:
        cfg = load_config(args.config, overrides)
    except (ValueError, TypeError) as exc:
        print(f"kdvb-lab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return dispatch(cfg)
    except (NumericalFailure, FloatingPointError, np.linalg.LinAlgError, control.SupportError) as exc:
        print(f"kdvb-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"kdvb-lab: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
