"""Experiment drivers: accuracy sweeps, coarsening dynamics, kernel fuzzing.

Every mode is deterministic given (config, seed) and emits byte-stable CSVs.
Configuration comes from a flat key=value file plus command-line overrides;
every knob has the reference settings from the accuracy/coarsening studies as
its documented default.  Exit code is nonzero whenever a monitor reports a
violation.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np
from scipy.special import gamma as gamma_fn

from tfac.grid import Grid2D
from tfac.kernels import KernelWorkspace
from tfac.mesh import AdaptiveConfig, example1_mesh, graded_mesh, random_mesh, solvability_cap
from tfac.stepper import ManufacturedCase, ModelParams, RunConfig, run

__all__ = ["main", "converge_experiment", "coarsen_experiment", "kernels_experiment"]


# -- flat config files --------------------------------------------------------

def parse_config_file(path) -> dict:
    """key = value lines; '#' starts a comment; keys use underscores."""
    out = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _floats(s: str) -> list[float]:
    return [float(x) for x in str(s).split(",") if x != ""]


def _ints(s: str) -> list[int]:
    return [int(x) for x in str(s).split(",") if x != ""]


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit command-line values."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = parse_config_file(args.config)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


# -- converge mode ------------------------------------------------------------

CONVERGE_DEFAULTS = {
    "alpha": 0.4,
    "sigma": 0.4,
    "kappa": 1.0,
    "eps2": 0.5,          # interface width squared
    "T": 1.0,
    "gamma": "4",
    "N": "40,80,160,320",
    "grid": 64,
    "seed": 20201224,
    "mesh": "composite",  # composite | graded
    "ref_N": 4096,
    "ref_gamma": 6.0,
    "full": False,
    "fp_tol": 1e-12,
    "fp_max_iter": 400,
    "out": "out_converge",
}


def _manufactured_run(grid, params, case, mesh, *, track_exact,
                      fp_tol=1e-12, fp_max_iter=400):
    """Run one accuracy case; returns (final field, max L2 error vs exact, violations)."""
    state = {"err": 0.0}
    observer = None
    if track_exact:
        X, Y = grid.coords()
        mode = np.sin(X) * np.sin(Y)
        scale = 1.0 / gamma_fn(1.0 + case.sigma)

        def observer(n, t, phi):
            err = grid.norm(phi - (t**case.sigma * scale) * mode)
            state["err"] = max(state["err"], err)

    res = run(RunConfig(
        grid=grid,
        params=params.with_force(case.bind(params)),
        phi0=np.zeros((grid.M, grid.M)),
        mesh=mesh,
        record_energy=False,
        fp_tol=fp_tol,
        fp_max_iter=fp_max_iter,
        observer=observer,
    ))
    return res.phi, state["err"], res.violation_count


def converge_experiment(cfg: dict, log=print) -> tuple[list[dict], int]:
    """Accuracy sweep; returns (table rows, violation count).

    Default desk scale measures the final-time L2 distance to a fine-time
    reference run on the same grid (temporal error only); --full measures the
    max-over-levels L2 error against the exact solution on a 512^2 grid.
    """
    alpha = float(cfg["alpha"])
    sigma = float(cfg["sigma"])
    full = bool(cfg["full"])
    M = 512 if full else int(cfg["grid"])
    grid = Grid2D(M=M)
    params = ModelParams(alpha=alpha, kappa=float(cfg["kappa"]), eps=math.sqrt(float(cfg["eps2"])))
    case = ManufacturedCase(sigma=sigma)
    T = float(cfg["T"])
    seed = int(cfg["seed"])
    out_dir = str(cfg["out"])
    os.makedirs(out_dir, exist_ok=True)

    violations = 0
    phi_ref = None
    if not full:
        ref_mesh = graded_mesh(T, int(cfg["ref_N"]), float(cfg["ref_gamma"]))
        log(f"# reference run: graded gamma={cfg['ref_gamma']} N={cfg['ref_N']} M={M}")
        phi_ref, _, bad = _manufactured_run(grid, params, case, ref_mesh, track_exact=False,
                                            fp_tol=float(cfg["fp_tol"]),
                                            fp_max_iter=int(cfg["fp_max_iter"]))
        violations += bad

    rows = []
    for gamma in _floats(cfg["gamma"]):
        prev = None
        for N in _ints(cfg["N"]):
            if str(cfg["mesh"]) == "graded":
                mesh = graded_mesh(T, N, gamma)
            else:
                mesh = example1_mesh(N, gamma, T, seed)
            phi_T, err_exact, bad = _manufactured_run(grid, params, case, mesh, track_exact=full,
                                                       fp_tol=float(cfg["fp_tol"]),
                                                       fp_max_iter=int(cfg["fp_max_iter"]))
            violations += bad
            err = err_exact if full else grid.norm(phi_T - phi_ref)
            row = {"gamma": gamma, "N": N, "tau_max": mesh.tau_max, "error": err, "order": float("nan")}
            if prev is not None and err > 0.0 and prev["error"] > 0.0:
                row["order"] = math.log(prev["error"] / err) / math.log(prev["tau_max"] / row["tau_max"])
            rows.append(row)
            prev = row
            log(f"gamma={gamma:g} N={N:4d} tau={row['tau_max']:.3e} "
                f"e(N)={err:.3e} order={row['order']:.2f}")
        path = os.path.join(out_dir, f"converge_a{alpha:g}_g{gamma:g}.csv")
        with open(path, "w") as f:
            f.write("N,tau_max,error,order\n")
            for row in rows:
                if row["gamma"] == gamma:
                    f.write("%d,%.17g,%.17g,%.17g\n"
                            % (row["N"], row["tau_max"], row["error"], row["order"]))
    return rows, violations


# -- coarsen mode ---------------------------------------------------------------

COARSEN_DEFAULTS = {
    "alpha": 0.7,
    "kappa": 1.0,
    "eps": 0.05,
    "grid": 128,
    "T": 300.0,
    "T0": 0.01,
    "N0": 30,
    "gamma0": 3.0,
    "tau_max": 0.1,
    "tau_min": 1e-3,
    "eta": 1e3,
    "amplitude": 1e-3,
    "snapshots": "10,50,100,300",
    "seed": 20201224,
    "enforce_cap": True,
    "fp_tol": 1e-12,
    "fp_max_iter": 200,
    "out": "out_coarsen",
}


def random_initial_field(M: int, amplitude: float, seed: int) -> np.ndarray:
    """Seeded uniform values in [-amplitude, amplitude] at each grid point."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-amplitude, amplitude, size=(M, M))


def coarsen_experiment(cfg: dict, log=print):
    """Coarsening dynamics with a graded start and adaptive tail; returns RunResult."""
    M = int(cfg["grid"])
    grid = Grid2D(M=M)
    params = ModelParams(alpha=float(cfg["alpha"]), kappa=float(cfg["kappa"]), eps=float(cfg["eps"]))
    T, T0 = float(cfg["T"]), float(cfg["T0"])
    enforce_cap = str(cfg["enforce_cap"]).lower() not in ("false", "0", "no")
    prefix = graded_mesh(T0, int(cfg["N0"]), float(cfg["gamma0"]))
    phi0 = random_initial_field(M, float(cfg["amplitude"]), int(cfg["seed"]))
    out_dir = str(cfg["out"])
    os.makedirs(out_dir, exist_ok=True)
    snap_times = tuple(t for t in _floats(cfg["snapshots"]) if 0.0 < t <= T)

    common = dict(
        grid=grid, params=params, phi0=phi0,
        record_energy=True,
        snapshot_times=snap_times, snapshot_dir=out_dir,
        records_path=os.path.join(out_dir, "records.csv"),
        cap_mode="strict" if enforce_cap else "override",
        fp_tol=float(cfg["fp_tol"]),
        fp_max_iter=int(cfg["fp_max_iter"]),
    )
    if T <= T0 * (1.0 + 1e-12):
        config = RunConfig(mesh=prefix, **common)
    else:
        adaptive = AdaptiveConfig(
            tau_max=float(cfg["tau_max"]), tau_min=float(cfg["tau_min"]),
            eta=float(cfg["eta"]), enforce_cap=enforce_cap,
        )
        config = RunConfig(prefix=prefix, adaptive=adaptive, T=T, **common)
    result = run(config)
    result.mesh.dump_csv(os.path.join(out_dir, "mesh.csv"))
    cap = solvability_cap(params.alpha, params.kappa)
    log(f"# levels={result.mesh.N} cap={cap:.4g} "
        f"cap_binding={len(result.cap_binding_levels)} violations={result.violation_count}")
    for name, levels in result.violations.items():
        if levels:
            log(f"#   {name}: {len(levels)} levels (first at n={levels[0]})")
    return result


# -- kernels mode ------------------------------------------------------------------

KERNELS_DEFAULTS = {
    "alpha_list": "0.1,0.3,0.5,0.7,0.9",
    "N_max": 100,
    "trials": 100,
    "quad_samples": 0,
    "quad_N_max": 40,
    "seed": 20201224,
    "tol": 1e-11,
    "out": "",
}


def kernel_property_report(ws: KernelWorkspace, t_n: float) -> dict:
    """Worst identity residuals and sign/monotonicity margins through level n."""
    from tfac.kernels import omega

    n = ws.n
    worst = {"orth": 0.0, "mutual": 0.0, "comp": 0.0,
             "a_pos": math.inf, "a_dec": math.inf, "a_shift": math.inf, "a_prod": math.inf,
             "theta_head": math.inf, "theta_tail": math.inf, "theta_sum": math.inf,
             "p_min": math.inf, "p_sum_margin": math.inf,
             "zeta_min": math.inf, "zeta_dec": math.inf}
    nodes = ws.nodes
    for m in range(1, n + 1):
        rep = ws.check_identities(m)
        worst["orth"] = max(worst["orth"], rep.orthogonality)
        worst["mutual"] = max(worst["mutual"], rep.mutual)
        worst["comp"] = max(worst["comp"], rep.complementarity)
        a = ws.a_coeffs(m)
        worst["a_pos"] = min(worst["a_pos"], a.min())
        if m >= 2:
            worst["a_dec"] = min(worst["a_dec"], np.min(a[:-1] - a[1:]))
            a_prev = ws.a_coeffs(m - 1)
            # a^(m-1)_{j-1} > a^(m)_j for 1 <= j <= m-1
            worst["a_shift"] = min(worst["a_shift"], np.min(a_prev[: m - 1] - a[1:m]))
            if m >= 3:
                # a^(m-1)_{j-1} a^(m)_{j+1} > a^(m-1)_j a^(m)_j for 1 <= j <= m-2
                lhs = a_prev[: m - 2] * a[2:m]
                rhs = a_prev[1 : m - 1] * a[1 : m - 1]
                worst["a_prod"] = min(worst["a_prod"], np.min(lhs - rhs))
            th = ws.theta_coeffs(m)
            worst["theta_head"] = min(worst["theta_head"], th[0])
            worst["theta_tail"] = min(worst["theta_tail"], np.min(-th[1:]))
            worst["theta_sum"] = min(worst["theta_sum"], th.sum())
            zeta = ws.zeta_coeffs(m)
            worst["zeta_min"] = min(worst["zeta_min"], zeta.min())
            # zeta decreases in its subscript, so -diff is the margin
            worst["zeta_dec"] = min(worst["zeta_dec"], np.min(-np.diff(zeta)))
        p = ws.p_coeffs(m)
        worst["p_min"] = min(worst["p_min"], p.min())
        worst["p_sum_margin"] = min(
            worst["p_sum_margin"], omega(1.0 + ws.alpha, float(nodes[m])) - p.sum()
        )
    return worst


def kernels_experiment(cfg: dict, log=print) -> tuple[dict, int]:
    """Fuzz the kernel identities and sign properties over random meshes."""
    rng = np.random.Generator(np.random.PCG64(int(cfg["seed"])))
    tol = float(cfg["tol"])
    alphas = _floats(cfg["alpha_list"])
    trials = int(cfg["trials"])
    N_max = int(cfg["N_max"])
    worst_all = None
    failures = 0
    for trial in range(trials):
        mesh = random_mesh(rng, N_max)
        for alpha in alphas:
            ws = KernelWorkspace.from_mesh(mesh, alpha)
            worst = kernel_property_report(ws, mesh.T)
            if worst_all is None:
                worst_all = dict(worst)
            else:
                for key, val in worst.items():
                    agg = max if key in ("orth", "mutual", "comp") else min
                    worst_all[key] = agg(worst_all[key], val)
            if max(worst["orth"], worst["mutual"], worst["comp"]) >= tol:
                failures += 1
            if min(worst["a_pos"], worst["a_dec"], worst["a_shift"], worst["a_prod"],
                   worst["theta_head"], worst["theta_tail"], worst["theta_sum"]) <= 0.0:
                failures += 1
            if worst["p_min"] < 0.0 or worst["p_sum_margin"] < -tol:
                failures += 1

    if worst_all is None:
        worst_all = {}
    quad_samples = int(cfg["quad_samples"])
    min_slack = math.inf
    if quad_samples:
        per_mesh = 50
        n_cap = int(cfg["quad_N_max"])
        done = 0
        while done < quad_samples:
            mesh = random_mesh(rng, n_cap, N=n_cap)
            alpha = float(rng.uniform(0.05, 0.95))
            ws = KernelWorkspace.from_mesh(mesh, alpha)
            for _ in range(min(per_mesh, quad_samples - done)):
                n = int(rng.integers(1, n_cap + 1))
                w = rng.normal(0.0, 1.0, size=n)
                min_slack = min(min_slack, ws.quadratic_bound_check(w, n))
                done += 1
        if min_slack < -1e-12:
            failures += 1
        worst_all["quad_min_slack"] = min_slack

    log(f"# kernels fuzz: trials={trials} alphas={alphas} N_max={N_max} failures={failures}")
    for key, val in sorted(worst_all.items()):
        log(f"#   {key}: {val:.6e}")
    if str(cfg["out"]):
        os.makedirs(str(cfg["out"]), exist_ok=True)
        with open(os.path.join(str(cfg["out"]), "kernels_report.csv"), "w") as f:
            f.write("property,value\n")
            for key, val in sorted(worst_all.items()):
                f.write("%s,%.17g\n" % (key, val))
    return worst_all, failures


# -- entry point ------------------------------------------------------------------

def _add_common(sub, defaults):
    sub.add_argument("--config", help="flat key=value config file")
    for key, val in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            sub.add_argument(flag, action="store_const", const=True, default=None)
        elif isinstance(val, int):
            sub.add_argument(flag, type=int, default=None)
        elif isinstance(val, float):
            sub.add_argument(flag, type=float, default=None)
        else:
            sub.add_argument(flag, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfac",
        description="Variable-step L1 experiments for the time-fractional Allen-Cahn equation",
    )
    subs = parser.add_subparsers(dest="mode", required=True)
    _add_common(subs.add_parser("converge", help="accuracy sweep (manufactured solution)"),
                CONVERGE_DEFAULTS)
    _add_common(subs.add_parser("coarsen", help="coarsening dynamics with adaptive steps"),
                COARSEN_DEFAULTS)
    _add_common(subs.add_parser("kernels", help="kernel identity and sign-property fuzzing"),
                KERNELS_DEFAULTS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.mode == "converge":
        cfg = _merge(args, CONVERGE_DEFAULTS)
        rows, violations = converge_experiment(cfg)
        return 1 if violations else 0
    if args.mode == "coarsen":
        cfg = _merge(args, COARSEN_DEFAULTS)
        result = coarsen_experiment(cfg)
        return 1 if result.violation_count else 0
    cfg = _merge(args, KERNELS_DEFAULTS)
    _, failures = kernels_experiment(cfg)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
