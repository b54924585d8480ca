"""Configuration-driven experiment runner.

One JSON config file, strictly validated (unknown keys are errors), one
subcommand per pipeline:

    geom       distance / geodesic / projection queries from stdin rows
    minimize   boundary-value minimization -> result.json + curve.csv
    shadow     geodesic-shadowing experiment -> shadow.csv + constants.json
    qg         quasi-geodesic fit / check of a curve file -> qg.json
    constants  speed-constant ledger for a given K -> constants.json
    twist      discrete orbit-segment minimization -> sequence.csv + twist.json
    semiconj   per-orbit projection analysis -> orbit.json

Identical config and seed give byte-identical outputs; parallelism (the
--threads flag) only distributes independent solves and collects them in a
fixed order.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .constants import QGConstants, compute_constants
from .curves import SampledCurve
from .errors import ConfigError
from .fuchsian import EquivariantPotential, build_octagon_group, cyclic_test_group
from .geometry import BoundaryPoint, DiskPoint, Geodesic, dist, geodesic_through, project_to_geodesic
from .mechanics import ActionBoundLedger, ELState, MechanicalLagrangian
from .minimize import BVProblem, solve_bvp
from .qg import qg_check, qg_fit
from .semiconjugacy import (
    OrbitRecord,
    asymptotic_geodesic,
    cesaro_Dstar,
    choose_alpha,
    cocycle_a,
    evaluate_qk,
    make_orbit,
    monotonicity_check,
    make_orbit as _make_orbit,
)
from .shadowing import DEFAULT_LAMBDA_GRID, shadow_experiment
from .twist import minimize_W, replay_error

_F = "{:.17g}".format


def _fmt(v):
    if v is None:
        return "nan"
    return _F(float(v))


def _expect(obj, path, required=(), optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ConfigError(f"{path}: missing keys {missing}")


def _num(obj, path, lo=None, hi=None):
    if not isinstance(obj, (int, float)) or isinstance(obj, bool):
        raise ConfigError(f"{path}: expected a number, got {obj!r}")
    v = float(obj)
    if lo is not None and v < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}: must be <= {hi}")
    return v


def _int(obj, path, lo=None):
    if not isinstance(obj, int) or isinstance(obj, bool):
        raise ConfigError(f"{path}: expected an integer, got {obj!r}")
    if lo is not None and obj < lo:
        raise ConfigError(f"{path}: must be >= {lo}")
    return obj


def _point(obj, path):
    if not (isinstance(obj, list) and len(obj) == 2):
        raise ConfigError(f"{path}: expected [x, y]")
    return DiskPoint.from_xy(_num(obj[0], path + "[0]"), _num(obj[1], path + "[1]"))


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config line {e.lineno}, column {e.colno}: {e.msg}") from e
    _expect(
        cfg,
        "config",
        optional=("group", "potential", "solver", "experiment", "seed"),
    )
    return cfg


def build_group(cfg):
    block = cfg.get("group", {"kind": "octagon"})
    _expect(block, "group", required=("kind",), optional=("translation_length",))
    if block["kind"] == "octagon":
        return build_octagon_group()
    if block["kind"] == "cyclic-test":
        return cyclic_test_group(_num(block.get("translation_length", 3.0), "group.translation_length", lo=0.1)), None
    raise ConfigError(f"group.kind: unknown kind {block['kind']!r}")


def build_potential(cfg, group, domain):
    block = cfg.get("potential")
    if block is None:
        return None
    _expect(
        block,
        "potential",
        required=("centers", "depth", "bump_radius"),
        optional=("time_amplitude", "orbit_cutoff"),
    )
    if not isinstance(block["centers"], list) or not block["centers"]:
        raise ConfigError("potential.centers: expected a non-empty list of [x, y]")
    centers = [
        _point(c, f"potential.centers[{i}]") for i, c in enumerate(block["centers"])
    ]
    cutoff = block.get("orbit_cutoff")
    return EquivariantPotential(
        group,
        centers,
        depth=_num(block["depth"], "potential.depth", lo=1e-300),
        bump_radius=_num(block["bump_radius"], "potential.bump_radius", lo=1e-300),
        time_amplitude=_num(
            block.get("time_amplitude", 0.0), "potential.time_amplitude", lo=0.0, hi=1.0 - 1e-12
        ),
        orbit_cutoff=None if cutoff is None else _num(cutoff, "potential.orbit_cutoff", lo=0.0),
        domain=domain,
    )


def solver_params(cfg):
    block = cfg.get("solver", {})
    _expect(block, "solver", optional=("n", "n_per_unit", "tol_grad", "restarts", "max_iter"))
    return {
        "n": None if block.get("n") is None else _int(block["n"], "solver.n", lo=8),
        "n_per_unit": _int(block.get("n_per_unit", 16), "solver.n_per_unit", lo=1),
        "tol_grad": _num(block.get("tol_grad", 1e-9), "solver.tol_grad", lo=0.0),
        "restarts": _int(block.get("restarts", 2), "solver.restarts", lo=0),
        "max_iter": _int(block.get("max_iter", 20000), "solver.max_iter", lo=1),
    }


def _experiment(cfg, subcommand):
    block = cfg.get("experiment")
    if block is None:
        raise ConfigError(f"experiment: required for `{subcommand}`")
    return block


def _json_dump(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    Path(path).write_text(text)


def _geodesic_from(block, path):
    _expect(block, path, optional=("xi_minus", "xi_plus", "through", "origin_param"))
    if "through" in block:
        pts = block["through"]
        if not (isinstance(pts, list) and len(pts) == 2):
            raise ConfigError(f"{path}.through: expected two points")
        g = geodesic_through(_point(pts[0], path), _point(pts[1], path))
    else:
        if "xi_minus" not in block or "xi_plus" not in block:
            raise ConfigError(f"{path}: need xi_minus/xi_plus or through")
        g = Geodesic(
            BoundaryPoint(_num(block["xi_minus"], path + ".xi_minus")),
            BoundaryPoint(_num(block["xi_plus"], path + ".xi_plus")),
        )
    if "origin_param" in block:
        g = g.with_origin_param(_num(block["origin_param"], path + ".origin_param"))
    return g


def run_geom(cfg, out, rng, threads, lines=None):
    lines = sys.stdin if lines is None else lines
    out_lines = []
    for i, raw in enumerate(lines):
        row = raw.strip()
        if not row or row.startswith("#"):
            continue
        parts = row.split()
        kind, args = parts[0], [float(x) for x in parts[1:]]
        if kind == "dist" and len(args) == 4:
            p = DiskPoint.from_xy(args[0], args[1])
            q = DiskPoint.from_xy(args[2], args[3])
            out_lines.append(_F(dist(p, q)))
        elif kind == "geodesic" and len(args) == 4:
            g = geodesic_through(
                DiskPoint.from_xy(args[0], args[1]), DiskPoint.from_xy(args[2], args[3])
            )
            out_lines.append(f"{_F(g.xi_minus.theta)} {_F(g.xi_plus.theta)}")
        elif kind == "project" and len(args) == 4:
            g = Geodesic(BoundaryPoint(args[0]), BoundaryPoint(args[1]))
            foot, s = project_to_geodesic(g, DiskPoint.from_xy(args[2], args[3]))
            out_lines.append(f"{_F(foot.x)} {_F(foot.y)} {_F(s)}")
        else:
            raise ConfigError(f"geom stdin row {i + 1}: cannot parse {row!r}")
    payload = "\n".join(out_lines) + ("\n" if out_lines else "")
    sys.stdout.write(payload)
    if out is not None:
        (Path(out) / "geom.txt").write_text(payload)
    return 0


def _build_lagrangian(cfg):
    group, domain = build_group(cfg)
    potential = build_potential(cfg, group, domain)
    return MechanicalLagrangian(potential), group, domain


def run_minimize(cfg, out, rng, threads):
    exp = _experiment(cfg, "minimize")
    _expect(exp, "experiment", required=("x_a", "x_b", "a", "b"))
    L, _, _ = _build_lagrangian(cfg)
    sp = solver_params(cfg)
    a, b = _num(exp["a"], "experiment.a"), _num(exp["b"], "experiment.b")
    n = sp["n"] or max(64, int(round(sp["n_per_unit"] * (b - a))))
    prob = BVProblem(
        x_a=_point(exp["x_a"], "experiment.x_a"),
        x_b=_point(exp["x_b"], "experiment.x_b"),
        a=a,
        b=b,
        n=n,
        tol_grad=sp["tol_grad"],
        restarts=sp["restarts"],
        max_iter=sp["max_iter"],
    )
    res = solve_bvp(L, prob, rng=rng)
    res.curve.to_csv(Path(out) / "curve.csv")
    _json_dump(
        {
            "x_a": [prob.x_a.x, prob.x_a.y],
            "x_b": [prob.x_b.x, prob.x_b.y],
            "a": a,
            "b": b,
            "n": n,
            "action": res.action,
            "grad_norm": res.grad_norm,
            "el_residual": res.el_residual,
            "restarts_agree": res.restarts_agree,
            "iterations": res.iterations,
            "converged": res.converged,
        },
        Path(out) / "result.json",
    )
    return 0


def run_shadow(cfg, out, rng, threads):
    exp = _experiment(cfg, "shadow")
    _expect(exp, "experiment", required=("K", "N_list", "Gamma"), optional=("lambda_grid",))
    L, _, _ = _build_lagrangian(cfg)
    sp = solver_params(cfg)
    K = _num(exp["K"], "experiment.K", lo=1e-12)
    if not isinstance(exp["N_list"], list) or not exp["N_list"]:
        raise ConfigError("experiment.N_list: expected a non-empty list")
    n_list = [_num(N, "experiment.N_list[]", lo=1e-12) for N in exp["N_list"]]
    gamma = _geodesic_from(exp["Gamma"], "experiment.Gamma")
    grid = exp.get("lambda_grid")
    grid = DEFAULT_LAMBDA_GRID if grid is None else [
        _num(x, "experiment.lambda_grid[]", lo=1.0) for x in grid
    ]
    run = shadow_experiment(
        L,
        gamma,
        K,
        n_list,
        n_per_unit=sp["n_per_unit"],
        tol_grad=sp["tol_grad"],
        restarts=sp["restarts"],
        max_iter=sp["max_iter"],
        lambda_grid=grid,
        rng=rng,
        threads=threads,
    )
    lines = ["N,K,chord_hausdorff,speed_min,speed_max,lambda_fit,epsilon_fit"]
    for r in run.reports:
        lines.append(
            ",".join(
                [
                    _fmt(r.N),
                    _fmt(r.K),
                    _fmt(r.chord_hausdorff),
                    _fmt(r.speed_min),
                    _fmt(r.speed_max),
                    _fmt(r.lambda_fit),
                    _fmt(r.epsilon_fit),
                ]
            )
        )
        r.result.curve.to_csv(Path(out) / f"curve_N{_F(r.N)}.csv")
    (Path(out) / "shadow.csv").write_text("\n".join(lines) + "\n")
    _json_dump(
        {
            "constants": None if run.constants is None else run.constants.to_dict(),
            "kappa_estimate": run.kappa_estimate,
        },
        Path(out) / "constants.json",
    )
    return 0


def run_constants(cfg, out, rng, threads):
    exp = _experiment(cfg, "constants")
    _expect(
        exp,
        "experiment",
        required=("K", "K_dprime"),
        optional=("K_prime", "ledger"),
    )
    if "ledger" in exp:
        _expect(exp["ledger"], "experiment.ledger", required=("C", "V_min"))
        ledger = ActionBoundLedger(
            C=_num(exp["ledger"]["C"], "experiment.ledger.C", lo=1e-12),
            V_min=_num(exp["ledger"]["V_min"], "experiment.ledger.V_min", hi=0.0),
        )
    else:
        L, _, _ = _build_lagrangian(cfg)
        ledger = ActionBoundLedger.from_lagrangian(L)
    kp = exp.get("K_prime")
    const = compute_constants(
        ledger,
        _num(exp["K"], "experiment.K", lo=1e-12),
        K_dprime=_num(exp["K_dprime"], "experiment.K_dprime", lo=1e-12),
        K_prime=None if kp is None else _num(kp, "experiment.K_prime", lo=1e-12),
    )
    _json_dump(const.to_dict(), Path(out) / "constants.json")
    return 0


def run_qg(cfg, out, rng, threads):
    exp = _experiment(cfg, "qg")
    _expect(
        exp,
        "experiment",
        required=("curve_csv", "mode"),
        optional=("lambda_grid", "lambda", "epsilon", "stride"),
    )
    curve = SampledCurve.from_csv(exp["curve_csv"])
    stride = _int(exp.get("stride", 1), "experiment.stride", lo=1)
    if exp["mode"] == "fit":
        grid = exp.get("lambda_grid", list(DEFAULT_LAMBDA_GRID))
        fit = qg_fit(curve, [_num(x, "experiment.lambda_grid[]", lo=1.0) for x in grid], stride)
        payload = {
            "mode": "fit",
            "lambda": fit.lam,
            "epsilon": fit.eps,
            "worst_pair": list(fit.worst_pair),
        }
    elif exp["mode"] == "check":
        if "lambda" not in exp or "epsilon" not in exp:
            raise ConfigError("experiment: check mode needs lambda and epsilon")
        ok, worst = qg_check(
            curve,
            _num(exp["lambda"], "experiment.lambda", lo=1.0),
            _num(exp["epsilon"], "experiment.epsilon", lo=0.0),
            stride,
        )
        payload = {
            "mode": "check",
            "ok": ok,
            "worst_pair": None if worst is None else list(worst),
        }
    else:
        raise ConfigError(f"experiment.mode: unknown mode {exp['mode']!r}")
    _json_dump(payload, Path(out) / "qg.json")
    return 0


def run_twist(cfg, out, rng, threads):
    exp = _experiment(cfg, "twist")
    _expect(exp, "experiment", required=("x_start", "x_end", "length"), optional=("tol",))
    L, _, _ = _build_lagrangian(cfg)
    seq = minimize_W(
        L.potential,
        _point(exp["x_start"], "experiment.x_start"),
        _point(exp["x_end"], "experiment.x_end"),
        _int(exp["length"], "experiment.length", lo=2),
        tol=_num(exp.get("tol", 1e-12), "experiment.tol", lo=0.0),
    )
    rep = replay_error(L.potential, seq)
    lines = ["k,x,y,px,py"]
    for k, (p, m) in enumerate(zip(seq.points, seq.momenta)):
        lines.append(
            f"{k},{_F(p.x)},{_F(p.y)},{_F(m.v.real)},{_F(m.v.imag)}"
        )
    (Path(out) / "sequence.csv").write_text("\n".join(lines) + "\n")
    _json_dump(
        {
            "grad_norm": seq.grad_norm,
            "iterations": seq.iterations,
            "converged": seq.converged,
            "replay_error": rep,
        },
        Path(out) / "twist.json",
    )
    return 0


def run_semiconj(cfg, out, rng, threads):
    exp = _experiment(cfg, "semiconj")
    _expect(
        exp,
        "experiment",
        required=("T_max", "initial"),
        optional=("alpha_step", "alpha_budget", "beta_grid", "constants", "integrator_tol"),
    )
    L, _, _ = _build_lagrangian(cfg)
    init = exp["initial"]
    _expect(init, "experiment.initial", required=("x", "v"), optional=("t",))
    p = _point(init["x"], "experiment.initial.x")
    v = init["v"]
    if not (isinstance(v, list) and len(v) == 2):
        raise ConfigError("experiment.initial.v: expected [vx, vy]")
    state = ELState.from_raw(
        p.z,
        complex(_num(v[0], "experiment.initial.v[0]"), _num(v[1], "experiment.initial.v[1]")),
        _num(init.get("t", 0.0), "experiment.initial.t"),
    )
    T_max = _num(exp["T_max"], "experiment.T_max", lo=1e-6)
    orbit = make_orbit(L, state, T_max)
    geo, delta = asymptotic_geodesic(orbit)
    alpha, margin = choose_alpha(
        [orbit],
        grid_step=_num(exp.get("alpha_step", 0.25), "experiment.alpha_step", lo=1e-9),
        budget=_int(exp.get("alpha_budget", 64), "experiment.alpha_budget", lo=1),
    )
    beta_grid = exp.get("beta_grid", [0.25, 0.5, 1.0, 2.0])
    mono = monotonicity_check(
        orbit, alpha, [_num(b, "experiment.beta_grid[]", lo=1e-12) for b in beta_grid]
    )
    dstar = cesaro_Dstar(orbit)
    payload = {
        "geodesic": {"xi_minus": geo.xi_minus.theta, "xi_plus": geo.xi_plus.theta},
        "estimator_delta": delta,
        "alpha": alpha,
        "alpha_margin": margin,
        "min_sigma_bar_increment": mono.min_increment,
        "raw_sigma_monotone": mono.raw_sigma_monotone,
        "dstar": dstar.estimate,
        "dstar_halfwidth": dstar.halfwidth,
        "qk_flags": None,
    }
    if "constants" in exp:
        cexp = exp["constants"]
        _expect(cexp, "experiment.constants", required=("K", "K_dprime"), optional=("K_prime",))
        ledger = ActionBoundLedger.from_lagrangian(L)
        kp = cexp.get("K_prime")
        const = compute_constants(
            ledger,
            _num(cexp["K"], "experiment.constants.K", lo=1e-12),
            K_dprime=_num(cexp["K_dprime"], "experiment.constants.K_dprime", lo=1e-12),
            K_prime=None if kp is None else _num(kp, "experiment.constants.K_prime", lo=1e-12),
        )
        flags = evaluate_qk(L, orbit, const, rng=rng)
        payload["qk_flags"] = {
            "minimizer_certified": flags.minimizer_certified,
            "window_speed_ok": flags.window_speed_ok,
            "speed_bound_ok": flags.speed_bound_ok,
        }
    orbit.curve.to_csv(Path(out) / "orbit.csv")
    _json_dump(payload, Path(out) / "orbit.json")
    return 0


_RUNNERS = {
    "geom": run_geom,
    "minimize": run_minimize,
    "shadow": run_shadow,
    "qg": run_qg,
    "constants": run_constants,
    "twist": run_twist,
    "semiconj": run_semiconj,
}


def _resolved_ledger(cfg, subcommand, seed, out, threads):
    return {
        "subcommand": subcommand,
        "seed": seed,
        "out": None if out is None else str(out),
        "threads": threads,
        "group": cfg.get("group", {"kind": "octagon"}),
        "potential": cfg.get("potential"),
        "solver": solver_params(cfg),
        "experiment": cfg.get("experiment"),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="hyplag", description="experiment runner for disk Lagrangian dynamics"
    )
    parser.add_argument("subcommand", choices=sorted(_RUNNERS))
    parser.add_argument("--config", required=False, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=None, help="overrides config seed")
    parser.add_argument("--dry-run", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config) if args.config else {}
        seed = args.seed
        if seed is None:
            seed = cfg.get("seed", 0)
            if not isinstance(seed, int) or isinstance(seed, bool):
                raise ConfigError("seed: expected an integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.subcommand != "geom" and args.out is None:
            raise ConfigError("--out is required for this subcommand")
        if args.dry_run:
            # validate everything buildable without running the experiment
            if cfg.get("group") is not None or cfg.get("potential") is not None:
                _build_lagrangian(cfg)
            print(
                json.dumps(
                    _resolved_ledger(cfg, args.subcommand, seed, args.out, args.threads),
                    sort_keys=True,
                    indent=2,
                )
            )
            return 0
        out = args.out
        if out is not None:
            Path(out).mkdir(parents=True, exist_ok=True)
        rng = np.random.default_rng(seed)
        return _RUNNERS[args.subcommand](cfg, out, rng, args.threads)
    except ConfigError as e:
        sys.stderr.write(json.dumps({"error": {"kind": "config", "message": str(e)}}) + "\n")
        return 1
    except Exception as e:  # numeric / runtime failures -> exit 2, machine readable
        payload = {"error": {"kind": type(e).__name__, "message": str(e)}}
        sys.stderr.write(json.dumps(payload) + "\n")
        if args.out is not None:
            try:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                _json_dump(payload, Path(args.out) / "error.json")
            except OSError:
                pass
        return 2


if __name__ == "__main__":
    sys.exit(main())
