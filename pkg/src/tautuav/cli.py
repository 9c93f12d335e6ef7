"""Command-line entry point and the flat configuration / CSV interfaces.

Configuration files are UTF-8 ``key = value`` lines; ``#`` starts a comment
and blank lines are ignored.  Values are SI floats; angle-valued keys also
accept ``pi`` expressions such as ``pi/8``, ``-pi/20`` or ``pi*9/10``.
Missing keys fall back to the shipped defaults (the reference experiment's
parameter set).  Derivative gains are derived from the stiffness gains and
the damping ratio unless given explicitly, in which case they must satisfy
the gain invariants.

Subcommands::

    simulate        run one scenario, write the trajectory CSV, print the
                    invariant monitor report
    plan            build the waypoint chain and print/write it as CSV
    certify         compute and print the gain certificate report
    attainable-set  sample the admissible pitch band per elevation as CSV
    sweep           run simulate for every config file in a directory

Exit codes: 0 when the requested run completed and every monitored
assertion passed, 2 when it completed but a constraint was violated (or a
certificate failed), 1 for configuration or validation errors.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, control, equilibria, governor
from .analysis import mission_radial_envelope, radial_envelope
from .control import GainConfig
from .equilibria import Setpoint
from .plant import FullState, PlantParams
from .sim import (ScenarioMode, SimConfig, TrajectoryLog, monitor_invariants,
                  run_scenario)


class ConfigError(ValueError):
    """Configuration parsing or validation failure; message names the cause."""


@dataclass(frozen=True)
class RunManifest:
    """Resolved invocation: subcommand, config source, output directory, seed."""

    subcommand: str
    config_path: str | None
    out_dir: str | None
    seed: int


_PI_EXPR = re.compile(
    r"^(?P<sign>[+-]?)pi(?:\*(?P<num>[0-9]+(?:\.[0-9]*)?))?"
    r"(?:/(?P<den>[0-9]+(?:\.[0-9]*)?))?$")

_PLANT_KEYS = ("m", "j_uav", "i_winch", "rho", "g")
_GAIN_KEYS = ("k_pr", "k_pa", "k_pt", "zeta", "k_dr", "k_da", "k_dt",
              "lambda1", "lambda2", "eps", "nu", "theta_tilde_max",
              "gamma_out", "hover_tension")
_STATE_KEYS = ("r0", "r_dot0", "alpha0", "alpha_dot0", "theta0", "theta_dot0")
_REF_KEYS = ("r_bar", "alpha_bar", "theta_bar")
_SIM_KEYS = ("dt", "t_final", "mode", "convergence_tol", "convergence_dwell",
             "tension_min")
_ALL_KEYS = frozenset(_PLANT_KEYS + _GAIN_KEYS + _STATE_KEYS + _REF_KEYS
                      + _SIM_KEYS)

_DEFAULTS: dict[str, float | str] = {
    "m": 2.0, "j_uav": 0.015, "i_winch": 0.01, "rho": 0.1, "g": 9.81,
    "k_pr": 30.0, "k_pa": 30.0, "k_pt": 200.0, "zeta": 0.9,
    "lambda1": 0.4, "lambda2": 2.0, "eps": 1.0, "nu": 0.5,
    "theta_tilde_max": 0.8, "gamma_out": 2.0,
    "r0": 1.0, "r_dot0": 0.0, "alpha0": math.pi / 8.0, "alpha_dot0": 0.0,
    "theta0": math.pi / 10.0, "theta_dot0": 0.0,
    "r_bar": 0.5, "alpha_bar": math.pi * 9.0 / 10.0,
    "theta_bar": -math.pi / 20.0,
    "dt": 1e-3, "t_final": 10.0, "mode": "ideal-attitude",
    "convergence_tol": 1e-3, "convergence_dwell": 0.5, "tension_min": 0.0,
}


def parse_value(text: str) -> float:
    """Parse a numeric config value: a float or a ``pi`` expression."""
    token = text.strip()
    m = _PI_EXPR.match(token)
    if m:
        value = math.pi
        if m.group("num"):
            value *= float(m.group("num"))
        if m.group("den"):
            den = float(m.group("den"))
            if den == 0.0:
                raise ConfigError(f"division by zero in value {token!r}")
            value /= den
        return -value if m.group("sign") == "-" else value
    try:
        return float(token)
    except ValueError:
        raise ConfigError(f"cannot parse numeric value {token!r}") from None


def _parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for key {key!r}")
        pairs[key] = value
    return pairs


def parse_config(text: str) -> tuple[PlantParams, GainConfig, SimConfig]:
    """Parse a flat config document into the validated parameter bundle."""
    pairs = _parse_pairs(text)

    def num(key: str) -> float:
        if key in pairs:
            return parse_value(pairs[key])
        return float(_DEFAULTS[key])  # type: ignore[arg-type]

    try:
        plant = PlantParams(**{k: num(k) for k in _PLANT_KEYS})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    zeta = num("zeta")
    k_pr, k_pa, k_pt = num("k_pr"), num("k_pa"), num("k_pt")
    eps = num("eps")
    derived = {
        "k_dr": 2.0 * math.sqrt(k_pr) if k_pr > 0 else -1.0,
        "k_da": 2.0 * zeta * math.sqrt(k_pa) if k_pa > 0 else -1.0,
        "k_dt": 2.0 * zeta * math.sqrt(k_pt) if k_pt > 0 else -1.0,
        "hover_tension": equilibria.default_hover_tension(eps),
    }
    try:
        gains = GainConfig(
            k_pr=k_pr, k_pa=k_pa, k_pt=k_pt, zeta=zeta, eps=eps,
            k_dr=parse_value(pairs["k_dr"]) if "k_dr" in pairs else derived["k_dr"],
            k_da=parse_value(pairs["k_da"]) if "k_da" in pairs else derived["k_da"],
            k_dt=parse_value(pairs["k_dt"]) if "k_dt" in pairs else derived["k_dt"],
            lambda1=num("lambda1"), lambda2=num("lambda2"), nu=num("nu"),
            theta_tilde_max=num("theta_tilde_max"), gamma_out=num("gamma_out"),
            hover_tension=(parse_value(pairs["hover_tension"])
                           if "hover_tension" in pairs
                           else derived["hover_tension"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    mode_text = str(pairs.get("mode", _DEFAULTS["mode"]))
    try:
        mode = ScenarioMode(mode_text)
    except ValueError:
        valid = ", ".join(m.value for m in ScenarioMode)
        raise ConfigError(f"mode must be one of {valid}, got {mode_text!r}") from None
    try:
        initial = FullState.initial(
            r=num("r0"), alpha=num("alpha0"), theta=num("theta0"),
            r_dot=num("r_dot0"), alpha_dot=num("alpha_dot0"),
            theta_dot=num("theta_dot0"))
        reference = Setpoint(r_bar=num("r_bar"), alpha_bar=num("alpha_bar"),
                             theta_bar=num("theta_bar"))
        sim_cfg = SimConfig(
            dt=num("dt"), t_final=num("t_final"), mode=mode,
            initial=initial, reference=reference,
            convergence_tol=num("convergence_tol"),
            convergence_dwell=num("convergence_dwell"),
            tension_min=num("tension_min"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not equilibria.is_attainable(reference, gains.eps, plant):
        raise ConfigError(
            f"reference ({reference.r_bar}, {reference.alpha_bar}, "
            f"{reference.theta_bar}) is not attainable with eps={gains.eps}")
    return plant, gains, sim_cfg


def emit_config(p: PlantParams, g: GainConfig, cfg: SimConfig) -> str:
    """Render a bundle back to config text; re-parsing yields an identical bundle."""
    values: dict[str, str] = {}
    for key in _PLANT_KEYS:
        values[key] = repr(getattr(p, key))
    for key in _GAIN_KEYS:
        values[key] = repr(getattr(g, key))
    s, ref = cfg.initial, cfg.reference
    values.update({
        "r0": repr(s.r), "r_dot0": repr(s.r_dot), "alpha0": repr(s.alpha),
        "alpha_dot0": repr(s.alpha_dot), "theta0": repr(s.theta),
        "theta_dot0": repr(s.theta_dot),
        "r_bar": repr(ref.r_bar), "alpha_bar": repr(ref.alpha_bar),
        "theta_bar": repr(ref.theta_bar),
        "dt": repr(cfg.dt), "t_final": repr(cfg.t_final),
        "mode": cfg.mode.value,
        "convergence_tol": repr(cfg.convergence_tol),
        "convergence_dwell": repr(cfg.convergence_dwell),
        "tension_min": repr(cfg.tension_min),
    })
    return "\n".join(f"{k} = {values[k]}" for k in sorted(values)) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def emit_log(log: TrajectoryLog, dest: Path) -> None:
    """Write a trajectory log as CSV with events appended as comment lines."""
    cols = log.columns()
    lines = [",".join(TrajectoryLog.COLUMNS)]
    for i in range(len(log)):
        fields = [_fmt(float(col[i])) for col in cols[:-1]]
        fields.append(str(int(cols[-1][i])))
        lines.append(",".join(fields))
    ev = log.events
    if ev.first_tension_violation is not None:
        lines.append(f"# tension_violation t={ev.first_tension_violation:.4f}")
    for ts in ev.switch_times:
        lines.append(f"# switch t={_fmt(ts)}")
    if ev.convergence_time is not None:
        lines.append(f"# convergence t={_fmt(ev.convergence_time)}")
    try:
        dest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write trajectory log to {dest}: {exc}") from exc


def parse_log(text: str) -> tuple[dict[str, np.ndarray], list[str]]:
    """Read back an emitted CSV: column arrays plus the raw event comments."""
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    rows = []
    comments = []
    for line in lines[1:]:
        if line.startswith("#"):
            comments.append(line)
        elif line.strip():
            rows.append([float(v) for v in line.split(",")])
    data = np.asarray(rows)
    return {name: data[:, i] for i, name in enumerate(header)}, comments


def attainable_set_sample(eps: float, grid: int, p: PlantParams) -> np.ndarray:
    """Sample the admissible pitch interval per elevation grid point.

    Returns rows ``(alpha_bar, theta_min, theta_max)``; the vertical row is
    the singleton ``(pi/2, 0, 0)``.
    """
    if grid < 2:
        raise ValueError(f"grid must be at least 2, got {grid}")
    alphas = np.linspace(0.0, math.pi, grid)
    rows = np.zeros((grid, 3))
    for i, a in enumerate(alphas):
        rows[i, 0] = a
        if a == math.pi / 2.0:
            continue
        lim = equilibria.theta_limit(float(a), eps, p)
        if a < math.pi / 2.0:
            rows[i, 1], rows[i, 2] = lim, math.pi / 2.0 - a
        else:
            rows[i, 1], rows[i, 2] = math.pi / 2.0 - a, lim
    return rows


def _write_or_print(text: str, out_dir: str | None, filename: str) -> None:
    if out_dir is None:
        print(text)
    else:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        (path / filename).write_text(text, encoding="utf-8")


def _load_config(path: str | None) -> tuple[PlantParams, GainConfig, SimConfig]:
    if path is None:
        return parse_config("")
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _initial_error_norms(p: PlantParams, g: GainConfig,
                         cfg: SimConfig) -> tuple[float, float]:
    state = cfg.initial
    ref = cfg.reference
    r_ddot = control.radial_acceleration(state.r, state.r_dot, ref.r_bar, g)
    _, theta_c, _ = control.outer_loop(state, ref, r_ddot, g, p)
    x_alpha = math.hypot(state.alpha - ref.alpha_bar, state.alpha_dot)
    x_theta = math.hypot(state.theta - theta_c, state.theta_dot)
    return x_alpha, x_theta


def _certificate(p: PlantParams, g: GainConfig, cfg: SimConfig,
                 estimate: bool):
    env = mission_radial_envelope(
        cfg.initial.r, cfg.initial.r_dot,
        [cfg.initial.r, cfg.reference.r_bar], g)
    if estimate:
        gamma_out = analysis.estimate_gamma_out(cfg.reference, g, p)
        source = "empirical"
    else:
        gamma_out = g.gamma_out
        source = "configured"
    x_alpha0, x_theta0 = _initial_error_norms(p, g, cfg)
    cert = analysis.small_gain_certificate(
        g, gamma_out, x_alpha0, x_theta0, env.r_min,
        gamma_out_source=source)
    return cert, env, (x_alpha0, x_theta0)


def _certificate_report(p: PlantParams, g: GainConfig, cfg: SimConfig,
                        estimate: bool) -> tuple[str, bool]:
    cert, env, (xa0, xt0) = _certificate(p, g, cfg, estimate)
    budget_root = analysis.theta_budget(g.zeta, g.nu)
    budget_ok = g.theta_tilde_max > budget_root
    lambda1_ok = g.lambda1 < cert.lambda1_max
    gin_bound = analysis.gamma_in_bound(g)
    radii = governor.ball_radii(cfg.reference, g, p, cert, env)
    floors = governor.min_radii(g, p, cert, env)
    eq = equilibria.equilibrium_data(cfg.reference, p,
                                     hover_tension=g.hover_tension)
    overall = cert.small_gain_ok and budget_ok and lambda1_ok
    lines = [
        f"reference_t_bar: {eq.t_bar:.6g}",
        f"reference_u1_bar: {eq.u1_bar:.6g}",
        f"gamma_in_l1: {cert.gamma_in:.6g}",
        f"gamma_in_bound: {gin_bound:.6g}",
        f"gamma_in_slack: {gin_bound - cert.gamma_in:.6g}",
        f"gamma_out: {cert.gamma_out:.6g}",
        f"gamma_out_source: {cert.gamma_out_source}",
        f"gain_product: {cert.gamma_in * cert.gamma_out:.6g}",
        f"k_pt: {g.k_pt:.6g}",
        f"k_pt_required: {cert.gamma_out ** 2 / g.zeta ** 2:.6g}",
        f"theta_budget_root: {budget_root:.6g}",
        f"theta_tilde_max: {g.theta_tilde_max:.6g}",
        f"theta_budget_ok: {budget_ok}",
        f"r_restriction: {cert.r_restriction:.6g}",
        f"lambda1: {g.lambda1:.6g}",
        f"lambda1_max: {cert.lambda1_max:.6g}",
        f"lambda1_ok: {lambda1_ok}",
        f"envelope_r_min: {env.r_min:.6g}",
        f"envelope_r_max: {env.r_max:.6g}",
        f"envelope_vel_bound: {env.vel_bound:.6g}",
        f"x_alpha0: {xa0:.6g}",
        f"x_theta0: {xt0:.6g}",
        f"init_ball: {cert.init_ball:.6g}",
        f"init_ok: {cert.init_ok}",
        f"bound_alpha: {cert.bound_alpha:.6g}",
        f"bound_theta: {cert.bound_theta:.6g}",
        f"small_gain_ok: {cert.small_gain_ok}",
        f"reference_dx_alpha: {radii[0]:.6g}",
        f"reference_dx_theta: {radii[1]:.6g}",
        f"floor_delta_alpha: {floors[0]:.6g}",
        f"floor_delta_theta: {floors[1]:.6g}",
        f"certificate: {'pass' if overall else 'FAIL'}",
    ]
    return "\n".join(lines) + "\n", overall


def plan_csv(plan: governor.WaypointPlan) -> str:
    """Render a waypoint plan: index, s, r_bar, alpha_bar, theta_bar, dx_alpha, dx_theta."""
    lines = ["index,s,r_bar,alpha_bar,theta_bar,dx_alpha,dx_theta"]
    for i, wp in enumerate(plan.waypoints):
        lines.append(",".join([str(i), _fmt(wp.s), _fmt(wp.sp.r_bar),
                               _fmt(wp.sp.alpha_bar), _fmt(wp.sp.theta_bar),
                               _fmt(wp.dx_alpha), _fmt(wp.dx_theta)]))
    return "\n".join(lines) + "\n"


def build_plan(p: PlantParams, g: GainConfig, cfg: SimConfig,
               estimate: bool = False) -> tuple[governor.WaypointPlan, object]:
    """Construct the governor plan for a configured run; returns (plan, cert)."""
    start = Setpoint(cfg.initial.r, cfg.initial.alpha, cfg.initial.theta)
    cert, env, _ = _certificate(p, g, cfg, estimate)
    plan = governor.backtrack_plan(start, cfg.reference, g, p, cert, env)
    return plan, cert


def _run_simulate(p: PlantParams, g: GainConfig, cfg: SimConfig,
                  out_dir: str | None) -> int:
    if cfg.mode is ScenarioMode.INNER_WITH_RG:
        plan, _ = build_plan(p, g, cfg)
        env = mission_radial_envelope(
            cfg.initial.r, cfg.initial.r_dot,
            [cfg.initial.r] + [w.sp.r_bar for w in plan.waypoints], g)
    else:
        plan = None
        env = radial_envelope(cfg.initial.r, cfg.initial.r_dot,
                              cfg.reference.r_bar, g)
    log = run_scenario(cfg, g, p, plan=plan)
    report = monitor_invariants(log, g, env, p, tension_min=cfg.tension_min)
    if out_dir is not None:
        path = Path(out_dir)
        path.mkdir(parents=True, exist_ok=True)
        emit_log(log, path / f"trajectory_{cfg.mode.value}.csv")
    print(report.render())
    return 0 if report.all_passed else 2


def _apply_overrides(cfg: SimConfig, args) -> SimConfig:
    changes = {}
    if getattr(args, "mode", None):
        changes["mode"] = ScenarioMode(args.mode)
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "t_final", None) is not None:
        changes["t_final"] = args.t_final
    if not changes:
        return cfg
    return SimConfig(
        dt=changes.get("dt", cfg.dt),
        t_final=changes.get("t_final", cfg.t_final),
        mode=changes.get("mode", cfg.mode),
        initial=cfg.initial, reference=cfg.reference,
        convergence_tol=cfg.convergence_tol,
        convergence_dwell=cfg.convergence_dwell,
        tension_min=cfg.tension_min)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="config file (defaults apply when omitted)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, default=0,
                     help="seed for randomized validation sampling")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tautuav",
        description="Tethered-UAV taut-cable simulation and verification toolkit")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sim_p = subs.add_parser("simulate", help="run one closed-loop scenario")
    _add_common(sim_p)
    sim_p.add_argument("--mode", choices=[m.value for m in ScenarioMode])
    sim_p.add_argument("--dt", type=float)
    sim_p.add_argument("--t-final", dest="t_final", type=float)

    plan_p = subs.add_parser("plan", help="build and print the waypoint chain")
    _add_common(plan_p)
    plan_p.add_argument("--estimate-gamma-out", action="store_true",
                        help="estimate gamma_out empirically instead of using "
                             "the configured value")
    plan_p.add_argument("--validate-samples", type=int, default=0,
                        help="additionally certify N random path points per segment")

    cert_p = subs.add_parser("certify", help="print the gain certificate report")
    _add_common(cert_p)
    cert_p.add_argument("--estimate-gamma-out", action="store_true")

    set_p = subs.add_parser("attainable-set",
                            help="sample the admissible pitch band as CSV")
    _add_common(set_p)
    set_p.add_argument("--eps", type=float, default=None,
                       help="tension margin (defaults to the config value)")
    set_p.add_argument("--grid", type=int, default=181)

    sweep_p = subs.add_parser("sweep", help="run every config file in a directory")
    _add_common(sweep_p)
    sweep_p.add_argument("--mode", choices=[m.value for m in ScenarioMode])
    sweep_p.add_argument("--dt", type=float)
    sweep_p.add_argument("--t-final", dest="t_final", type=float)

    args = parser.parse_args(argv)
    manifest = RunManifest(subcommand=args.subcommand, config_path=args.config,
                           out_dir=args.out, seed=args.seed)

    try:
        if manifest.subcommand == "sweep":
            return _cmd_sweep(manifest, args)
        p, g, cfg = _load_config(manifest.config_path)
        if manifest.subcommand == "simulate":
            return _run_simulate(p, g, _apply_overrides(cfg, args),
                                 manifest.out_dir)
        if manifest.subcommand == "plan":
            return _cmd_plan(p, g, cfg, manifest, args)
        if manifest.subcommand == "certify":
            text, ok = _certificate_report(p, g, cfg, args.estimate_gamma_out)
            _write_or_print(text, manifest.out_dir, "certificate.txt")
            if manifest.out_dir is not None:
                print(text, end="")
            return 0 if ok else 2
        if manifest.subcommand == "attainable-set":
            eps = g.eps if args.eps is None else args.eps
            rows = attainable_set_sample(eps, args.grid, p)
            lines = ["alpha_bar,theta_min,theta_max"]
            lines += [",".join(_fmt(v) for v in row) for row in rows]
            _write_or_print("\n".join(lines) + "\n", manifest.out_dir,
                            "attainable_set.csv")
            return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable subcommand")


def _cmd_plan(p: PlantParams, g: GainConfig, cfg: SimConfig,
              manifest: RunManifest, args) -> int:
    plan, _ = build_plan(p, g, cfg, estimate=args.estimate_gamma_out)
    if args.validate_samples > 0:
        rng = np.random.default_rng(manifest.seed)
        start = Setpoint(cfg.initial.r, cfg.initial.alpha, cfg.initial.theta)
        path = equilibria.interpolate_path(start, cfg.reference, g.eps, p)
        for seg_start, seg_end in path.segments:
            for lam in rng.uniform(0.0, 1.0, size=args.validate_samples):
                sp = equilibria.interpolate_setpoint(seg_start, seg_end,
                                                     float(lam))
                if not equilibria.is_attainable(sp, g.eps, p,
                                                margin=equilibria.PATH_MARGIN):
                    print(f"error: sampled path point {sp} not attainable",
                          file=sys.stderr)
                    return 2
    _write_or_print(plan_csv(plan), manifest.out_dir, "plan.csv")
    return 0


def _cmd_sweep(manifest: RunManifest, args) -> int:
    if manifest.config_path is None:
        raise ConfigError("sweep requires --config pointing at a directory")
    cfg_dir = Path(manifest.config_path)
    if not cfg_dir.is_dir():
        raise ConfigError(f"sweep --config must be a directory, got {cfg_dir}")
    files = sorted(cfg_dir.glob("*.cfg"))
    if not files:
        raise ConfigError(f"no .cfg files found in {cfg_dir}")
    worst = 0
    for f in files:
        print(f"== {f.name}")
        try:
            p, g, cfg = parse_config(f.read_text(encoding="utf-8"))
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return 1
        out = None
        if manifest.out_dir is not None:
            out = str(Path(manifest.out_dir) / f.stem)
        code = _run_simulate(p, g, _apply_overrides(cfg, args), out)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
