"""Command-line front end: ``simulate``, ``verify <suite>``, ``map`` and ``params-check``.

Runs are described by one YAML document::

    system: neumann
    params: {a: [1, 2, 3], r: 1.0}
    initial: {x: [...], v: [...]}      # or: random  (needs seed)
    seed: 7
    integration: {step: 1.0e-3, t_end: 10.0, projection: none, sample_stride: 10}
    outputs: [trajectory_csv, invariants_csv, report_json]
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import maps, suites
from .dynamics import ELLIPSOID_SYSTEMS, SPHERE_SYSTEMS, SYSTEMS, SingularConfigurationError, as_first_order
from .integrate import IntegrationConfig, IntegrationError, drift_report, integrate_flow
from .model import (
    ADMISSION_TOL,
    ConstraintError,
    EllipsoidState,
    ParameterError,
    PolarState,
    SphereState,
    SystemParams,
    admit_ellipsoid,
    admit_sphere,
    sample_ellipsoid_state,
    sample_sphere_state,
    validate_params,
)

OUTPUTS = ("trajectory_csv", "invariants_csv", "report_json")
OUTPUT_FILES = {"trajectory_csv": "trajectory.csv", "invariants_csv": "invariants.csv", "report_json": "report.json"}
NUMBER_FORMAT = "%.16e"  # 17 significant digits
DEFAULT_DRIFT_TOL = 1e-8

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SINGULAR = 0, 1, 2, 3


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class RunConfig:
    system: str
    params: SystemParams
    initial: object  # mapping of state fields or the string "random"
    integration: IntegrationConfig
    outputs: list[str] = field(default_factory=lambda: list(OUTPUTS))
    seed: int | None = None
    random: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _section(doc: Mapping, key: str, default=None):
    value = doc.get(key, default)
    if value is not None and not isinstance(value, Mapping):
        raise ConfigError(key, "expected a mapping")
    return dict(value) if value is not None else {}


def parse_config(text: str, *, seed: int | None = None) -> RunConfig:
    """Parse and validate a YAML run description."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("document", f"malformed YAML: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise ConfigError("document", "top level must be a mapping")
    system = doc.get("system")
    if system not in SYSTEMS:
        raise ConfigError("system", f"must be one of {SYSTEMS}, got {system!r}")
    params = validate_params(_section(doc, "params"))

    initial = doc.get("initial", "random")
    options: dict = {}
    if isinstance(initial, Mapping) and initial.get("random"):
        options = {k: v for k, v in initial.items() if k != "random"}
        initial = "random"
    if initial == "random":
        seed = seed if seed is not None else doc.get("seed")
        if seed is None:
            raise ConfigError("seed", "required when initial is random")
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        unknown = set(options) - {"speed", "energy", "min_abs"}
        if unknown:
            raise ConfigError("initial", f"unknown random options {sorted(unknown)}")
    elif not isinstance(initial, Mapping):
        raise ConfigError("initial", "expected state fields or 'random'")
    else:
        initial = dict(initial)
        seed = seed if seed is not None else doc.get("seed")

    integ = _section(doc, "integration")
    try:
        integration = IntegrationConfig(
            step=float(integ.get("step", 1e-3)),
            t_end=float(integ.get("t_end", 10.0)),
            projection=str(integ.get("projection", "none")),
            sample_stride=int(integ.get("sample_stride", 1)),
            singular_guard_radius=float(integ.get("singular_guard_radius", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("integration", str(exc)) from exc

    outputs = doc.get("outputs", list(OUTPUTS))
    if not isinstance(outputs, list) or any(o not in OUTPUTS for o in outputs):
        raise ConfigError("outputs", f"expected a list drawn from {OUTPUTS}")
    return RunConfig(system, params, initial, integration, list(outputs), seed, options,
                     _section(doc, "verify"), dict(doc))


def _vec(fields: Mapping, key: str, n: int) -> np.ndarray:
    if key not in fields:
        raise ConfigError(f"initial.{key}", "missing")
    v = np.asarray(fields[key], dtype=float)
    if v.shape != (n,):
        raise ConfigError(f"initial.{key}", f"expected {n} entries")
    return v


def _random_speed(options: Mapping) -> float:
    if "energy" in options:
        energy = float(options["energy"])
        if energy < 0:
            raise ConfigError("initial.energy", "must be nonnegative")
        return float(np.sqrt(2.0 * energy))
    return float(options.get("speed", 1.0))


def build_initial(config: RunConfig):
    """State object for the configured system, admitted against its constraints."""
    p, n, system = config.params, config.params.n, config.system
    if config.initial == "random":
        rng = np.random.default_rng(config.seed)
        speed = _random_speed(config.random)
        min_abs = float(config.random.get("min_abs", 0.0))
        if system in SPHERE_SYSTEMS:
            return sample_sphere_state(rng, p, speed=speed, min_abs=min_abs)
        es = sample_ellipsoid_state(rng, p, speed=speed, min_abs=min_abs)
        if system == "polar2n":
            return maps.polar_state_for_dual(es.q, es.p, p, rng.uniform(0, 2 * np.pi, n))
        return es
    f = config.initial
    if system in SPHERE_SYSTEMS:
        x = _vec(f, "x", n)
        if "v" in f:
            state = SphereState(x, _vec(f, "v", n))
        else:
            state = SphereState(x, _vec(f, "y", n), gauged=True)
        admit_sphere(state, p)
        return state
    q = _vec(f, "q", n)
    if system in ELLIPSOID_SYSTEMS:
        state = EllipsoidState(q, _vec(f, "p", n))
        admit_ellipsoid(state, p)
        return state
    # polar2n: (q, p) plus optional angles; angular rates follow from d unless given
    qd = _vec(f, "p", n)
    admit_ellipsoid(EllipsoidState(q, qd), p)
    theta = _vec(f, "theta", n) if "theta" in f else np.zeros(n)
    if "thetadot" in f:
        return PolarState(q, theta, qd, _vec(f, "thetadot", n))
    return maps.polar_state_for_dual(q, qd, p, theta)


def column_names(system: str, n: int) -> list[str]:
    idx = range(1, n + 1)
    if system in SPHERE_SYSTEMS:
        return [f"x_{k}" for k in idx] + [f"v_{k}" for k in idx]
    if system in ELLIPSOID_SYSTEMS:
        return [f"q_{k}" for k in idx] + [f"p_{k}" for k in idx]
    return ([f"q_{k}" for k in idx] + [f"theta_{k}" for k in idx] + [f"qdot_{k}" for k in idx]
            + [f"thetadot_{k}" for k in idx])


def _fmt(x: float) -> str:
    return NUMBER_FORMAT % x


def write_csv(path: Path, header: Sequence[str], rows, truncation: str | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(float(v)) for v in row) + "\n")
        if truncation is not None:
            fh.write(f"# truncated: {truncation}\n")


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_json(path: Path, payload: Mapping):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _echo(config: RunConfig) -> dict:
    echo = dict(config.raw)
    echo["params"] = config.params.as_dict()
    if config.seed is not None:
        echo["seed"] = config.seed
    return _jsonable(echo)


def _invariant_columns(samples: Mapping[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    names, cols = [], []
    for key in sorted(samples, key=lambda k: (k == "hamiltonian", k)):
        vals = np.asarray(samples[key])
        if vals.ndim == 1:
            vals = vals[:, None]
        if key == "hamiltonian":
            names.append("hamiltonian")
        else:
            names.extend(f"{key}_{k + 1}" for k in range(vals.shape[1]))
        cols.append(vals)
    return names, np.hstack(cols)


def simulate_report(config: RunConfig, traj, tol: float | None) -> dict:
    n = config.params.n
    constraint_tol = ADMISSION_TOL if config.integration.projection == "none" else 1e-12
    drift_tol = tol if tol is not None else DEFAULT_DRIFT_TOL
    if tol is not None:
        constraint_tol = tol
    diag = np.abs(traj.diagnostics)
    drift = drift_report(traj)
    checks = [
        suites.Check("max_constraint_residual", float(diag[:, 0].max()), constraint_tol),
        suites.Check("max_tangency_residual", float(diag[:, 1].max()), constraint_tol),
    ]
    for key, vals in drift.items():
        checks.append(suites.Check(f"drift_{key}", float(np.max(vals)), drift_tol))
    report = {
        "suite": "simulate",
        "system": config.system,
        "samples": len(traj),
        "t_final": float(traj.times[-1]),
        "truncated": bool(traj.truncated),
        "drift": {k: v for k, v in drift.items()},
    }
    if config.system in ("jacobi", "dual") and len(traj) > 0:
        p = config.params
        try:
            k = np.array([maps.compute_kappa(u[:n], u[n:2 * n], p) for u in traj.states])
            kd = float(np.max(np.abs(k / k[0] - 1.0)))
            # kappa is an invariant of the pure geodesic flow only
            checks.append(suites.Check("kappa_drift", kd, drift_tol, required=config.system == "jacobi"))
        except ValueError:
            pass
    report["checks"] = [c.as_dict() for c in checks]
    report["pass"] = suites.all_required_pass(checks)
    return report


def run_simulate(config: RunConfig, out_dir: Path, *, tol: float | None = None, quiet: bool = False) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        initial = build_initial(config)
        as_first_order(config.system, initial, config.params)
    except SingularConfigurationError as exc:
        _err(f"singular initial state: {exc}")
        return EXIT_SINGULAR
    except (ConstraintError, ConfigError) as exc:
        _err(str(exc))
        return EXIT_INPUT

    status = EXIT_OK
    truncation = None
    try:
        traj = integrate_flow(config.system, initial, config.params, config.integration)
    except IntegrationError as exc:
        traj = exc.partial
        truncation = str(exc)
        status = EXIT_SINGULAR
        if traj is None:
            _err(truncation)
            return status
    names = column_names(config.system, config.params.n)
    try:
        if "trajectory_csv" in config.outputs:
            rows = np.column_stack([traj.times, traj.states])
            write_csv(out_dir / OUTPUT_FILES["trajectory_csv"], ["t"] + names, rows, truncation)
        if "invariants_csv" in config.outputs:
            inames, cols = _invariant_columns(traj.invariant_samples)
            write_csv(out_dir / OUTPUT_FILES["invariants_csv"], ["t"] + inames,
                      np.column_stack([traj.times, cols]), truncation)
        report = simulate_report(config, traj, tol)
        if truncation is not None:
            report["truncation"] = truncation
            report["pass"] = False
        report["config_echo"] = _echo(config)
        if "report_json" in config.outputs:
            write_json(out_dir / OUTPUT_FILES["report_json"], report)
    except OSError as exc:
        _err(f"write failed: {exc}")
        return EXIT_FAIL
    if truncation is not None:
        _err(truncation)
    elif not quiet:
        _summary(report)
    return status


def _verify_tolerances(config: RunConfig, tol: float | None) -> dict:
    tolerances = dict(config.verify.get("tolerances", {}) or {})
    if tol is not None:
        tolerances = {k: tol for k in suites.DEFAULT_TOLERANCES}
    return tolerances


def _ellipsoid_states(config: RunConfig, rng, count):
    if config.initial != "random" and config.system in ELLIPSOID_SYSTEMS:
        return [build_initial(config)]
    speed = _random_speed(config.random)
    return [sample_ellipsoid_state(rng, config.params, speed=speed, min_abs=0.1) for _ in range(count)]


def run_verify(suite: str, config: RunConfig, *, tol: float | None = None) -> tuple[int, dict]:
    """Run one verification suite; returns (exit status, report)."""
    if suite not in suites.SUITES:
        raise ConfigError("suite", f"unknown suite {suite!r}; choose from {suites.SUITES}")
    p = config.params
    rng = np.random.default_rng(config.seed if config.seed is not None else 0)
    tolerances = _verify_tolerances(config, tol)
    points = int(config.verify.get("points", 32))
    count = int(config.verify.get("initial_conditions", 4))
    t_end = float(config.verify.get("t_end", 5.0))
    step = config.integration.step
    try:
        if suite == "brackets":
            checks = suites.brackets_suite(p, rng, points, tolerances)
        elif suite == "involution":
            checks = suites.involution_suite(p, rng, points, tolerances)
        elif suite == "gaussmap":
            checks = suites.gaussmap_suite(p, _ellipsoid_states(config, rng, count), tolerances,
                                           t_end=t_end, step=step)
        elif suite == "reduction":
            checks = suites.reduction_suite(p, rng, count, tolerances, t_end=t_end, step=step)
        else:
            mu = float(config.verify.get("mu", 0.0))
            nu = float(config.verify.get("nu", 0.5))
            checks = suites.identities_suite(p, _ellipsoid_states(config, rng, count), mu, nu, tolerances,
                                             step=step, t_end=t_end)
    except (SingularConfigurationError, IntegrationError, ValueError) as exc:
        checks = [suites.Check(f"{suite}_evaluation", float("inf"), 0.0)]
        note = str(exc)
    else:
        note = None
    report = {
        "suite": suite,
        "checks": [c.as_dict() for c in checks],
        "pass": suites.all_required_pass(checks),
        "config_echo": _echo(config),
    }
    if note:
        report["error"] = note
    return (EXIT_OK if report["pass"] else EXIT_FAIL), report


def _map_state(config: RunConfig, fields: Mapping, theta0=None) -> dict:
    p, n = config.params, config.params.n
    if config.system == "jacobi":
        q, mom = _vec(fields, "q", n), _vec(fields, "p", n)
        admit_ellipsoid(EllipsoidState(q, mom), p)
        mu = float(fields.get("mu", 0.0))
        img = maps.gauss_map(q, mom, p, mu)
        return {"kind": "gauss_map", "x": img.x, "y": img.w, "v": img.velocity(),
                "kappa": maps.compute_kappa(q, mom, p), "mu": mu}
    if config.system == "rosochatius":
        x, v = _vec(fields, "x", n), _vec(fields, "v", n)
        admit_sphere(SphereState(x, v), p)
        z, w, p2 = maps.lift_rosochatius(x, v, p, theta0)
        return {"kind": "lift_rosochatius", "z": z, "w": w, "a": p2.a}
    if config.system == "dual":
        q, mom = _vec(fields, "q", n), _vec(fields, "p", n)
        admit_ellipsoid(EllipsoidState(q, mom), p)
        zeta, pi, p2 = maps.lift_dual(q, mom, p, theta0)
        return {"kind": "lift_dual", "zeta": zeta, "pi": pi, "b": p2.b}
    raise ConfigError("system", "map supports jacobi (Gauss map), rosochatius and dual (lifts)")


def run_map(config: RunConfig, state_path: Path | None) -> dict:
    if state_path is not None:
        fields = json.loads(Path(state_path).read_text(encoding="utf-8"))
    elif isinstance(config.initial, Mapping):
        fields = config.initial
    else:
        raise ConfigError("initial", "map needs explicit state fields or --state")
    theta0 = fields.get("theta")
    return _jsonable(_map_state(config, fields, theta0))


def _err(msg: str):
    print(f"quadricflow: {msg}", file=sys.stderr)


def _summary(report: Mapping):
    for c in report.get("checks", []):
        flag = "pass" if c["pass"] else ("FAIL" if c["required"] else "info")
        print(f"{flag:4s}  {c['name']:32s} {c['residual']:.3e}  (tol {c['tolerance']:.1e})")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="YAML run description")
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--tol", type=float, default=None, help="override every tolerance")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="quadricflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate a system and write CSV/JSON")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", choices=suites.SUITES)
    m = sub.add_parser("map", parents=[common], help="apply the Gauss map or a 2N lift to a state")
    m.add_argument("--state", type=Path, default=None, help="JSON file with state fields")
    sub.add_parser("params-check", parents=[common], help="validate parameters and print derived ones")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        _err("--seed must be nonnegative")
        return EXIT_INPUT
    try:
        config = parse_config(args.config.read_text(encoding="utf-8"), seed=args.seed)
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_INPUT
    except (ConfigError, ParameterError) as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_INPUT

    if args.verb == "simulate":
        return run_simulate(config, args.out, tol=args.tol, quiet=args.quiet)
    if args.verb == "verify":
        status, report = run_verify(args.suite, config, tol=args.tol)
        args.out.mkdir(parents=True, exist_ok=True)
        write_json(args.out / f"verify_{args.suite}.json", report)
        if not args.quiet:
            _summary(report)
        return status
    if args.verb == "map":
        try:
            mapped = run_map(config, args.state)
        except (ConfigError, ConstraintError, SingularConfigurationError, OSError, ValueError) as exc:
            _err(str(exc))
            return EXIT_INPUT
        args.out.mkdir(parents=True, exist_ok=True)
        write_json(args.out / "mapped.json", mapped)
        if not args.quiet:
            print(json.dumps(mapped, sort_keys=True))
        return EXIT_OK
    # params-check
    if not args.quiet:
        print(json.dumps(_jsonable({"params": config.params.as_dict(), "n": config.params.n}), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
