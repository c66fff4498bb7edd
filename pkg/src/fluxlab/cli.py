"""Scenario-driven command line front end.

One JSON document describes one scenario:

    {"kind": "...", "parameters": {...}, "output_path": "...", "seed": 0}

Commands:
    fluxlab run <config.json>        execute and write report files
    fluxlab validate <config.json>   structural + unit validation only
    fluxlab constants                dump the pinned constants table

Exit codes: 0 success, 2 validation error, 3 numeric failure.  Reports are
deterministic for a fixed config and seed (sorted keys, repr floats).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .em_kernel import (
    CONSTANTS,
    ChargeState,
    FieldSample,
    FluxonState,
    TubeProfile,
    Vec3,
    boost_fields,
    scalar_density,
)
from .dynamics import (
    CanonicalState,
    Integrator,
    force_diagnostics,
    simulate,
)
from .errors import (
    ConvergenceError,
    FluxlabError,
    SingularityError,
    ValidationError,
    WindingAmbiguityError,
)
from .interaction import (
    PointFluxonPi,
    QuadratureSpec,
    field_momentum_closed,
    field_momentum_estimate,
)
from .phase import LoopPath, ab_phase, fringe_shift, winding_number
from .shielding import (
    CageScenario,
    ShieldDesign,
    cage_interaction_terms,
    classify_shielding,
    total_induced_charge,
    total_surface_charge,
)

__all__ = ["ScenarioConfig", "validate", "run", "main", "cli_entry"]

KINDS = (
    "loop_phase",
    "two_body_dynamics",
    "cage_cancellation",
    "shield_design",
    "covariance_check",
    "overlap_convergence",
)


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    parameters: dict
    output_path: str
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": dict(sorted(self.parameters.items())),
            "output_path": self.output_path,
            "seed": self.seed,
        }


# (type, required, default, positive_only) per parameter, per kind
_NUM, _INT, _STR, _LIST = "number", "integer", "string", "number list"

_SCHEMAS: dict[str, dict[str, tuple]] = {
    "loop_phase": {
        "flux_Mx": (_NUM, True, None, False),
        "charge_statC": (_NUM, False, CONSTANTS.e_charge, False),
        "fluxon_x_cm": (_NUM, False, 0.0, False),
        "fluxon_y_cm": (_NUM, False, 0.0, False),
        "loop_csv": (_STR, False, None, False),
        "loop_radius_cm": (_NUM, False, None, True),
        "loop_center_x_cm": (_NUM, False, 0.0, False),
        "loop_center_y_cm": (_NUM, False, 0.0, False),
        "loop_vertices": (_INT, False, 360, True),
        "refinement": (_INT, False, 8, True),
    },
    "two_body_dynamics": {
        "charge_statC": (_NUM, True, None, False),
        "charge_mass_g": (_NUM, True, None, True),
        "flux_Mx": (_NUM, True, None, False),
        "fluxon_mass_g": (_NUM, True, None, True),
        "r0_x_cm": (_NUM, True, None, False),
        "r0_y_cm": (_NUM, True, None, False),
        "R0_x_cm": (_NUM, True, None, False),
        "R0_y_cm": (_NUM, True, None, False),
        "p0_x_gcms": (_NUM, True, None, False),
        "p0_y_gcms": (_NUM, True, None, False),
        "P0_x_gcms": (_NUM, True, None, False),
        "P0_y_gcms": (_NUM, True, None, False),
        "duration_s": (_NUM, True, None, True),
        "dt_s": (_NUM, True, None, True),
        "integrator": (_STR, True, None, False),
        "record_every": (_INT, False, 1, True),
        "trajectory_csv": (_STR, False, None, False),
    },
    "cage_cancellation": {
        "a_cm": (_NUM, True, None, True),
        "R_cm": (_NUM, True, None, True),
        "omega_rad_s": (_NUM, True, None, False),
        "flux_Mx": (_NUM, True, None, False),
        "e_statC": (_NUM, False, CONSTANTS.e_charge, False),
        "n_pairs": (_INT, False, 0, False),
        "n_phi": (_INT, False, None, True),
    },
    "shield_design": {
        "d_m": (_NUM, True, None, True),
        "gap_eV": (_NUM, True, None, True),
        "lambda_m": (_NUM, False, None, True),
        "v_e_m_per_s": (_NUM, False, None, True),
    },
    "covariance_check": {
        "n_cases": (_INT, False, 1000, True),
        "beta_max": (_NUM, False, 0.9, True),
    },
    "overlap_convergence": {
        "distance_cm": (_NUM, True, None, True),
        "charge_statC": (_NUM, False, CONSTANTS.e_charge, False),
        "flux_Mx": (_NUM, False, CONSTANTS.flux_quantum, False),
        "tube_radius_ratios": (_LIST, False, [0.04, 0.02, 0.01], False),
        "points_per_dim": (_INT, False, 16, True),
        "csv_path": (_STR, False, None, False),
    },
}

# exactly one key of each group must be present
_EXCLUSIVE: dict[str, list[tuple[str, ...]]] = {
    "loop_phase": [("loop_csv", "loop_radius_cm")],
    "shield_design": [("lambda_m", "v_e_m_per_s")],
}


def _check_type(name: str, value, typ: str, errors: list[str]) -> bool:
    if typ == _NUM and not (isinstance(value, (int, float)) and not isinstance(value, bool)):
        errors.append(f"parameters.{name}: expected a number, got {type(value).__name__}")
        return False
    if typ == _INT and not (isinstance(value, int) and not isinstance(value, bool)):
        errors.append(f"parameters.{name}: expected an integer, got {type(value).__name__}")
        return False
    if typ == _STR and not isinstance(value, str):
        errors.append(f"parameters.{name}: expected a string, got {type(value).__name__}")
        return False
    if typ == _LIST:
        if not (isinstance(value, list) and value
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            errors.append(f"parameters.{name}: expected a non-empty list of numbers")
            return False
    if typ in (_NUM, _INT) and not math.isfinite(value):
        errors.append(f"parameters.{name}: must be finite")
        return False
    return True


def validate(config_text: str) -> ScenarioConfig:
    """Parse and validate a scenario document; raises ValidationError with
    every problem found at once."""
    errors: list[str] = []
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as err:
        raise ValidationError([f"line {err.lineno}, column {err.colno}: invalid JSON ({err.msg})"])
    if not isinstance(doc, dict):
        raise ValidationError(["top level: expected a JSON object"])

    allowed_top = {"kind", "parameters", "output_path", "seed"}
    for key in sorted(set(doc) - allowed_top):
        errors.append(f"{key}: unknown top-level key")
    for key in ("kind", "parameters", "output_path"):
        if key not in doc:
            errors.append(f"{key}: required top-level key missing")
    kind = doc.get("kind")
    if kind is not None and kind not in KINDS:
        errors.append(f"kind: must be one of {list(KINDS)}, got {kind!r}")
        raise ValidationError(errors)
    params = doc.get("parameters")
    if params is not None and not isinstance(params, dict):
        errors.append("parameters: expected an object")
        params = None
    out = doc.get("output_path")
    if out is not None and not isinstance(out, str):
        errors.append("output_path: expected a string")
    seed = doc.get("seed", 0)
    if not (isinstance(seed, int) and not isinstance(seed, bool)):
        errors.append("seed: expected an integer")
        seed = 0
    if kind is None or params is None:
        raise ValidationError(errors)

    schema = _SCHEMAS[kind]
    for key in sorted(set(params) - set(schema)):
        errors.append(f"parameters.{key}: unknown key for kind '{kind}'")

    exclusive_keys = {k for group in _EXCLUSIVE.get(kind, []) for k in group}
    filled = dict(params)
    for name, (typ, required, default, positive) in schema.items():
        if name not in params:
            if required:
                errors.append(f"parameters.{name}: required key missing for kind '{kind}'")
            elif default is not None and name not in exclusive_keys:
                filled[name] = default
            continue
        value = params[name]
        if not _check_type(name, value, typ, errors):
            continue
        if positive:
            bad = (min(value) <= 0) if typ == _LIST else (value <= 0)
            if bad:
                errors.append(f"parameters.{name}: must be positive")

    for group in _EXCLUSIVE.get(kind, []):
        present = [k for k in group if k in params]
        if len(present) != 1:
            errors.append(
                f"parameters: exactly one of {list(group)} must be given (found {present or 'none'})"
            )

    if kind == "cage_cancellation" and not errors:
        if filled["a_cm"] <= filled["R_cm"]:
            errors.append("parameters.a_cm: must exceed R_cm (electron strictly outside the cage)")
    if kind == "two_body_dynamics" and not errors:
        if filled["integrator"] not in (Integrator.RK4.value, Integrator.STORMER_VERLET_SPLIT.value):
            errors.append(
                f"parameters.integrator: must be '{Integrator.RK4.value}' or "
                f"'{Integrator.STORMER_VERLET_SPLIT.value}'"
            )
    if kind == "covariance_check" and not errors:
        if not (0.0 < filled["beta_max"] < 1.0):
            errors.append("parameters.beta_max: must lie in (0, 1)")

    if errors:
        raise ValidationError(errors)
    return ScenarioConfig(kind=kind, parameters=filled, output_path=out, seed=seed)


def _json_dump(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _report_skeleton(config: ScenarioConfig, tolerances: dict) -> dict:
    return {
        "library": {"name": "fluxlab", "version": __version__},
        "config": config.to_json_dict(),
        "tolerances": tolerances,
    }


def _run_loop_phase(config: ScenarioConfig) -> dict:
    p = config.parameters
    fluxon_pos = Vec3(p["fluxon_x_cm"], p["fluxon_y_cm"])
    if p.get("loop_csv") is not None:
        loop = LoopPath.from_csv(p["loop_csv"], refinement=p["refinement"])
    else:
        loop = LoopPath.regular_polygon(
            Vec3(p["loop_center_x_cm"], p["loop_center_y_cm"]),
            p["loop_radius_cm"], n=p["loop_vertices"], refinement=p["refinement"],
        )
    provider = PointFluxonPi(p["charge_statC"], p["flux_Mx"], fluxon_pos)
    phase = ab_phase(loop, provider)
    w = winding_number(loop, fluxon_pos)
    report = _report_skeleton(config, {"line_quadrature_rel_tol": 1e-8})
    report["results"] = {
        "phase_rad": phase,
        "winding": w,
        "enclosed_flux_Mx": w * p["flux_Mx"],
        "fringe_shift": fringe_shift(phase),
    }
    return report


def _run_two_body(config: ScenarioConfig) -> dict:
    p = config.parameters
    charge = ChargeState(Vec3(p["r0_x_cm"], p["r0_y_cm"]), Vec3(0, 0), p["charge_statC"], p["charge_mass_g"])
    fluxon = FluxonState(Vec3(p["R0_x_cm"], p["R0_y_cm"]), Vec3(0, 0), p["flux_Mx"], p["fluxon_mass_g"])
    state = CanonicalState(
        r=Vec3(p["r0_x_cm"], p["r0_y_cm"]), R=Vec3(p["R0_x_cm"], p["R0_y_cm"]),
        p=Vec3(p["p0_x_gcms"], p["p0_y_gcms"]), P=Vec3(p["P0_x_gcms"], p["P0_y_gcms"]),
    )
    traj = simulate(
        state, p["duration_s"], p["dt_s"], charge, fluxon,
        integrator=Integrator(p["integrator"]), record_every=p["record_every"],
    )
    csv_path = p.get("trajectory_csv") or config.output_path + ".trajectory.csv"
    Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(csv_path)
    diag = force_diagnostics(traj, charge, fluxon)
    report = _report_skeleton(config, {"dt_s": p["dt_s"]})
    report["results"] = {
        "trajectory_csv": csv_path,
        "steps_recorded": len(traj),
        "max_accel_charge_cm_s2": diag.max_accel_charge,
        "max_accel_fluxon_cm_s2": diag.max_accel_fluxon,
        "max_third_law_residual": diag.max_third_law_residual,
        "energy_drift_rel": diag.energy_drift_rel,
        "energy_erg_initial": float(traj.energy[0]),
        "energy_erg_final": float(traj.energy[-1]),
    }
    return report


def _run_cage(config: ScenarioConfig) -> dict:
    p = config.parameters
    scenario = CageScenario(
        e=p["e_statC"], a=p["a_cm"], R_cage=p["R_cm"], omega=p["omega_rad_s"],
        flux=p["flux_Mx"], n_pairs=p["n_pairs"],
    )
    n_phi = p.get("n_phi")
    terms = cage_interaction_terms(scenario, n_phi=n_phi)
    q_induced = total_induced_charge(scenario, n_phi=n_phi)
    q_total = total_surface_charge(scenario, n_phi=n_phi)
    scale = abs(terms.L_e_phi)
    report = _report_skeleton(config, {"cancellation_rel_target": 1e-10})
    report["results"] = {
        "L_e_phi_erg": terms.L_e_phi,
        "L_s_phi_erg": terms.L_s_phi,
        "residual_erg": terms.residual,
        "residual_rel": abs(terms.residual) / scale if scale > 0.0 else abs(terms.residual),
        "induced_charge_statC": q_induced,
        "induced_charge_expected_statC": -scenario.e,
        "total_surface_charge_statC": q_total,
        "total_surface_charge_expected_statC": 2.0 * scenario.n_pairs * scenario.e,
    }
    return report


def _run_shield(config: ScenarioConfig) -> dict:
    p = config.parameters
    design = ShieldDesign(
        d=p["d_m"], gap=p["gap_eV"],
        electron_wavelength=p.get("lambda_m"), v_e=p.get("v_e_m_per_s"),
    )
    rep = classify_shielding(design)
    report = _report_skeleton(config, {"threshold_rule": "strict: gamma*v < d*gap/h"})
    report["results"] = rep.as_dict()
    return report


def _run_covariance(config: ScenarioConfig) -> dict:
    p = config.parameters
    rng = np.random.default_rng(config.seed)
    n = p["n_cases"]
    worst = 0.0
    for _ in range(n):
        f1 = FieldSample(Vec3(*rng.uniform(-1, 1, 3)), Vec3(*rng.uniform(-1, 1, 3)))
        f2 = FieldSample(Vec3(*rng.uniform(-1, 1, 3)), Vec3(*rng.uniform(-1, 1, 3)))
        direction = rng.uniform(-1, 1, 3)
        direction /= np.linalg.norm(direction)
        beta = Vec3(*(direction * rng.uniform(0.0, p["beta_max"])))
        before = scalar_density(f1, f2)
        after = scalar_density(boost_fields(f1, beta), boost_fields(f2, beta))
        denom = max(abs(before), 1e-30)
        worst = max(worst, abs(after - before) / denom)
    report = _report_skeleton(config, {"invariance_rel_tol": 1e-9})
    report["results"] = {
        "n_cases": n,
        "beta_max": p["beta_max"],
        "max_rel_error": worst,
        "passed": bool(worst <= 1e-9),
    }
    return report


def _run_overlap_convergence(config: ScenarioConfig) -> dict:
    p = config.parameters
    d = p["distance_cm"]
    charge = ChargeState(Vec3(d, 0.0), Vec3(0, 0), p["charge_statC"], 1.0)
    rows = []
    for ratio in p["tube_radius_ratios"]:
        fluxon = FluxonState(
            Vec3(0, 0), Vec3(0, 0), p["flux_Mx"], 1.0,
            tube_radius=ratio * d, profile=TubeProfile.GAUSSIAN_TUBE,
        )
        quad = QuadratureSpec(
            inner_cutoff=fluxon.tube_radius / 100.0,
            outer_radius=100.0 * d, z_extent=100.0 * d,
            points_per_dim=p["points_per_dim"],
        )
        est = field_momentum_estimate(charge, fluxon, quad)
        closed = field_momentum_closed(p["charge_statC"], p["flux_Mx"], charge.position, fluxon.position)
        err = (est.value - closed).norm() / closed.norm()
        rows.append({
            "tube_radius_ratio": ratio,
            "tube_radius_cm": ratio * d,
            "pi_numeric_g_cm_s": [est.value.x, est.value.y, est.value.z],
            "pi_closed_g_cm_s": [closed.x, closed.y, closed.z],
            "rel_error": err,
            "quadrature_error_est": est.quadrature_error,
            "truncation_error_est": est.truncation_error,
        })
    csv_path = p.get("csv_path") or config.output_path + ".csv"
    Path(csv_path).parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="") as fh:
        fh.write("tube_radius_cm,rel_error,quadrature_error_est,truncation_error_est\n")
        for row in rows:
            fh.write(
                f"{row['tube_radius_cm']!r},{row['rel_error']!r},"
                f"{row['quadrature_error_est']!r},{row['truncation_error_est']!r}\n"
            )
    report = _report_skeleton(config, {"match_rel_target": 1e-3})
    report["results"] = {"rows": rows, "csv_path": csv_path, "max_rel_error": max(r["rel_error"] for r in rows)}
    return report


_RUNNERS = {
    "loop_phase": _run_loop_phase,
    "two_body_dynamics": _run_two_body,
    "cage_cancellation": _run_cage,
    "shield_design": _run_shield,
    "covariance_check": _run_covariance,
    "overlap_convergence": _run_overlap_convergence,
}


def run(config: ScenarioConfig) -> dict:
    """Execute a validated scenario and write its report to output_path."""
    report = _RUNNERS[config.kind](config)
    _json_dump(report, Path(config.output_path))
    return report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="fluxlab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario config")
    p_run.add_argument("config", help="path to the scenario JSON document")
    p_val = sub.add_parser("validate", help="validate a scenario config")
    p_val.add_argument("config", help="path to the scenario JSON document")
    sub.add_parser("constants", help="dump the pinned constants table as JSON")
    args = parser.parse_args(argv)

    if args.command == "constants":
        print(json.dumps(CONSTANTS.as_dict(), sort_keys=True, indent=2))
        return 0

    try:
        text = Path(args.config).read_text()
    except OSError as err:
        print(f"error: cannot read {args.config}: {err}", file=sys.stderr)
        return 2

    try:
        config = validate(text)
    except ValidationError as err:
        for line in err.errors:
            print(f"{args.config}: {line}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(json.dumps(config.to_json_dict(), sort_keys=True, indent=2))
        return 0

    try:
        run(config)
    except (ConvergenceError, SingularityError, WindingAmbiguityError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 3
    except FluxlabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"report written to {config.output_path}")
    return 0


def cli_entry() -> None:
    raise SystemExit(main())
