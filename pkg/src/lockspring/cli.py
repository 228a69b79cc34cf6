"""Command-line entry point: ``lockspring {clutch,simulate,analyze,optimize,report}``.

File-emitting commands keep stdout empty and log to stderr.  Failures exit
non-zero with one JSON line on stderr: ``{"error": <kind>, "message": ...}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from lockspring import __version__
from lockspring.analysis import (
    AnalysisConfig,
    efficiency,
    locking_force_summary,
    mass_energy_density,
)
from lockspring.clutch_model import locking_force_ratio, max_holding_force, unlock_energy, wrap_angle
from lockspring.config import ToolkitConfig, parse_config
from lockspring.errors import InfeasibleDesignError, LockSpringError
from lockspring.optimizer import optimize
from lockspring.spring_mechanism import MassBudget, baseline_cable_tension, stored_energy
from lockspring.traceio import read_trace, write_trace
from lockspring.workloop import Assembly, run_protocol

log = logging.getLogger("lockspring")

SCHEMA_VERSION = 1
CAPSTAN_CLAIM = 0.001
# ratchet-and-pawl clutch of a comparable ankle exoskeleton (spring 0.098 kg, clutch 0.057 kg)
REFERENCE_CLUTCH = {"name": "ratchet-and-pawl reference", "spring_mass_kg": 0.098, "clutch_mass_kg": 0.057}
PARETO_HEADER = ["lambda_F", "mass_kg", "r_p_mm", "r_d_mm", "l_d_mm", "d_w_mm"]
RANKED_IN_REPORT = 20


def _envelope(kind: str, config: ToolkitConfig, inputs: dict, results: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "generator": f"lockspring {__version__}",
        "config": config.to_dict(),
        "inputs": inputs,
        "results": results,
    }


def _write_json(obj: Any, path: str) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _analysis_config(config: ToolkitConfig, use_spring: bool) -> AnalysisConfig:
    a = config.analysis
    if a.nominal_stiffness_N_per_mm is None and use_spring:
        return AnalysisConfig(
            a.slope_threshold_multiple, a.slope_window_samples,
            config.spring.stiffness_N_per_mm, a.deflection_tolerance_mm,
        )
    return a


def clutch_summary(config: ToolkitConfig) -> dict[str, Any]:
    g = config.clutch
    lam = locking_force_ratio(g)
    hold = max_holding_force(g, config.solenoid, config.cable)
    e_unlock = unlock_energy(config.solenoid)
    e_full = stored_energy(config.spring, config.spring.max_deflection_mm)
    return {
        "lambda_F": lam,
        "wrap_angle_rad": wrap_angle(g),
        "wrap_count": g.wrap_count,
        "max_holding_force_N": hold.force_N,
        "holding_limit": hold.limit,
        "unlock_energy_J": e_unlock,
        "unlock_energy_fraction_of_full_storage": e_unlock / e_full,
        "baseline_cable_tension_N": baseline_cable_tension(config.tensioner, g),
        **{k: v for k, v in locking_force_summary(g, config.solenoid, config.spring).items() if k != "lambda_F"},
    }


def cmd_clutch(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    s = clutch_summary(config)
    if args.json:
        print(json.dumps(s, indent=2))
        return 0
    print(f"lambda_F = {s['lambda_F']:.6g}")
    print(f"check: lambda_F {'<' if s['lambda_F'] < CAPSTAN_CLAIM else '>='} {CAPSTAN_CLAIM:g}")
    print(f"wrap_angle_rad = {s['wrap_angle_rad']:.6g}  (wraps = {s['wrap_count']:.4g})")
    print(f"max_holding_force_N = {s['max_holding_force_N']:.6g}  ({s['holding_limit']}-limited)")
    print(f"unlock_energy_J = {s['unlock_energy_J']:.6g}  "
          f"({100 * s['unlock_energy_fraction_of_full_storage']:.3g} % of full storage)")
    print(f"control_force_ratio = {s['control_force_ratio']:.6g}")
    print(f"baseline_cable_tension_N = {s['baseline_cable_tension_N']:.6g}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    sim = config.simulation
    trace = run_protocol(
        sim.protocol,
        Assembly(config.spring, config.cable, config.clutch),
        config.loss_model,
        sample_rate_Hz=sim.sample_rate_Hz,
        contact_threshold_N=sim.contact_threshold_N,
    )
    led = trace.ledger
    for key in ("work_in_J", "drop_work_J", "absorbed_J", "returned_J", "retained_J"):
        trace.metadata[f"ledger_{key}"] = f"{getattr(led, key):.9g}"
    trace.metadata["loss_model_note"] = "lock-loss parameters calibrated, not measured"
    write_trace(trace, args.out)
    log.info("wrote %d samples to %s (closure error %.3g J)", len(trace), args.out, led.closure_error_J)
    return 0


def analysis_results(config: ToolkitConfig, trace, analysis_cfg: AnalysisConfig):
    """The efficiency report and its JSON ``results`` block."""
    rep = efficiency(trace, analysis_cfg)
    event_etas = [e.event_eta for e in rep.events if e.event_eta is not None]
    res = rep.to_dict()
    res.update({
        "eta_definition": "1 - sum(lock-drop areas) / sum(loading work) over the whole trace",
        "per_event_eta_range": [min(event_etas), max(event_etas)] if event_etas else None,
        "rho_E": mass_energy_density(config.mass_budget),
        "locking": locking_force_summary(config.clutch, config.solenoid, config.spring),
        "loss_model_note": trace.metadata.get("loss_model_note", "measured trace"),
    })
    return rep, res


def cmd_analyze(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    trace = read_trace(args.trace)
    analysis_cfg = _analysis_config(config, use_spring=args.config is not None)
    rep, results = analysis_results(config, trace, analysis_cfg)
    inputs = {"trace": str(args.trace), "n_samples": len(trace), "trace_metadata": trace.metadata,
              "config_path": args.config}
    _write_json(_envelope("efficiency", config, inputs, results), args.report)
    log.info("eta = %.4f over %d lock events; report %s", results["eta"], len(results["events"]), args.report)
    if args.plot:
        from lockspring.plotting import plot_work_loop

        plot_work_loop(trace, rep, args.plot)
        log.info("plot %s", args.plot)
    return 0


def write_pareto_csv(front, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PARETO_HEADER)
        for c in front:
            g = c.geometry
            w.writerow([repr(c.lambda_F), repr(c.estimated_clutch_mass_kg), repr(g.pulley_radius_mm),
                        repr(g.drum_radius_mm), repr(g.drum_length_mm), repr(g.wire_diameter_mm)])


def cmd_optimize(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    opt = config.optimizer
    result = optimize(
        config.constraints, opt.objective, budget=opt.grid_budget,
        refine_top_k=opt.refine_top_k, refinement=opt.refine,
    )
    results = {
        "objective": opt.objective.kind.value,
        "best": result.best.to_dict(),
        "grid_best": result.grid_best.to_dict(),
        "ranked": [c.to_dict() for c in result.ranked[:RANKED_IN_REPORT]],
        "n_ranked": len(result.ranked),
        "pareto_front": [c.to_dict() for c in result.pareto],
        "grid_points": result.grid_points,
        "feasible_grid_points": result.feasible_grid_points,
        "evaluations": result.evaluations,
        "refined": result.refined,
    }
    _write_json(_envelope("optimization", config, {"config_path": args.config}, results), args.report)
    write_pareto_csv(result.pareto, args.front)
    log.info("best lambda_F %.3g at mass %.3f kg; %d Pareto points",
             result.best.lambda_F, result.best.estimated_clutch_mass_kg, len(result.pareto))
    return 0


def render_summary(config: ToolkitConfig, reports: Sequence[dict]) -> str:
    clutch = clutch_summary(config)
    rho = mass_energy_density(config.mass_budget)
    ref = REFERENCE_CLUTCH
    rho_ref = mass_energy_density(MassBudget(ref["spring_mass_kg"], ref["clutch_mass_kg"]))
    lines = [
        "Lockable spring summary",
        "=======================",
        f"spring: k = {config.spring.stiffness_N_per_mm:g} N/mm, "
        f"max deflection {config.spring.max_deflection_mm:g} mm, "
        f"stores {stored_energy(config.spring, config.spring.max_deflection_mm):.2f} J",
        f"capstan lambda_F = {clutch['lambda_F']:.3g} (target <= 0.01)",
        f"control force ratio = {100 * clutch['control_force_ratio']:.3g} % of max spring force",
        f"max holding force = {clutch['max_holding_force_N']:.0f} N ({clutch['holding_limit']}-limited)",
        f"unlock energy = {clutch['unlock_energy_J']:.3g} J",
        "",
        "mass-energy density rho_E (target >= 0.5)",
        f"  {'design':<30} {'m_spring kg':>12} {'m_lock kg':>10} {'rho_E':>7}",
        f"  {'this config':<30} {config.spring.mass_kg:>12.3f} {config.clutch_mass_kg:>10.3f} {rho:>7.3f}",
        f"  {ref['name']:<30} {ref['spring_mass_kg']:>12.3f} {ref['clutch_mass_kg']:>10.3f} {rho_ref:>7.3f}",
    ]
    for rep in reports:
        kind = rep.get("kind")
        res = rep.get("results", {})
        lines.append("")
        if kind == "efficiency":
            lines.append(f"efficiency report ({rep.get('inputs', {}).get('trace', '?')})")
            lines.append(f"  eta = {100 * res['eta']:.1f} %  (E_spring {res['e_spring_J']:.2f} J, "
                         f"E_loss {res['e_loss_J']:.2f} J, {len(res['events'])} lock events)")
            if res.get("per_event_eta_range"):
                lo, hi = res["per_event_eta_range"]
                lines.append(f"  per-compression eta range = [{100 * lo:.1f}, {100 * hi:.1f}] %")
            if res["events"]:
                lines.append(f"  retained force after final lock = {res['events'][-1]['retained_force_N']:.0f} N")
            lines.append(f"  note: {res.get('loss_model_note', '')}")
        elif kind == "optimization":
            b = res["best"]
            lines.append(f"optimization report ({res['objective']})")
            lines.append(f"  best: r_p={b['pulley_radius_mm']:.4g} r_d={b['drum_radius_mm']:.4g} "
                         f"l_d={b['drum_length_mm']:.4g} d_w={b['wire_diameter_mm']:.4g} mm, "
                         f"mu={b['friction_coeff']:.3g}")
            lines.append(f"  lambda_F = {b['lambda_F']:.3g}, clutch mass {b['estimated_clutch_mass_kg']:.3f} kg, "
                         f"rho_E = {b['rho_E']:.3f}")
            lines.append(f"  Pareto front: {len(res['pareto_front'])} designs")
        else:
            lines.append(f"unrecognized report kind {kind!r}")
    return "\n".join(lines) + "\n"


def cmd_report(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    reports = []
    for path in args.inputs or []:
        try:
            reports.append(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise LockSpringError(f"{path}: cannot load report: {e}") from None
        if reports[-1].get("schema_version") != SCHEMA_VERSION:
            raise LockSpringError(f"{path}: unsupported schema_version {reports[-1].get('schema_version')!r}")
    text = render_summary(config, reports)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


class _Parser(argparse.ArgumentParser):
    """Usage errors follow the same one-line JSON convention as runtime errors."""

    def error(self, message: str) -> None:  # type: ignore[override]
        sys.exit(_fail("usage", f"{self.prog}: {message}") + 1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lockspring", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lockspring {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("clutch", help="capstan metrics for a configuration")
    s.add_argument("--config")
    s.add_argument("--json", action="store_true", help="print JSON instead of text")
    s.set_defaults(func=cmd_clutch)

    s = sub.add_parser("simulate", help="run the configured protocol and write a trace CSV")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("analyze", help="efficiency report for a trace CSV")
    s.add_argument("--trace", required=True)
    s.add_argument("--config")
    s.add_argument("--report", required=True)
    s.add_argument("--plot", help="SVG output path")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("optimize", help="search clutch geometry")
    s.add_argument("--config")
    s.add_argument("--report", required=True)
    s.add_argument("--front", required=True, help="Pareto front CSV path")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("report", help="human-readable summary of JSON reports")
    s.add_argument("--inputs", nargs="*", default=[])
    s.add_argument("--config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def _fail(kind: str, message: str, **extra: Any) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")
    return 1


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(name)s: %(message)s", stream=sys.stderr, force=True,
    )
    try:
        return args.func(args)
    except InfeasibleDesignError as e:
        return _fail(e.kind, str(e), violation_counts=e.violation_counts)
    except LockSpringError as e:
        extra = {k: getattr(e, k) for k in ("path", "line", "row") if getattr(e, k, None) is not None}
        return _fail(e.kind, str(e), **extra)
    except OSError as e:
        return _fail("io", f"{e.filename}: {e.strerror}" if e.filename else str(e))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
