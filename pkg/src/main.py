import sys
import argparse
from pathlib import Path

import numpy as np
from dotenv import load_dotenv
from langgraph.graph import END, StateGraph
from pydantic import ValidationError

from graph.state import CertifyState, start
from utils.display import print_condition_report, print_perturbation_report, print_stage_signals_table, print_uniqueness_report
from utils.stages import STAGE_ORDER, get_stage_nodes
from utils.progress import progress
from utils.visualize import save_graph_as_png, save_state_plot, save_sweep_plot
from analysis.conditions import check_cor34, check_cor34_chain, check_hypotheses, check_thm11B, check_thm31A, compute_K
from analysis.perturb import DEFAULT_DELTAS, DEFAULT_DIRECTIONS, perturbation_sweep, sweep_frame
from data.errors import InvalidArgumentError, InvalidPerturbationError, LabError, SpecParseError, SpecViolationError, UndefinedConstantError
from data.field_io import (
    condition_report_dict,
    logistic_dict,
    perturbation_dict,
    solve_report_dict,
    spec_summary,
    uniqueness_dict,
    write_field_csv,
    write_frame_csv,
    write_report,
    write_state_csv,
)
from data.functions import SystemSpec
from data.models import Command, RunConfig, SolveMethod, SystemState
from data.samples import SAMPLES, create_sample_spec
from data.settings import SolverSettings, get_settings
from data.spec_loader import load_spec
from pde.logistic import theta
from pde.spectral import principal_of_laplacian
from pde.system import default_bounds, multi_start_uniqueness, solve_system

# Load environment variables from .env file
load_dotenv()

EXIT_OK = 0
EXIT_CONDITION_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_VALIDATION_ERROR = 3
EXIT_NUMERICAL_FAILURE = 4

DEFAULT_STARTS = 20


def exit_code_for(error: Exception) -> int:
    """Stable mapping from lab errors onto process exit codes."""
    if isinstance(error, SpecParseError):
        return EXIT_PARSE_ERROR
    if isinstance(error, (SpecViolationError, InvalidArgumentError, InvalidPerturbationError, ValidationError, OSError)):
        return EXIT_VALIDATION_ERROR
    # NumericalFailureError, UniquenessViolationError, UndefinedConstantError
    return EXIT_NUMERICAL_FAILURE


def load_run_spec(config: RunConfig) -> tuple[SystemSpec, SolverSettings]:
    """Spec from --sample or --spec, with settings layered env -> [solver] -> flags."""
    if config.sample:
        spec, overrides = create_sample_spec(config.sample, config.grid_n)
    elif config.spec_path:
        spec, overrides = load_spec(config.spec_path, config.grid_n)
    else:
        raise InvalidArgumentError("either a spec file or a sample name is required")
    settings = get_settings().with_overrides(**overrides).with_overrides(tol_res=config.tol_res, max_workers=config.workers)
    return spec, settings


def create_workflow():
    """Create the certify workflow: start -> stages in STAGE_ORDER -> END."""
    workflow = StateGraph(CertifyState)
    workflow.add_node("start", start)

    stage_nodes = get_stage_nodes()
    stage_keys = [key for _, key in STAGE_ORDER]
    for stage_key in stage_keys:
        workflow.add_node(stage_key, stage_nodes[stage_key])

    previous = "start"
    for stage_key in stage_keys:
        workflow.add_edge(previous, stage_key)
        previous = stage_key
    workflow.add_edge(previous, END)

    workflow.set_entry_point("start")
    return workflow


def run_certify(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    agent = create_workflow().compile()
    final_state = agent.invoke(
        {
            "data": {
                "spec": spec,
                "settings": settings,
                "seed": config.seed,
                "starts": config.starts or DEFAULT_STARTS,
                "method": config.method,
                "deltas": config.deltas or list(DEFAULT_DELTAS),
                "directions": config.directions or DEFAULT_DIRECTIONS,
                "stage_signals": {},
                "reports": {},
                "condition_reports": {},
            },
            "metadata": {"show_reasoning": config.show_reasoning},
        },
    )
    data = final_state["data"]
    signals = data["stage_signals"]

    for report in data["condition_reports"].values():
        print_condition_report(report)
    print_uniqueness_report(data["uniqueness"])
    print_perturbation_report(data["perturbation"])
    print_stage_signals_table(signals)

    if data.get("solution") is not None:
        write_state_csv(out_dir / "state.csv", data["solution"])
    frame = sweep_frame(data["perturbation"])
    write_frame_csv(out_dir / "sweep.csv", frame)

    passed = all(signal.signal == "pass" for signal in signals.values())
    if passed:
        verdict = f"unique coexistence state; persists to δ={data['perturbation'].max_unique_delta:g}"
    else:
        failing = [key.replace("_agent", "") for key, signal in signals.items() if signal.signal != "pass"]
        verdict = f"certification failed at: {', '.join(failing)}"

    write_report(
        out_dir / "report.json",
        config.command.value,
        {
            "spec": spec_summary(spec),
            "seed": config.seed,
            "stages": {key: signal.model_dump(mode="json") for key, signal in signals.items()},
            "reports": data["reports"],
            "warnings": progress.sorted_warnings(),
            "verdict": verdict,
        },
    )
    if config.plot:
        if data.get("solution") is not None:
            save_state_plot(data["solution"], out_dir / "state.png")
        save_sweep_plot(frame, out_dir / "sweep.png")
        save_graph_as_png(out_dir / "workflow.png")

    print(verdict)
    return EXIT_OK if passed else EXIT_CONDITION_FAILED


def run_solve(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    bounds = default_bounds(spec, settings)
    report = solve_system(spec, bounds[1], config.method, settings, bounds)
    write_state_csv(out_dir / "state.csv", report.state)
    write_report(out_dir / "report.json", config.command.value, {"spec": spec_summary(spec), "solve": solve_report_dict(report)})
    if config.plot:
        save_state_plot(report.state, out_dir / "state.png")
    norms = ", ".join(f"‖u{i + 1}‖∞={field.sup_norm():.6g}" for i, field in enumerate(report.state.fields))
    if not report.converged:
        print(f"solve did not converge ({report.note or 'residual above tolerance'}); residual={report.residual:.3e}")
        return EXIT_NUMERICAL_FAILURE
    print(f"converged in {report.iterations} iterations; residual={report.residual:.3e}; {norms}")
    return EXIT_OK


def run_eigen(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    pair = principal_of_laplacian(spec.grid, settings)
    write_field_csv(out_dir / "eigen.csv", spec.grid, {"phi": pair.phi.values})
    write_report(
        out_dir / "report.json",
        config.command.value,
        {"grid": spec.grid.model_dump(mode="json"), "eigen": {"eigenvalue": pair.eigenvalue, "residual": pair.residual, "iterations": pair.iterations}},
    )
    print(f"λ₁ = {pair.eigenvalue:.10g}")
    return EXIT_OK


def run_logistic(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    solutions = [theta(spec.grid, sp.h, 0.0, settings) for sp in spec.species]
    write_field_csv(out_dir / "theta.csv", spec.grid, {f"theta{i + 1}": solution.theta.values for i, solution in enumerate(solutions)})
    write_report(out_dir / "report.json", config.command.value, {"spec": spec_summary(spec), "logistic": [logistic_dict(solution) for solution in solutions]})
    if config.plot:
        save_state_plot(SystemState(fields=[solution.theta for solution in solutions]), out_dir / "theta.png", title="Logistic solutions")
    for index, solution in enumerate(solutions, start=1):
        status = "positive" if solution.positive else "zero"
        print(f"θ_h{index}: {status}, ‖θ‖∞={solution.theta.sup_norm():.6g}, residual={solution.residual:.3e}")
    return EXIT_OK


def run_check(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    reports = [check_hypotheses(spec, settings), check_cor34(spec, settings), check_thm31A(spec, settings), check_cor34_chain(spec, settings)]
    payload = {"spec": spec_summary(spec)}
    try:
        payload["K"] = compute_K(spec, settings)
        reports.append(check_thm11B(spec, settings))
    except UndefinedConstantError as exc:
        payload["K"] = None
        progress.warn("check", None, str(exc))
    for report in reports:
        print_condition_report(report)
    payload["reports"] = [condition_report_dict(report) for report in reports]
    write_report(out_dir / "report.json", config.command.value, payload)

    # hypotheses and the combined condition decide the exit status
    gating = reports[:2]
    passed = all(report.all_passed for report in gating)
    print("conditions hold" if passed else f"conditions fail: {', '.join(entry.id for report in gating for entry in report.failures())}")
    return EXIT_OK if passed else EXIT_CONDITION_FAILED


def run_uniqueness(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    report = multi_start_uniqueness(spec, config.starts or DEFAULT_STARTS, config.seed, config.method, settings)
    for index, state in enumerate(report.distinct_solutions, start=1):
        write_state_csv(out_dir / f"state_{index}.csv", state)
    write_report(out_dir / "report.json", config.command.value, {"spec": spec_summary(spec), "seed": config.seed, "uniqueness": uniqueness_dict(report)})
    print_uniqueness_report(report)
    print(report.verdict)
    return EXIT_OK if report.unique and not report.inconclusive else EXIT_CONDITION_FAILED


def run_perturb(config: RunConfig, spec: SystemSpec, settings: SolverSettings, out_dir: Path) -> int:
    report = perturbation_sweep(
        spec,
        config.deltas or DEFAULT_DELTAS,
        config.directions or DEFAULT_DIRECTIONS,
        config.starts or DEFAULT_STARTS,
        config.seed,
        config.method,
        settings,
    )
    frame = sweep_frame(report)
    write_frame_csv(out_dir / "sweep.csv", frame)
    write_report(out_dir / "report.json", config.command.value, {"spec": spec_summary(spec), "perturbation": perturbation_dict(report)})
    if config.plot:
        save_sweep_plot(frame, out_dir / "sweep.png")
    print_perturbation_report(report)
    unanimous = bool(report.cells) and all(cell.unique for cell in report.cells)
    print(f"persists to δ={report.max_unique_delta:g}" if report.max_unique_delta is not None else "uniqueness not observed")
    return EXIT_OK if unanimous else EXIT_CONDITION_FAILED


COMMANDS = {
    Command.SOLVE: run_solve,
    Command.EIGEN: run_eigen,
    Command.LOGISTIC: run_logistic,
    Command.CHECK: run_check,
    Command.UNIQUENESS: run_uniqueness,
    Command.PERTURB: run_perturb,
    Command.CERTIFY: run_certify,
}


def run(config: RunConfig) -> int:
    """Dispatch one command; returns the process exit status."""
    progress.start(f"Coexistence lab: {config.command.value}")
    try:
        spec, settings = load_run_spec(config)
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[config.command](config, spec, settings, out_dir)
    except (LabError, ValidationError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    finally:
        progress.stop()


def _float_list(raw: str) -> list[float]:
    try:
        values = [float(item) for item in raw.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}")
    if not values or not all(np.isfinite(values)):
        raise argparse.ArgumentTypeError(f"expected finite numbers, got {raw!r}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Coexistence Lab - steady states of N-species elliptic competition systems")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="Path to a TOML spec file")
    source.add_argument("--sample", choices=sorted(SAMPLES), help="Use a bundled sample spec")
    parser.add_argument("--command", choices=[c.value for c in Command], default=Command.CERTIFY.value, help="Pipeline to run")
    parser.add_argument("--out", default="outputs", help="Output directory for report.json and CSVs")
    parser.add_argument("--seed", type=int, default=0, help="Seed for multi-start and perturbation directions")
    parser.add_argument("--starts", type=int, help="Number of multi-start initial states")
    parser.add_argument("--tol-res", type=float, help="Override the residual tolerance (sup norm) of system solves")
    parser.add_argument("--grid-n", type=int, help="Override the interior node count along every axis")
    parser.add_argument("--method", choices=[m.value for m in SolveMethod], default=SolveMethod.HYBRID.value, help="System solver")
    parser.add_argument("--workers", type=int, help="Worker threads for multi-start and sweep cells")
    parser.add_argument("--deltas", type=_float_list, help="Comma-separated perturbation radii")
    parser.add_argument("--directions", type=int, help="Number of random perturbation directions")
    parser.add_argument("--plot", action="store_true", help="Save matplotlib PNGs next to the CSVs")
    parser.add_argument("--show-reasoning", action="store_true", help="Show stage reasoning")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the coexistence lab."""
    args = build_parser().parse_args(argv)
    config = RunConfig(
        command=Command(args.command),
        spec_path=args.spec,
        sample=args.sample,
        out_dir=args.out,
        seed=args.seed,
        starts=args.starts,
        tol_res=args.tol_res,
        grid_n=args.grid_n,
        method=SolveMethod(args.method),
        workers=args.workers,
        deltas=args.deltas,
        directions=args.directions,
        plot=args.plot,
        show_reasoning=args.show_reasoning,
    )
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
