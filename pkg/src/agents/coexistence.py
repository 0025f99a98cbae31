from graph.state import CertifyState, show_stage_reasoning
from analysis.conditions import check_linearized_eigen, extinction_diagnostic
from data.field_io import condition_report_dict, uniqueness_dict
from data.models import StageSignal
from pde.system import multi_start_uniqueness
from utils.progress import progress


def coexistence_agent(state: CertifyState, agent_id: str = "coexistence_agent"):
    """Solves the system from many starts and clusters the coexistence states found"""
    data = state["data"]
    spec = data["spec"]
    settings = data["settings"]

    progress.update_status(agent_id, None, f"Running {data['starts']} starts")
    report = multi_start_uniqueness(spec, data["starts"], data["seed"], data["method"], settings)
    solution = report.distinct_solutions[0] if report.distinct_solutions else None

    condition_reports = {}
    if report.boundary_states:
        progress.update_status(agent_id, None, "Diagnosing extinct species")
        condition_reports["extinction"] = extinction_diagnostic(spec, report.boundary_states[0], settings)
    if solution is not None:
        progress.update_status(agent_id, None, "Checking linearized eigenvalues at the state")
        condition_reports["linearized"] = check_linearized_eigen(spec, solution, settings)

    if report.inconclusive:
        verdict = "inconclusive"
    else:
        verdict = "pass" if report.unique else "fail"
    signal = StageSignal(
        stage=agent_id,
        signal=verdict,
        reasoning=report.verdict,
        details={"converged": report.converged, "extinct": report.extinct, "clusters": len(report.distinct_solutions)},
    )

    if state["metadata"].get("show_reasoning"):
        show_stage_reasoning(signal.model_dump(), "Coexistence")

    progress.update_status(agent_id, None, f"Done ({signal.signal})")

    return {
        "data": {
            "stage_signals": {agent_id: signal},
            "uniqueness": report,
            "solution": solution,
            "condition_reports": condition_reports,
            "reports": {
                "uniqueness": uniqueness_dict(report),
                **{name: condition_report_dict(value) for name, value in condition_reports.items()},
            },
        }
    }
