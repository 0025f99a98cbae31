from graph.state import CertifyState, show_stage_reasoning
from analysis.conditions import check_hypotheses
from data.field_io import condition_report_dict
from data.models import StageSignal
from utils.progress import progress


def hypotheses_agent(state: CertifyState, agent_id: str = "hypotheses_agent"):
    """Checks the structural hypotheses (monotone h and g, g(0) = 0, reproduction above λ₁)"""
    data = state["data"]
    spec = data["spec"]

    progress.update_status(agent_id, None, "Checking structural hypotheses")
    report = check_hypotheses(spec, data["settings"])

    failures = [entry.id for entry in report.failures()]
    signal = StageSignal(
        stage=agent_id,
        signal="pass" if report.all_passed else "fail",
        reasoning="all hypotheses hold" if not failures else f"failed: {', '.join(failures)}",
        details={"worst_margin": min(entry.margin for entry in report.entries)},
    )

    if state["metadata"].get("show_reasoning"):
        show_stage_reasoning(signal.model_dump(), "Hypotheses")

    progress.update_status(agent_id, None, f"Done ({signal.signal})")

    return {
        "data": {
            "stage_signals": {agent_id: signal},
            "condition_reports": {"hypotheses": report},
            "reports": {"hypotheses": condition_report_dict(report)},
        }
    }
