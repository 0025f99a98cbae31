from graph.state import CertifyState, show_stage_reasoning
from analysis.conditions import check_cor34, check_cor34_chain, check_thm31A
from data.field_io import condition_report_dict
from data.models import StageSignal
from utils.progress import progress


def corollary_agent(state: CertifyState, agent_id: str = "corollary_agent"):
    """Checks the combined existence + uniqueness condition, plus the persistence and chain reports"""
    data = state["data"]
    spec = data["spec"]
    settings = data["settings"]

    progress.update_status(agent_id, None, "Checking combined existence and uniqueness condition")
    combined = check_cor34(spec, settings)

    progress.update_status(agent_id, None, "Checking persistence eigenvalues")
    persistence = check_thm31A(spec, settings)
    chain = check_cor34_chain(spec, settings)

    failures = [entry.id for entry in combined.failures()]
    signal = StageSignal(
        stage=agent_id,
        signal="pass" if combined.all_passed else "fail",
        reasoning="combined condition holds for every species" if not failures else f"failed: {', '.join(failures)}",
        details={
            "margins": {entry.id: entry.margin for entry in combined.entries},
            "persistence_passed": persistence.all_passed,
            "chain_passed": chain.all_passed,
        },
    )

    if state["metadata"].get("show_reasoning"):
        show_stage_reasoning(signal.model_dump(), "Combined Condition")

    progress.update_status(agent_id, None, f"Done ({signal.signal})")

    return {
        "data": {
            "stage_signals": {agent_id: signal},
            "condition_reports": {"combined": combined, "persistence": persistence, "chain": chain},
            "reports": {
                "combined": condition_report_dict(combined),
                "persistence": condition_report_dict(persistence),
                "chain": condition_report_dict(chain),
            },
        }
    }
