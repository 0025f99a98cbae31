from graph.state import CertifyState, show_stage_reasoning
from analysis.conditions import check_thm33_local, check_thm33_pointwise
from data.field_io import condition_report_dict, invertibility_dict
from data.models import StageSignal
from pde.system import assemble_frechet, check_invertibility
from utils.progress import progress


def invertibility_agent(state: CertifyState, agent_id: str = "invertibility_agent"):
    """Checks that the Fréchet derivative at the coexistence state is invertible"""
    data = state["data"]
    spec = data["spec"]
    solution = data.get("solution")

    if solution is None:
        signal = StageSignal(stage=agent_id, signal="inconclusive", reasoning="no coexistence state to linearize at")
        progress.update_status(agent_id, None, "Skipped (no coexistence state)")
        return {"data": {"stage_signals": {agent_id: signal}}}

    progress.update_status(agent_id, None, "Assembling Fréchet matrix")
    frechet = assemble_frechet(spec, solution)

    progress.update_status(agent_id, None, "Estimating smallest singular value")
    inverse = check_invertibility(frechet, data["settings"])
    pointwise = check_thm33_pointwise(spec, solution)
    local = check_thm33_local(spec, solution)

    passed = inverse.invertible and pointwise.all_passed
    signal = StageSignal(
        stage=agent_id,
        signal="pass" if passed else "fail",
        reasoning=f"σ_min={inverse.sigma_min:.3e} vs threshold {inverse.threshold:.3e}; pointwise inequality {'holds' if pointwise.all_passed else 'fails'}",
        details={"sigma_min": inverse.sigma_min, "symmetric_min_eigenvalue": inverse.symmetric_min_eigenvalue, "local_passed": local.all_passed},
    )

    if state["metadata"].get("show_reasoning"):
        show_stage_reasoning(signal.model_dump(), "Invertibility")

    progress.update_status(agent_id, None, f"Done ({signal.signal})")

    return {
        "data": {
            "stage_signals": {agent_id: signal},
            "condition_reports": {"pointwise": pointwise, "local": local},
            "reports": {
                "invertibility": invertibility_dict(inverse),
                "pointwise": condition_report_dict(pointwise),
                "local": condition_report_dict(local),
            },
        }
    }
