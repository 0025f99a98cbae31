from graph.state import CertifyState, show_stage_reasoning
from analysis.perturb import perturbation_sweep
from data.field_io import perturbation_dict
from data.models import StageSignal
from utils.progress import progress


def perturbation_agent(state: CertifyState, agent_id: str = "perturbation_agent"):
    """Sweeps perturbed growth functions and reports how far uniqueness persists"""
    data = state["data"]

    progress.update_status(agent_id, None, f"Sweeping {data['directions']} directions over {len(data['deltas'])} radii")
    report = perturbation_sweep(data["spec"], data["deltas"], data["directions"], data["starts"], data["seed"], data["method"], data["settings"])

    unanimous = bool(report.cells) and all(cell.unique for cell in report.cells)
    if unanimous:
        reasoning = f"unique for every direction up to δ={report.max_unique_delta:g}"
    elif report.max_unique_delta is not None:
        reasoning = f"unique up to δ={report.max_unique_delta:g}, not beyond"
    else:
        reasoning = "uniqueness not observed at the smallest radius"
    if report.exploratory:
        reasoning += " (exploratory)"
    signal = StageSignal(
        stage=agent_id,
        signal="pass" if unanimous else "fail",
        reasoning=reasoning,
        details={"max_unique_delta": report.max_unique_delta, "exploratory": report.exploratory},
    )

    if state["metadata"].get("show_reasoning"):
        show_stage_reasoning(signal.model_dump(), "Perturbation")

    progress.update_status(agent_id, None, f"Done ({signal.signal})")

    return {
        "data": {
            "stage_signals": {agent_id: signal},
            "perturbation": report,
            "reports": {"perturbation": perturbation_dict(report)},
        }
    }
