from typing_extensions import Annotated, TypedDict
import json

from utils.progress import progress

ACCUMULATED_KEYS = ("stage_signals", "reports", "condition_reports")


def merge_dicts(a: dict[str, any], b: dict[str, any]) -> dict[str, any]:
    """Merge dictionaries, accumulating stage signals and reports instead of replacing them"""
    result = {**a}
    for key, value in b.items():
        if key in ACCUMULATED_KEYS and key in a:
            result[key] = {**a[key], **value}
        else:
            result[key] = value
    return result


# Certify pipeline state
class CertifyState(TypedDict):
    data: Annotated[dict[str, any], merge_dicts]
    metadata: Annotated[dict[str, any], merge_dicts]


def start(state: CertifyState):
    """Initialize the certify workflow."""
    spec = state["data"]["spec"]
    progress.update_status("start", None, f"{spec.n_species} species on a {spec.grid.kind.value} grid {spec.grid.interior_counts}")
    return state


def show_stage_reasoning(output, stage_name):
    """Display stage reasoning in a formatted way"""
    print(f"\n{'=' * 10} {stage_name.center(28)} {'=' * 10}")
    if isinstance(output, (dict, list)):
        print(json.dumps(output, indent=2, default=str))
    else:
        print(output)
    print("=" * 48)
