from tabulate import tabulate
from colorama import Fore, Style

from data.models import ConditionReport, PerturbationReport, UniquenessReport

SIGNAL_COLORS = {"pass": Fore.GREEN, "fail": Fore.RED, "inconclusive": Fore.YELLOW}


def _colored(text: str, color: str) -> str:
    return f"{color}{text}{Style.RESET_ALL}"


def print_condition_report(report: ConditionReport):
    """Print one condition report as a grid table"""
    print(f"\n{Fore.YELLOW}{report.name.upper()}:{Style.RESET_ALL}")
    table_data = []
    for entry in report.entries:
        if not entry.applicable:
            status = _colored("N/A", Fore.YELLOW)
        else:
            status = _colored("PASS", Fore.GREEN) if entry.passed else _colored("FAIL", Fore.RED)
        note = entry.note[:60] + "..." if len(entry.note) > 60 else entry.note
        table_data.append([entry.id, f"{entry.lhs:.6g}", f"{entry.rhs:.6g}", f"{entry.margin:+.3e}", status, note])

    headers = ["Id", "LHS", "RHS", "Margin", "Status", "Note"]
    print(tabulate(table_data, headers=headers, tablefmt="grid"))


def print_stage_signals_table(stage_signals):
    """Print stage signals in a formatted table"""
    if not stage_signals:
        print("No stage signals available")
        return

    table_data = []
    for stage_name, signal in stage_signals.items():
        reasoning = signal.reasoning[:100] + "..." if len(signal.reasoning) > 100 else signal.reasoning
        table_data.append([
            stage_name.replace("_agent", "").replace("_", " ").title(),
            _colored(signal.signal.upper(), SIGNAL_COLORS.get(signal.signal, Fore.WHITE)),
            reasoning,
        ])

    headers = ["Stage", "Signal", "Reasoning"]
    print(tabulate(table_data, headers=headers, tablefmt="grid"))


def print_uniqueness_report(report: UniquenessReport):
    """Print the multi-start outcome and the sup norms of each distinct state"""
    print(f"\n{Fore.YELLOW}MULTI-START: {report.verdict}{Style.RESET_ALL}")
    table_data = [
        ["Starts", report.starts],
        ["Converged", report.converged],
        ["Non-converged", report.non_converged],
        ["Extinct", report.extinct],
        ["Clusters", len(report.distinct_solutions)],
    ]
    print(tabulate(table_data, tablefmt="simple"))
    for index, state in enumerate(report.distinct_solutions):
        norms = ", ".join(f"‖u{i + 1}‖∞={field.sup_norm():.6g}" for i, field in enumerate(state.fields))
        print(f"   • cluster {index + 1} ({report.cluster_sizes[index]} starts): {norms}")


def print_perturbation_report(report: PerturbationReport):
    """Print the sweep as a δ × direction summary table"""
    print(f"\n{Fore.YELLOW}PERTURBATION SWEEP{' (exploratory)' if report.exploratory else ''}:{Style.RESET_ALL}")
    table_data = []
    for delta in report.deltas:
        cells = [cell for cell in report.cells if cell.delta == delta]
        unique = sum(1 for cell in cells if cell.unique)
        distances = [cell.distance for cell in cells if cell.distance is not None]
        table_data.append([f"{delta:g}", f"{unique}/{len(cells)}", f"{max(distances):.3e}" if distances else "N/A"])

    headers = ["δ", "Unique", "Max distance"]
    print(tabulate(table_data, headers=headers, tablefmt="grid"))
    if report.max_unique_delta is not None:
        print(f"{Fore.GREEN}Uniqueness persists to δ={report.max_unique_delta:g}{Style.RESET_ALL}")
    else:
        print(f"{Fore.RED}Uniqueness not observed at the smallest δ{Style.RESET_ALL}")
