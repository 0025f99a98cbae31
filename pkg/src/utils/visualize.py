import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import networkx as nx
import pandas as pd
from pathlib import Path

from data.models import SystemState
from utils.stages import STAGE_ORDER


def save_state_plot(state: SystemState, filename: Path, title: str = "Coexistence state"):
    """Plot every species density; 1D as curves, 2D as one heat map per species"""
    grid = state.grid
    if grid.dim == 1:
        x = grid.axis_coordinates()[0]
        plt.figure(figsize=(8, 5))
        for index, field in enumerate(state.fields):
            plt.plot(x, field.values, label=f"u{index + 1}")
        plt.xlabel("x")
        plt.ylabel("density")
        plt.legend()
    else:
        nx_, ny_ = grid.interior_counts
        fig, axes = plt.subplots(1, len(state.fields), figsize=(5 * len(state.fields), 4), squeeze=False)
        for index, (ax, field) in enumerate(zip(axes[0], state.fields)):
            image = ax.imshow(field.values.reshape(ny_, nx_), origin="lower", extent=(0, grid.lengths[0], 0, grid.lengths[1]))
            ax.set_title(f"u{index + 1}")
            fig.colorbar(image, ax=ax)
    plt.suptitle(title)
    plt.tight_layout()
    plt.savefig(filename, dpi=150, bbox_inches="tight")
    plt.close("all")
    return filename


def save_sweep_plot(frame: pd.DataFrame, filename: Path):
    """distance(δ) per direction on log-log axes"""
    plt.figure(figsize=(8, 5))
    for direction_id, cells in frame.dropna(subset=["distance"]).groupby("direction_id"):
        cells = cells[cells["delta"] > 0]
        plt.loglog(cells["delta"], cells["distance"], marker="o", label=f"direction {direction_id}")
    plt.xlabel("δ")
    plt.ylabel("sup distance to the base state")
    plt.title("Perturbation sweep")
    plt.legend(fontsize=7)
    plt.tight_layout()
    plt.savefig(filename, dpi=150, bbox_inches="tight")
    plt.close("all")
    return filename


def save_graph_as_png(filename: Path):
    """Save the certify workflow graph as a PNG file"""
    G = nx.DiGraph()
    nodes = ["Start"] + [display for display, _ in STAGE_ORDER] + ["End"]
    nx.add_path(G, nodes)

    plt.figure(figsize=(12, 3))
    pos = {node: (index, 0) for index, node in enumerate(nodes)}
    nx.draw_networkx_nodes(G, pos, node_color="lightblue", node_size=3000, alpha=0.8)
    nx.draw_networkx_edges(G, pos, edge_color="gray", arrows=True, arrowsize=20, alpha=0.6)
    nx.draw_networkx_labels(G, pos, font_size=8, font_weight="bold")
    plt.title("Certify Workflow", fontsize=14, fontweight="bold")
    plt.axis("off")
    plt.tight_layout()
    plt.savefig(filename, dpi=150, bbox_inches="tight")
    plt.close("all")
    return filename
