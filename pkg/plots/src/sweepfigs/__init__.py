"""Figure regeneration for atom-assembly sweep results."""

from .figures import FIGURE_IDS, FigureSpec, build_fill_vs_iteration, build_mean_curve, load_rows, render

__all__ = [
    "FIGURE_IDS",
    "FigureSpec",
    "build_fill_vs_iteration",
    "build_mean_curve",
    "load_rows",
    "render",
]
