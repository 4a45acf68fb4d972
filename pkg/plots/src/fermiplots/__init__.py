"""Batch renderer for fermiswap experiment CSVs.

Read-only consumer of the simulation output: every number shown comes
either from the CSV files or from a closed-form reference law drawn for
visual comparison. Nothing here recomputes physics.
"""
from .figures import FIGURE_IDS, FigureSpec, render
from .schema import EmptyDataError, SchemaMismatch

__all__ = ["FIGURE_IDS", "FigureSpec", "render", "EmptyDataError",
           "SchemaMismatch"]

__version__ = "0.1.0"
