"""Figure rendering for the V2X scheduler simulator's metric CSVs."""

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render, validate_cdf

__version__ = "0.1.0"
