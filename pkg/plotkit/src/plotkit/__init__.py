"""Log-log convergence figures from solver run CSVs."""

from .core import DEFAULT_QUANTITY, GuideLine, PlotSpec, RenderResult, SchemaError, Series, load_series, render

__all__ = [
    "DEFAULT_QUANTITY",
    "GuideLine",
    "PlotSpec",
    "RenderResult",
    "SchemaError",
    "Series",
    "load_series",
    "render",
]
