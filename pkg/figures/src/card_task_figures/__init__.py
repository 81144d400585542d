"""Figure regeneration for consensus-cards CSV outputs."""

from .figures import FigureSpec, render_figure
from .schema import SchemaError

__version__ = "0.1.0"

__all__ = ["FigureSpec", "SchemaError", "render_figure"]
