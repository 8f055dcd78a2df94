"""drfigs: batch renderer for the simulator's CSV outputs."""

__version__ = "0.1.0"

from .render import FIGURES, RenderError, render

__all__ = ["FIGURES", "RenderError", "render"]
