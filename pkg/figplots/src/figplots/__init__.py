"""figplots: regenerate paper-style figures from vcplab CSV outputs."""

from .panels import PANEL_METRICS, PanelError, plot

__version__ = "0.1.0"
