"""Terminal output: colours, aligned tables and log formatting."""

from __future__ import annotations

import logging
import os
import re
import sys
from typing import Optional, Sequence, TextIO

_ANSI_RE = re.compile(r"\033\[[0-9;]*m")

_STATUS_COLORS = {
    "ok": "GREEN",
    "feasible": "GREEN",
    "excluded": "YELLOW",
    "fixed_infeasible": "RED",
    "infeasible": "RED",
}
_KIND_COLORS = {
    "circular": "CYAN",
    "inner_elliptic": "MAGENTA",
    "elliptic": "BLUE",
    "hover": "YELLOW",
}


#############################################
# Coloring / Formatting Helpers
#############################################


class Colorizer:
    """Colour helper honouring ``NO_COLOR`` and only colouring TTY streams."""

    ANSI = {
        "RESET": "\033[0m",
        "BOLD": "\033[1m",
        "DIM": "\033[2m",
        "CYAN": "\033[36m",
        "GREEN": "\033[32m",
        "YELLOW": "\033[33m",
        "RED": "\033[31m",
        "MAGENTA": "\033[35m",
        "BLUE": "\033[34m",
    }

    def __init__(self, stream: Optional[TextIO] = None):
        stream = stream if stream is not None else sys.stdout
        self.enabled = os.environ.get("NO_COLOR") is None and stream.isatty()

    def style(self, text: str, color: str, *, bold: bool = False) -> str:
        if not self.enabled or not text:
            return text
        parts = [self.ANSI[color]]
        if bold:
            parts.append(self.ANSI["BOLD"])
        parts.append(text)
        parts.append(self.ANSI["RESET"])
        return "".join(parts)

    def header(self, text: str) -> str:
        return self.style(text, "BLUE", bold=True)

    def status(self, text: str) -> str:
        """Colour an outcome label (``ok``, ``infeasible``, ...) by what it means for the run."""
        color = _STATUS_COLORS.get(text)
        if color is None:
            return text
        return self.style(text, color, bold=color == "RED")

    def selection(self, kind: str, energy_kj_per_hour: float) -> str:
        """``<kind> <energy> kJ/h`` with the trajectory kind highlighted."""
        return f"{self.style(kind, _KIND_COLORS.get(kind, 'CYAN'))} {energy_kj_per_hour:.1f} kJ/h"

    def infeasible_share(self, fraction: float) -> str:
        """Percentage of infeasible scenarios, red as soon as any failed."""
        return self.style(f"{100 * fraction:.1f}%", "RED" if fraction > 0 else "GREEN")


def strip_ansi(text: str) -> str:
    return _ANSI_RE.sub("", text)


#############################################
# Simple Table Formatter
#############################################


def format_table(rows: Sequence[Sequence[str]], headers: Sequence[str]) -> str:
    """Format a table with left-aligned columns separated by two spaces.

    Args:
        rows: row cells, already rendered as strings (may contain ANSI colours)
        headers: column headers

    Returns:
        The table, or an empty string when there are no rows.
    """
    if not rows:
        return ""
    all_rows = [list(headers)] + [list(row) for row in rows]
    widths = [0] * len(headers)
    for row in all_rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(strip_ansi(cell)))

    lines = []
    for row in all_rows:
        cells = [cell + " " * (widths[j] - len(strip_ansi(cell))) for j, cell in enumerate(row)]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


#############################################
# Logging
#############################################

_LEVEL_COLORS = {
    "DEBUG": "MAGENTA",
    "INFO": "GREEN",
    "WARNING": "YELLOW",
    "ERROR": "RED",
    "CRITICAL": "RED",
}


class LevelFormatter(logging.Formatter):
    """``LEVEL: message`` with the level name coloured when colour is enabled."""

    def __init__(self, colorizer: Colorizer):
        super().__init__()
        self.colorizer = colorizer

    def format(self, record: logging.LogRecord) -> str:
        color = _LEVEL_COLORS.get(record.levelname, "CYAN")
        prefix = self.colorizer.style(record.levelname, color, bold=True)
        message = f"{prefix}: {record.getMessage()}"
        if record.exc_info:
            message = f"{message}\n{self.formatException(record.exc_info)}"
        return message


def configure_logging(verbose: bool = False) -> None:
    """Replace the root handlers with one stderr handler; DEBUG when ``verbose``."""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(LevelFormatter(Colorizer(sys.stderr)))
    root.addHandler(handler)
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    # matplotlib's font manager is chatty at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
