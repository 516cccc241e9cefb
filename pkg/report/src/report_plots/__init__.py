"""Read-only figure generation for solver CSV output directories."""
from .figures import make_report, render_bundle
from .inventory import (
    ReportBundle,
    Snapshot,
    discover,
    read_distances,
    read_entropy,
    read_layers,
    read_snapshot,
)

__all__ = [
    "ReportBundle",
    "Snapshot",
    "discover",
    "make_report",
    "read_distances",
    "read_entropy",
    "read_layers",
    "read_snapshot",
    "render_bundle",
]
