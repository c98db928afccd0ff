"""Shared matplotlib configuration for deterministic rendering.

``configure`` must run before ``matplotlib.pyplot`` is imported anywhere in
the process: it forces the non-interactive Agg backend and pins the SVG hash
salt so that identical inputs render byte-identical SVG files across runs
and machines.
"""

import matplotlib

_configured = False


def configure():
    """Force deterministic rendering settings (idempotent)."""
    global _configured
    if _configured:
        return
    matplotlib.use("Agg", force=True)
    matplotlib.rcParams["svg.hashsalt"] = "plotkit"
    matplotlib.rcParams["savefig.dpi"] = 150
    _configured = True
