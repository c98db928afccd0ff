"""Plot a space-time heatmap of a recorded state trajectory."""

import sys

from .figures import field_figure
from .io import read_field
from .runner import run_plot_script


def main(argv=None):
    return run_plot_script(
        "Plot a space-time heatmap from a state-trajectory table.",
        read_field, field_figure, argv)


if __name__ == "__main__":
    sys.exit(main())
