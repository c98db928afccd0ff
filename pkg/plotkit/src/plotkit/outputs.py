"""Plot observed outputs and applied controls from a rollout table."""

import sys

from .figures import outputs_figure
from .io import read_evaluation
from .runner import run_plot_script


def main(argv=None):
    return run_plot_script(
        "Plot outputs and controls over time from a rollout table.",
        read_evaluation, outputs_figure, argv)


if __name__ == "__main__":
    sys.exit(main())
