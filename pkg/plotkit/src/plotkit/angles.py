"""Plot subspace angle and detection cost against coupling strength."""

import sys

from .figures import angles_figure
from .io import read_detection
from .runner import run_plot_script


def main(argv=None):
    return run_plot_script(
        "Plot subspace angle and snapshots-to-detect from a detection table.",
        read_detection, angles_figure, argv)


if __name__ == "__main__":
    sys.exit(main())
