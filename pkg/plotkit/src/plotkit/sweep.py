"""Plot latent and full eigenvalue moduli across a feedback-gain sweep."""

import sys

from .figures import sweep_figure
from .io import read_sweep
from .runner import run_plot_script


def main(argv=None):
    return run_plot_script(
        "Plot eigenvalue moduli against feedback gain from a sweep table.",
        read_sweep, sweep_figure, argv)


if __name__ == "__main__":
    sys.exit(main())
