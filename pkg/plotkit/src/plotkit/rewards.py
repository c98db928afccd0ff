"""Plot reward magnitude against wall time for one or more training logs."""

import os
import sys

from .figures import rewards_figure
from .io import read_train_log
from .runner import run_plot_script


def _labels(paths):
    stems = [os.path.splitext(os.path.basename(path))[0] for path in paths]
    if len(set(stems)) == len(stems):
        return stems
    return list(paths)


def _build(loaded, title=None):
    labels = _labels([path for path, _ in loaded])
    runs = [(label, columns)
            for label, (_, columns) in zip(labels, loaded)]
    return rewards_figure(runs, title=title)


def main(argv=None):
    return run_plot_script(
        "Plot |normalized reward| against wall time from training logs.",
        read_train_log, _build, argv, multi_input=True)


if __name__ == "__main__":
    sys.exit(main())
