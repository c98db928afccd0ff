"""Shared command-line runner for the plot scripts.

Every script parses the same flags (``--in``, ``--out``, ``--title``),
loads its CSV inputs through a strict reader, builds one figure, and writes
both a PNG and an SVG next to ``--out``.  Inputs are treated as read-only:
their checksums are taken before loading and re-verified after rendering,
and any change aborts with a nonzero exit.
"""

import argparse
import hashlib
import os
import sys

from . import style
from .io import SchemaError

style.configure()

import matplotlib.pyplot as plt  # noqa: E402  (after backend selection)

__all__ = ["run_plot_script"]


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _output_base(out_path):
    root, ext = os.path.splitext(out_path)
    if ext.lower() in (".png", ".svg"):
        return root
    return out_path


def run_plot_script(description, loader, builder, argv=None,
                    multi_input=False):
    """Parse flags, load inputs, render, and save PNG + SVG.

    ``loader`` maps one input path to parsed data.  With ``multi_input``
    the builder receives a list of ``(path, data)`` pairs; otherwise it
    receives the single parsed value.  Returns the process exit code.
    """
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV", help="input CSV file"
                        + (" (repeatable)" if multi_input else ""))
    parser.add_argument("--out", required=True, metavar="PATH",
                        help="output path; .png and .svg are both written")
    parser.add_argument("--title", default=None, help="figure title")
    args = parser.parse_args(argv)

    if not multi_input and len(args.inputs) != 1:
        parser.error("exactly one --in input is expected")

    try:
        checksums = {path: _sha256(path) for path in args.inputs}
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        loaded = [(path, loader(path)) for path in args.inputs]
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if multi_input:
        figure = builder(loaded, title=args.title)
    else:
        figure = builder(loaded[0][1], title=args.title)

    base = _output_base(args.out)
    out_dir = os.path.dirname(os.path.abspath(base))
    os.makedirs(out_dir, exist_ok=True)
    try:
        figure.savefig(base + ".png")
        figure.savefig(base + ".svg", metadata={"Date": None})
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        plt.close(figure)
        return 2
    plt.close(figure)

    for path, checksum in checksums.items():
        if _sha256(path) != checksum:
            print(f"error: input files changed during rendering: {path}",
                  file=sys.stderr)
            return 1
    return 0
