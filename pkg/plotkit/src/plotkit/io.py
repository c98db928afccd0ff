"""Strict readers for the pipeline's CSV interfaces.

Each reader enforces its schema exactly — column names, order, and numeric
cells — and raises :class:`SchemaError` naming the offending column (and
line, for value errors) on any deviation.  Data rows may be absent; a
header-only file parses to empty arrays.
"""

import numpy as np

__all__ = [
    "SchemaError",
    "TRAIN_LOG_COLUMNS",
    "DETECTION_COLUMNS",
    "read_train_log",
    "read_detection",
    "read_field",
    "read_evaluation",
    "read_sweep",
]


class SchemaError(Exception):
    """Input file does not match the documented CSV contract."""


TRAIN_LOG_COLUMNS = (
    "step", "episode", "wall_time_s", "episode_length", "terminated_early",
    "accumulated_reward", "normalized_reward", "actor_loss", "critic_loss",
    "env_queries",
)
DETECTION_COLUMNS = ("epsilon", "angle_rad", "samples_to_detect")


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not lines or not lines[0].strip():
        raise SchemaError(f"{path}: empty file (missing header)")
    return lines


def _check_exact(path, header, expected):
    for column in expected:
        if column not in header:
            raise SchemaError(f"{path}: missing column '{column}'")
    for column in header:
        if column not in expected:
            raise SchemaError(f"{path}: unexpected column '{column}'")
    for position, (got, want) in enumerate(zip(header, expected)):
        if got != want:
            raise SchemaError(
                f"{path}: column '{got}' out of position {position} "
                f"(expected '{want}')")


def _check_indexed(path, header, first, groups):
    """Validate ``first`` followed by consecutively numbered column groups.

    ``groups`` is a sequence of ``(prefix, start_index)``; every group must
    contribute at least one column.  Returns the column count per group.
    """
    if header[0] != first:
        raise SchemaError(
            f"{path}: missing column '{first}' (found '{header[0]}' first)")
    position = 1
    counts = []
    for prefix, start in groups:
        index = start
        while position < len(header) and header[position] == f"{prefix}{index}":
            position += 1
            index += 1
        if index == start:
            raise SchemaError(f"{path}: missing column '{prefix}{start}'")
        counts.append(index - start)
    if position < len(header):
        raise SchemaError(f"{path}: unexpected column '{header[position]}'")
    return counts


def _parse_rows(path, lines, header):
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(header)} cells, "
                f"got {len(cells)}")
        row = []
        for column, cell in zip(header, cells):
            try:
                row.append(float(cell))
            except ValueError:
                raise SchemaError(
                    f"{path}:{lineno}: non-numeric value {cell.strip()!r} "
                    f"in column '{column}'") from None
        rows.append(row)
    if rows:
        return np.asarray(rows, dtype=float)
    return np.zeros((0, len(header)))


def _read_exact(path, expected):
    lines = _read_lines(path)
    header = lines[0].split(",")
    _check_exact(path, header, expected)
    data = _parse_rows(path, lines, header)
    return {column: data[:, index] for index, column in enumerate(expected)}


def read_train_log(path):
    """Training-episode table as a column dict (header-only files parse)."""
    return _read_exact(path, TRAIN_LOG_COLUMNS)


def read_detection(path):
    """Detection table as a column dict: epsilon, angle, snapshot count."""
    return _read_exact(path, DETECTION_COLUMNS)


def read_field(path):
    """Space-time state trajectory: ``(time_index, states)``.

    ``states`` has one row per time index and one column per state entry.
    """
    lines = _read_lines(path)
    header = lines[0].split(",")
    (width,) = _check_indexed(path, header, "time_index", [("state_", 0)])
    data = _parse_rows(path, lines, header)
    return data[:, 0], data[:, 1:1 + width]


def read_evaluation(path):
    """Rollout table: ``(time_index, outputs, controls)`` arrays."""
    lines = _read_lines(path)
    header = lines[0].split(",")
    n_out, n_ctrl = _check_indexed(
        path, header, "time_index", [("output_", 0), ("control_", 0)])
    data = _parse_rows(path, lines, header)
    return data[:, 0], data[:, 1:1 + n_out], data[:, 1 + n_out:1 + n_out + n_ctrl]


def read_sweep(path):
    """Gain-sweep table: ``(psi, latent_modulus, full_moduli)`` arrays.

    ``full_moduli`` has one column per closed-loop eigenvalue modulus
    (columns are 1-based in the file).
    """
    lines = _read_lines(path)
    header = lines[0].split(",")
    for position, column in enumerate(("psi", "lat_eig_mod")):
        if position >= len(header) or header[position] != column:
            raise SchemaError(f"{path}: missing column '{column}'")
    if len(header) < 3:
        raise SchemaError(f"{path}: missing column 'full_eig1_mod'")
    for offset, column in enumerate(header[2:]):
        expected = f"full_eig{offset + 1}_mod"
        if column != expected:
            raise SchemaError(
                f"{path}: unexpected column '{column}' "
                f"(expected '{expected}')")
    data = _parse_rows(path, lines, header)
    return data[:, 0], data[:, 1], data[:, 2:]
