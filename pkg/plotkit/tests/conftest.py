import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from plotkit.io import TRAIN_LOG_COLUMNS  # noqa: E402

TRAIN_HEADER = ",".join(TRAIN_LOG_COLUMNS)


def _write(path, lines):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def write_csv(tmp_path):
    """Write lines to a file under tmp_path and return its path."""
    def _factory(name, lines):
        return _write(tmp_path / name, lines)
    return _factory


@pytest.fixture
def train_header():
    return TRAIN_HEADER


@pytest.fixture
def train_log_csv(tmp_path):
    return _write(tmp_path / "train_log.csv", [
        TRAIN_HEADER,
        "1000,5,1.25,200,0,-12.5,-0.0625,nan,0.31,4200",
        "2000,11,2.5,200,0,-6.25,-0.03125,0.02,0.11,8400",
        "3000,17,3.75,200,0,-1.0,-0.005,0.01,0.05,12600",
    ])


@pytest.fixture
def empty_train_log_csv(tmp_path):
    return _write(tmp_path / "empty_train_log.csv", [TRAIN_HEADER])


@pytest.fixture
def sweep_csv(tmp_path):
    lines = ["psi,lat_eig_mod,full_eig1_mod,full_eig2_mod"]
    for psi, lat, f1, f2 in [(-3.0, 0.2417, 0.9, 0.2417),
                             (-2.0, 0.2056, 0.9, 0.2056),
                             (-1.0, 0.6528, 0.9, 0.6528),
                             (0.0, 1.1, 1.1, 0.9),
                             (1.0, 1.5472, 1.5472, 0.9)]:
        lines.append(f"{psi!r},{lat!r},{f1!r},{f2!r}")
    return _write(tmp_path / "sweep.csv", lines)


@pytest.fixture
def field_csv(tmp_path):
    lines = ["time_index,state_0,state_1,state_2,state_3"]
    for t in range(6):
        cells = [str(t)] + [repr(0.5 * (t + 1) * (j - 1.5))
                            for j in range(4)]
        lines.append(",".join(cells))
    return _write(tmp_path / "field.csv", lines)


@pytest.fixture
def evaluation_csv(tmp_path):
    lines = ["time_index,output_0,output_1,control_0"]
    for t in range(5):
        lines.append(f"{t},{0.9 ** t!r},{(-0.8) ** t!r},{0.1 * t!r}")
    return _write(tmp_path / "evaluation.csv", lines)


@pytest.fixture
def detection_csv(tmp_path):
    return _write(tmp_path / "detection.csv", [
        "epsilon,angle_rad,samples_to_detect",
        "0.01,1.5208,13",
        "0.1,1.0304,5",
        "1.0,0.1974,1",
        "10.0,0.0200,1",
    ])
