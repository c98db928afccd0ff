"""Flat key/value configuration: parsing, coercion, overrides."""

import pytest

from stabl.config import (
    apply_overrides,
    coerce_value,
    get,
    load_config,
    parse_config_text,
    section,
)
from stabl.errors import ConfigNotFoundError, UsageError


def test_coerce_value_types():
    assert coerce_value("3") == 3 and isinstance(coerce_value("3"), int)
    assert coerce_value("-2") == -2
    assert coerce_value("0.5") == 0.5 and isinstance(coerce_value("0.5"), float)
    assert coerce_value("1e-3") == 1e-3
    assert coerce_value("true") is True and coerce_value("FALSE") is False
    assert coerce_value("yes") is True and coerce_value("off") is False
    assert coerce_value(" toy2d ") == "toy2d"


def test_parse_config_text_comments_and_blanks():
    text = """
    # full line comment
    train.seed = 3
    train.lambda_u = 0.001  # trailing comment
    env.name = toy2d

    flag.on = true
    """
    values = parse_config_text(text)
    assert values == {
        "train.seed": 3,
        "train.lambda_u": 0.001,
        "env.name": "toy2d",
        "flag.on": True,
    }


def test_parse_config_text_malformed_reports_line():
    with pytest.raises(UsageError, match=":3:"):
        parse_config_text("a = 1\nb = 2\nnot an assignment\n", source="cfg")
    with pytest.raises(UsageError, match="empty key"):
        parse_config_text("= 5")


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigNotFoundError):
        load_config(str(tmp_path / "absent.cfg"))


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("train.tf = 100\ntrain.method = umpo\n")
    assert load_config(str(path)) == {"train.tf": 100, "train.method": "umpo"}


def test_apply_overrides_win_and_validate():
    config = {"train.seed": 0}
    apply_overrides(config, ["train.seed=5", "env.toy2d.epsilon=0.2"])
    assert config == {"train.seed": 5, "env.toy2d.epsilon": 0.2}
    with pytest.raises(UsageError):
        apply_overrides(config, ["no-equals-sign"])
    with pytest.raises(UsageError):
        apply_overrides(config, ["=7"])
    assert apply_overrides(dict(config), None) == config


def test_get_and_section():
    config = {"train.seed": 1, "train.tf": 9, "env.name": "toy2d"}
    assert get(config, "train.seed") == 1
    assert get(config, "missing", 42) == 42
    assert section(config, "train") == {"seed": 1, "tf": 9}
    assert section(config, "nope") == {}
