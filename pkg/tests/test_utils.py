"""
Tests for the shared parsing and output helpers.
"""
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from common.exceptions import ConfigError
from common.models import PotentialParams, RunConfig
from common.utils import parse_rational, render_csv, serialize_to_json, write_json


@pytest.mark.parametrize(
    "value, expected",
    [
        ("3/2", Fraction(3, 2)),
        ("6/4", Fraction(3, 2)),
        (2, Fraction(2)),
        ("7", Fraction(7)),
        (1.4142135, Fraction(14142135, 10000000)),
        (Fraction(5, 2), Fraction(5, 2)),
    ],
)
def test_parse_rational(value, expected):
    assert parse_rational(value) == expected


@pytest.mark.parametrize("value", ["x/2", "1/0", True, float("nan"), None])
def test_parse_rational_rejects(value):
    with pytest.raises(ConfigError):
        parse_rational(value)


def test_params_reject_non_positive_k():
    with pytest.raises(ValidationError):
        PotentialParams(k="0")
    with pytest.raises(ValidationError):
        PotentialParams(omega=0.0)


def test_render_csv_uses_round_trip_floats():
    text = render_csv(("a", "b", "c"), [(1, 0.1, np.float64(2.5)), (Fraction(3, 2), 1e-20, True)])
    assert text == "a,b,c\n1,0.1,2.5\n3/2,1e-20,true\n"


def test_json_is_deterministic(tmp_path):
    run = RunConfig.model_validate({"params": {"k": "3/2", "alpha": 2.0}, "out": str(tmp_path)})
    first = serialize_to_json(run.model_dump(mode="json"))
    again = RunConfig.model_validate_json(first)
    assert serialize_to_json(again.model_dump(mode="json")) == first
    path = write_json(tmp_path / "nested" / "config.json", run.model_dump(mode="json"))
    assert path.read_text(encoding="utf-8") == first
