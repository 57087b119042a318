"""Tests for JSON serialization and parameter hashing."""

import numpy as np
from nhosc.core.serialization import (
    canonical_json,
    dumps,
    format_float,
    get_json_backend,
    loads,
    parameter_hash,
)
from tests.fixtures.params import make_params


def test_dumps_loads_sorted_keys():
    text = dumps({"b": 1, "a": [1.5, None]})
    assert text.index('"a"') < text.index('"b"')
    assert loads(text) == {"a": [1.5, None], "b": 1}


def test_dumps_indent():
    assert "\n" in dumps({"a": 1, "b": 2}, indent=True)


def test_backend_name():
    assert get_json_backend() in ("orjson", "json")


def test_canonical_json_is_compact():
    assert canonical_json({"z": 1, "a": {"y": 2.5}}) == '{"a":{"y":2.5},"z":1}'


def test_parameter_hash_is_stable():
    first = parameter_hash(make_params(0.1))
    assert first == parameter_hash(make_params(0.1))
    assert len(first) == 32
    int(first, 16)


def test_parameter_hash_distinguishes_drives():
    assert parameter_hash(make_params(0.1)) != parameter_hash(make_params(-0.1))
    assert parameter_hash(make_params(0.1)) != parameter_hash(make_params(0.1, drive="mixed"))


def test_format_float_round_trips():
    for value in (0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567):
        assert float(format_float(value)) == value
    assert format_float(np.float64(0.5)) == "0.5"
