"""JSON serialization using orjson when available, plus parameter hashing."""

from typing import Any
import json

import mmh3

from nhosc.core.parameters import ParameterSet

# Try to import orjson for faster serialization
try:
    import orjson

    HAS_ORJSON = True

    def dumps(obj: Any, indent: bool = False) -> str:
        """
        Serialize object to JSON string using orjson, keys sorted.

        Args:
            obj: Object to serialize
            indent: Whether to format with indentation

        Returns:
            JSON string
        """
        option = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
        if indent:
            option |= orjson.OPT_INDENT_2
        return orjson.dumps(obj, option=option).decode("utf-8")

    def loads(s: str) -> Any:
        """Deserialize JSON string to object using orjson."""
        return orjson.loads(s)

except ImportError:
    # Fallback to standard json
    HAS_ORJSON = False

    def dumps(obj: Any, indent: bool = False) -> str:
        """
        Serialize object to JSON string using standard json, keys sorted.

        Args:
            obj: Object to serialize
            indent: Whether to format with indentation

        Returns:
            JSON string
        """
        if indent:
            return json.dumps(obj, indent=2, sort_keys=True)
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))

    def loads(s: str) -> Any:
        """Deserialize JSON string to object using standard json."""
        return json.loads(s)


def get_json_backend() -> str:
    """Get the name of the JSON backend being used."""
    return "orjson" if HAS_ORJSON else "json"


def canonical_json(obj: Any) -> str:
    """Compact, key-sorted JSON independent of the backend."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def parameter_hash(params: ParameterSet) -> str:
    """
    MurmurHash3 128-bit digest of a parameter set.

    Args:
        params: Parameter set to fingerprint

    Returns:
        32-character hex string, stable across runs and JSON backends
    """
    digest = mmh3.hash128(canonical_json(params.to_json_dict()), signed=False)
    return f"{digest:032x}"


def format_float(value: float) -> str:
    """repr-exact decimal form used for every CSV number."""
    return "%.17g" % value
