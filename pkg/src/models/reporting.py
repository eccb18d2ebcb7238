"""
JSON helpers shared by every artifact writer.

Non-finite floats are written as the strings "inf", "-inf" and "nan" so the
documents stay strict JSON.
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, Union


def json_float(value: float) -> Union[float, str]:
    """Finite floats pass through; inf, -inf and nan become strings."""
    value = float(value)
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def write_json(path: Union[str, Path], document: Dict[str, Any]) -> Path:
    """Write an indented UTF-8 JSON document and return its path."""
    path = Path(path)
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False),
                    encoding="utf-8")
    return path
