"""
Flat configuration files.

One assignment per line, "section.key = value"; "#" starts a comment line.
Values are read as YAML scalars or flow collections, so numbers, booleans,
null and lists such as [0.6, 0.2, 0.2] keep their types:

    data.path = ratings.dat
    data.ratios = [0.6, 0.2, 0.2]
    swarm.num_particles = 8
    swarm.bounds = [[0, 0.1], [0, 300]]
"""

from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import yaml

from src.config.experiment_config import ExperimentConfig
from src.errors import ConfigError

# Keys whose values are taken verbatim; "::" or "~/ratings.dat" are not YAML
RAW_STRING_KEYS = frozenset({"data.delimiter", "data.path"})


def parse_value(text: str) -> Any:
    """
    Type a raw value string with the YAML scalar rules.

    Text YAML refuses as a plain scalar (e.g. a bare ",") or reads as a
    mapping (e.g. "::") is kept verbatim.
    """
    text = text.strip()
    if not text:
        return None
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError:
        return text
    return text if isinstance(value, dict) else value


def parse_assignment(text: str, where: str = "override") -> Tuple[str, Any]:
    """Split "section.key=value" into its key and typed value."""
    if "=" not in text:
        raise ConfigError(f"{where}: expected section.key=value, got {text!r}")
    key, value = text.split("=", 1)
    key = key.strip()
    if "." not in key or key.startswith(".") or key.endswith("."):
        raise ConfigError(f"{where}: key {key!r} must have the form section.key")
    if key in RAW_STRING_KEYS:
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            return key, value[1:-1]
        return key, (None if value in ("", "null", "~") else value)
    return key, parse_value(value)


def parse_config_lines(lines: Iterable[str], source: str = "<config>") -> Dict[str, Any]:
    """Parse flat config text into a key -> value mapping; later lines win."""
    values: Dict[str, Any] = {}
    for line_number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, value = parse_assignment(line, where=f"{source}:{line_number}")
        values[key] = value
    return values


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file {path} does not exist")
    with open(path, encoding="utf-8") as handle:
        return parse_config_lines(handle, source=str(path))


def resolve_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    base: Optional[ExperimentConfig] = None,
) -> ExperimentConfig:
    """
    Layer defaults, an optional config file and "key=value" overrides.

    Raises:
        ConfigError: Unreadable file, malformed line, unknown key or invalid value
    """
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(load_config_file(path))
    for text in overrides:
        key, value = parse_assignment(text)
        values[key] = value
    return ExperimentConfig.from_flat(values, base=base)
