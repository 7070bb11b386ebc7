"""CLI subcommands. Each module exposes register(subparsers)."""

import argparse
from typing import List, Tuple

from tacts.errors import ConfigError


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def parse_floats(text: str, sep: str, count: int = None) -> Tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(sep) if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as numbers separated by {sep!r}")
    if count is not None and len(values) != count:
        raise argparse.ArgumentTypeError(f"expected {count} values separated by {sep!r}, got {text!r}")
    return values


def parse_units(text: str) -> Tuple[float, float, float]:
    """MIN:MAX:STEP"""
    return parse_floats(text, ":", 3)


def parse_quantiles(text: str) -> Tuple[float, float]:
    """LO:HI"""
    return parse_floats(text, ":", 2)


def parse_list(text: str) -> Tuple[float, ...]:
    return parse_floats(text, ",")


def parse_cells(specs: List[str]) -> List[Tuple[float, float]]:
    """'removal=0.1,K=0.3' entries to (removal, K) pairs"""
    cells = []
    for spec in specs:
        fields = {}
        for part in spec.split(","):
            key, sep, value = part.partition("=")
            if not sep:
                raise ConfigError(f"cell {spec!r}: expected key=value pairs")
            try:
                fields[key.strip().lower()] = float(value)
            except ValueError:
                raise ConfigError(f"cell {spec!r}: {value!r} is not a number")
        if set(fields) != {"removal", "k"}:
            raise ConfigError(f"cell {spec!r}: expected removal=<fraction>,K=<noise bound>")
        cells.append((fields["removal"], fields["k"]))
    return cells


def drop_unset(values: dict) -> dict:
    """Leave unset CLI options to the config model defaults"""
    return {key: value for key, value in values.items() if value is not None}
