"""JSON experiment configs with ``--set key=value`` overrides."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from ..exceptions import ConfigError, ConfigParseError
from ..experiments import EXPERIMENT_NAMES, ExperimentConfig

TOP_LEVEL_KEYS = ("experiment", "parameters", "seed", "sample_interval")


def _parse_value(text: str):
    """JSON literal when it parses (numbers, true, null, quoted strings),
    otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_override(item: str) -> tuple[str, object]:
    key, sep, value = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    return key, _parse_value(value)


def load_config_dict(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}", exc.lineno, exc.colno
        ) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def parse_config(path=None, overrides: Iterable[str] = ()) -> ExperimentConfig:
    """Resolve a config file plus ``key=value`` overrides.

    Overrides named like a top-level key (``seed``, ``sample_interval``,
    ``experiment``) replace it; any other key, optionally written as
    ``parameters.<name>``, sets an experiment parameter.
    """
    data = load_config_dict(path) if path is not None else {}
    unknown = sorted(set(data) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise ConfigError(
            f"unknown config key(s) {', '.join(unknown)}; expected {', '.join(TOP_LEVEL_KEYS)}"
        )
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("'parameters' must be a JSON object")
    data = {**data, "parameters": dict(params)}
    for item in overrides:
        key, value = parse_override(item)
        if key in TOP_LEVEL_KEYS and key != "parameters":
            data[key] = value
        else:
            data["parameters"][key.removeprefix("parameters.")] = value
    name = data.get("experiment")
    if name not in EXPERIMENT_NAMES:
        what = "missing 'experiment'" if name is None else f"unknown experiment {name!r}"
        raise ConfigError(f"{what}; valid names: {', '.join(EXPERIMENT_NAMES)}")
    return ExperimentConfig(
        name,
        data["parameters"],
        seed=data.get("seed", 0),
        sample_interval=data.get("sample_interval"),
    )
