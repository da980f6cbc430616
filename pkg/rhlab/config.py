from __future__ import annotations

import configparser
import dataclasses
import json
import logging
import os
import re
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

from rhlab.errors import ConfigError
from rhlab.params import Params, validate

logger = logging.getLogger(__name__)

CACHE_ENV = "RHLAB_CACHE"
ROOT_SECTION = "rhlab"
SECTIONS = {ROOT_SECTION, "params", "run", "resolvent", "sweep", "cz", "weak", "report"}

COMMANDS = (
    "build-kernel",
    "check-cz",
    "resolvent",
    "algebra",
    "sweep-weak",
    "cz-decompose",
    "rho-k",
    "asymptotics",
    "commutator",
)


def parse_int(text: str) -> int:
    text = str(text).strip()
    if "^" in text:
        base, exponent = text.split("^")
        return int(base) ** int(exponent)
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def parse_complex(text: str) -> complex | float:
    if isinstance(text, (int, float, complex)):
        return text
    text = str(text).strip()
    if "," in text:
        re_part, im_part = (float(p) for p in text.split(","))
        return complex(re_part, im_part) if im_part else re_part
    if "j" in text:
        value = complex(text.replace(" ", ""))
        return value if value.imag else value.real
    return float(text)


def parse_list(convert: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(text):
        if isinstance(text, (list, tuple)):
            return tuple(convert(t) for t in text)
        return tuple(convert(t) for t in re.split(r"[,\s]+", str(text).strip()) if t)

    return parse


def parse_str(text: str) -> str:
    return str(text).strip()


def parse_path(text: str) -> Path:
    return Path(str(text).strip())


KEYS: dict[str, Callable[[str], Any]] = {
    "command": parse_str,
    "alpha": float,
    "delta": float,
    "M": parse_int,
    "mode": parse_str,
    "omega": float,
    "gamma_resc": float,
    "lambda": parse_complex,
    "beta": parse_complex,
    "family": parse_str,
    "M_list": parse_list(parse_int),
    "s": parse_int,
    "s1": parse_int,
    "s2": parse_int,
    "pairs": parse_list(parse_int),
    "J": parse_int,
    "c_split": float,
    "order": parse_int,
    "tol": float,
    "level": float,
    "length": parse_int,
    "seed": parse_int,
    "cases": parse_int,
    "jobs": parse_int,
    "out": parse_path,
    "cache": parse_path,
    "kernel": parse_path,
}

DEFAULTS: dict[str, Any] = {
    "command": None,
    "alpha": 1.5,
    "delta": 0.05,
    "M": 2**12,
    "mode": "gap",
    "omega": 0.5,
    "gamma_resc": None,
    "lambda": 1.0,
    "beta": 1.0,
    "family": "h",
    "M_list": tuple(2**k for k in range(10, 15)),
    "s": None,
    "s1": None,
    "s2": None,
    "pairs": (),
    "J": None,
    "c_split": 8.0,
    "order": 8,
    "tol": 1e-3,
    "level": 1.0,
    "length": 256,
    "seed": 20240601,
    "cases": 100,
    "jobs": 1,
    "out": Path("rhlab-out"),
    "cache": None,
    "kernel": None,
}

PARAM_KEYS = ("alpha", "delta", "M", "mode", "omega", "gamma_resc")


@dataclasses.dataclass(frozen=True)
class ExperimentPlan:
    command: str | None
    params: Params
    settings: Mapping[str, Any]

    def __getattr__(self, item):
        settings = self.__dict__.get("settings", {})
        if item in settings:
            return settings[item]
        raise AttributeError(item)

    @property
    def lam(self):
        return self.settings["lambda"]

    @property
    def pair_list(self) -> list[tuple[int, int]]:
        flat = list(self.settings["pairs"])
        if self.settings["s1"] and self.settings["s2"]:
            flat = [self.settings["s1"], self.settings["s2"]] + flat
        return list(zip(flat[::2], flat[1::2]))

    def record(self) -> dict:
        """The effective configuration as plain JSON-ready values."""
        record = {"command": self.command} | self.params.to_dict()
        for key, value in self.settings.items():
            if key in PARAM_KEYS or key == "command":
                continue
            if isinstance(value, complex):
                value = [value.real, value.imag]
            elif isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            record[key] = value
        return record

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.record(), sort_keys=True, separators=(",", ":")).encode()

    def with_overrides(self, **overrides) -> ExperimentPlan:
        return build_plan(dict(self.settings) | {"command": self.command}, overrides)


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = ROOT_SECTION
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        header = re.match(r"^\[([^\]]+)\]$", stripped)
        if header:
            section = header.group(1).strip()
            lines[(section, "")] = number
            continue
        entry = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", stripped)
        if entry:
            lines.setdefault((section, entry.group(1).strip()), number)
    return lines


def read_config(path: str | Path) -> dict[str, tuple[str, int]]:
    """Raw key -> (text value, line number) from a key = value file with optional sections."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(f"[{ROOT_SECTION}]\n{text}", source=str(path))
    except configparser.Error as error:
        line = getattr(error, "lineno", None)
        raise ConfigError(f"{path}: {error.message.splitlines()[0]}", line - 1 if line else None)

    numbers = _line_numbers(text)
    raw: dict[str, tuple[str, int]] = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]", numbers.get((section, "")))
        for key, value in parser.items(section):
            line = numbers.get((section, key))
            if key not in KEYS:
                raise ConfigError(f"{path}: unknown key {key!r}", line)
            if key in raw:
                raise ConfigError(f"{path}: key {key!r} given twice (first on line {raw[key][1]})", line)
            raw[key] = (value, line)
    return raw


def build_plan(
    values: Mapping[str, Any],
    overrides: Mapping[str, Any] | None = None,
    lines: Mapping[str, int] | None = None,
) -> ExperimentPlan:
    lines = lines or {}
    settings = dict(DEFAULTS)
    for key, value in values.items():
        settings[key] = _convert(key, value, lines.get(key))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown override {key!r}")
        settings[key] = _convert(key, value, None)

    if settings["cache"] is None and os.environ.get(CACHE_ENV):
        settings["cache"] = Path(os.environ[CACHE_ENV])
    command = settings["command"]
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}, expected one of {COMMANDS}", lines.get("command"))

    params = validate({k: settings[k] for k in PARAM_KEYS})
    logger.debug("plan %s with %s", command, params)
    return ExperimentPlan(command, params, settings)


def _convert(key: str, value: Any, line: int | None) -> Any:
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line)
    if value is None:
        return None
    if not isinstance(value, (str, list, tuple)):
        return Path(value) if key in ("out", "cache", "kernel") else value
    try:
        return KEYS[key](value)
    except ValueError as error:
        raise ConfigError(f"cannot read {key} = {value!r}: {error}", line) from error


def parse_config(path: str | Path | None, overrides: Mapping[str, Any] | None = None) -> ExperimentPlan:
    """Read, override and validate an experiment configuration."""
    if path is None:
        return build_plan({}, overrides)
    raw = read_config(path)
    values = {key: text for key, (text, _) in raw.items()}
    lines = {key: line for key, (_, line) in raw.items()}
    return build_plan(values, overrides, lines)
