"""Key=value run configuration with a strict schema.

Plain INI-style text with [simulate], [mask], [model], [train] and [eval]
sections.  Unknown sections or keys are rejected; missing entries take
the defaults below, which follow the published operating points where
one exists and desk-scale values elsewhere.
"""

import configparser

from .errors import ConfigError

__all__ = ["RunConfig", "load_config"]


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options):
    def parse(text: str) -> str:
        v = text.strip()
        if v not in options:
            raise ValueError(f"must be one of {options}, got {v!r}")
        return v

    return parse


SCHEMA = {
    "simulate": {
        "h": (int, 64),
        "w": (int, 64),
        "coils": (int, 4),
        "n_scans": (int, 8),
        "noise_sigma": (float, 0.0),
        "seed": (int, 0),
    },
    "mask": {
        "accel": (float, 4.0),
        "pattern": (_choice("variable", "uniform"), "variable"),
        "calib": (int, 16),
        "seed": (int, 0),
        "selfsup_split": (_bool, False),
        "loss_frac": (float, 0.4),
    },
    "model": {
        "kind": (_choice("zf", "spirit", "modl", "psfnet", "psfnet_serial"), "psfnet"),
        "cascades": (int, 5),
        "channels": (int, 16),
        "kernel_size": (int, 5),
        "kappa": (float, 1e-2),
        "n_iter": (int, 13),
        "final_dc": (_bool, False),
    },
    "train": {
        "mode": (_choice("supervised", "selfsup"), "supervised"),
        "epochs": (int, 200),
        "batch_size": (int, 2),
        "lr": (float, 1e-4),
        "beta1": (float, 0.90),
        "beta2": (float, 0.99),
        "adam_eps": (float, 1e-8),
        "seed": (int, 0),
        "normalize": (_bool, True),
    },
    "eval": {
        "wilcoxon": (_bool, True),
        "pgm": (_bool, False),
    },
}


class RunConfig:
    """Validated view over the schema'd sections."""

    def __init__(self, values: dict):
        self._values = values

    def __getitem__(self, section: str) -> dict:
        return self._values[section]

    def get(self, section: str, key: str):
        return self._values[section][key]

    def override(self, section: str, key: str, value) -> None:
        self._values[section][key] = value


def _defaults() -> dict:
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def load_config(path=None) -> RunConfig:
    """Parse and validate a config file; path=None gives pure defaults."""
    values = _defaults()
    if path is None:
        return RunConfig(values)

    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            parse, _ = SCHEMA[section][key]
            try:
                values[section][key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: [{section}] {key}: {exc}") from exc
    return RunConfig(values)
