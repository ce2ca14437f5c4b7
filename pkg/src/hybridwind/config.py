"""Run configuration: schema, defaults, INI files and command-line overrides.

Precedence is built-in defaults < config file < overrides. Keys are
addressed as ``section.key``; unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .errors import ConfigurationError


def _bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(text):
    if isinstance(text, (list, tuple)):
        return [str(x).strip() for x in text]
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


# section -> key -> (parser, default)
SCHEMA = {
    "run": {
        "seed": (int, 0),
        "threads": (int, 1),
        "format": (str, "csv"),
    },
    "halo": {
        "rho_dm": (float, 0.4),  # GeV/cm^3
        "v0": (float, 220.0),  # km/s
        "epsilon": (float, 0.05),
        "annual_phase": (float, 0.0),  # rad
    },
    "isotope": {
        "name": (str, "Bi209"),
        "t2_nuclear": (_opt_float, None),  # s; None -> table value
        "t2_electron": (_opt_float, None),
        "table": (str, ""),  # optional path to an isotope data file
    },
    "stack": {
        "g_drv": (float, 1.0),
        "kappa": (float, 1.0),
        "n_spins": (float, 1e6),
        "entanglement": (str, "ideal"),
        "q_factor": (float, 1e5),
        "q_ref": (float, 1.0),
        "res_exponent": (float, 0.5),
        "t_obs": (float, 365.25 * 86400.0),  # s
        "t1rho_e": (float, 10.0),  # s
        "rabi_khz": (float, 50.0),
        "electron_probe": (str, "none"),  # none | ramsey | hahn
        "electron_tau": (float, 1e-5),  # s
    },
    "noise": {
        "eta_e": (float, 1e-15),  # T/sqrt(Hz)
        "eta_n": (float, 1e-12),
        "corner_hz": (_opt_float, None),
        "exponent": (float, 1.0),
        "readout_variance": (float, 0.0),
        "stacking_exponent": (float, 0.25),
    },
    "limits": {
        "min_spacing": (float, 10e-6),  # s
        "max_pulses": (int, 4096),
    },
    "site": {
        "latitude_deg": (float, 51.5),
        "tilt_deg": (float, 0.0),
        "azimuth_deg": (float, 0.0),
    },
    "wind": {
        "declination_deg": (float, 48.0),
        "right_ascension_deg": (float, 315.0),
        "mass_ev": (float, 1e-12),
        "g_ann": (float, 1e-10),  # GeV^-1
        "days": (float, 4.0),
        "dt": (float, 600.0),  # s
        "baseband": (_bool, True),
        "window": (str, "hann"),
    },
    "filter": {
        "kind": (str, "cpmg"),
        "tau": (float, 1.0),
        "n_pi": (int, 8),
        "grid_max_xi": (float, 32.0),
        "points": (int, 2048),
        "electron_kind": (str, "hahn"),
        "electron_tau": (_opt_float, None),  # None -> same tau
    },
    "spinlock": {
        "rabi_khz": (float, 50.0),
        "axion_khz": (float, 5.0),
        "beta": (float, 0.05),
        "duration": (float, 0.01),  # s
        "dt": (float, 1e-6),  # s
    },
    "scan": {
        "mass_ev": (float, 1e-12),
        "mass_min_ev": (float, 1e-16),
        "mass_max_ev": (float, 1e-6),
        "points_per_decade": (float, 20.0),
        "protocols": (_list, ["ramsey", "hahn", "xy8", "spinlock"]),
    },
    "mc": {
        "trials": (int, 0),
        "bootstrap": (int, 400),
        "rel_tol": (float, 1e-3),
        "n_samples": (int, 256),
    },
}


def defaults():
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def _coerce(section, key, raw):
    if section not in SCHEMA:
        raise ConfigurationError(f"unknown config section {section!r} (in {section}.{key})")
    if key not in SCHEMA[section]:
        raise ConfigurationError(f"unknown config key {key!r} in section [{section}] ({section}.{key})")
    parse = SCHEMA[section][key][0]
    try:
        value = parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{section}.{key}: cannot parse {raw!r} ({exc})") from None
    if isinstance(value, float) and math.isnan(value):
        raise ConfigurationError(f"{section}.{key}: NaN is not allowed")
    return value


def parse_override(text):
    if "=" not in text:
        raise ConfigurationError(f"override {text!r} must look like section.key=value")
    path, value = text.split("=", 1)
    if "." not in path:
        raise ConfigurationError(f"override key {path!r} must be qualified as section.key")
    section, key = path.strip().split(".", 1)
    return section, key, value.strip()


@dataclass
class RunConfig:
    subcommand: str
    config_path: str | None
    out_dir: str
    values: dict
    overrides: list = field(default_factory=list)

    @property
    def seed(self):
        return self.values["run"]["seed"]

    @property
    def threads(self):
        return self.values["run"]["threads"]

    @property
    def format(self):
        return self.values["run"]["format"]

    def __getitem__(self, section):
        return self.values[section]


def resolve_config(path=None, overrides=(), subcommand="", out_dir=".") -> RunConfig:
    values = defaults()
    if path:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path!r}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigurationError(f"config file {path!r} does not parse: {exc}") from None
        for section in parser.sections():
            for key, raw in parser[section].items():
                values.setdefault(section, {})
                values[section][key] = _coerce(section, key, raw)
    applied = []
    for item in overrides:
        section, key, raw = parse_override(item) if isinstance(item, str) else item
        values[section][key] = _coerce(section, key, raw)
        applied.append(f"{section}.{key}={raw}")
    if values["run"]["format"] not in ("csv", "json"):
        raise ConfigurationError("run.format must be csv or json")
    if values["run"]["threads"] < 1:
        raise ConfigurationError("run.threads must be >= 1")
    return RunConfig(subcommand, path, out_dir, values, applied)
