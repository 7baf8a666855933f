"""Sectioned key-value run configuration.

The file format is INI-like with ``#`` comments::

    [system]
    chi2 = 0.5

    [pulse]
    fwhm = 0.25

    [g2]
    areas = 0.25pi:4pi:0.125pi

Numbers accept a ``pi`` suffix (``pi``, ``2pi``, ``0.5pi``); lists are comma
separated and may contain inclusive ranges ``start:stop:step``. Unknown
sections and keys are rejected.
"""
import configparser
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .liouvillian import EMITTERS, SystemParams
from .propagator import DEFAULT_TOL
from .pulse import PulseParams

COMMANDS = ("rabi", "spectrum", "occupation", "g2", "hom", "g2map", "sweep")

GRID_DEFAULTS = {
    "tol": DEFAULT_TOL,
    "dt": 0.02,
    "map_points": 401,
    "map_t_after": 12.0,
    "spectrum_points": 1201,
    "spectrum_t_after": 36.0,
    "spectrum_window": 10.0,
}

# per-command defaults
COMMAND_DEFAULTS = {
    "rabi": {
        "lengths": "0.1:1.5:0.1, 2",
        "areas": "0:3pi:0.05pi",
        "emitters": "source, target, flux",
        "fit_range": "0.1, 1.5",
    },
    "spectrum": {"fwhm": "1", "areas": "pi, 2pi, 3pi, 4pi", "emitters": "source, target, flux"},
    "occupation": {"fwhm": "0.5", "areas": "pi, 2pi, 3pi, 4pi"},
    "g2": {"fwhm": "0.25", "areas": "0.25pi:4pi:0.125pi", "emitters": "source, target, flux"},
    "hom": {"fwhm": "0.25", "areas": "0.25pi:4pi:0.125pi", "emitters": "source, target, flux"},
    "g2map": {"fwhm": "1", "area": "pi", "emitters": "source, target, flux"},
    "sweep": {
        "areas": "pi",
        "lengths": "1",
        "chi2_values": "0.5",
        "outputs": "intensity",
        "emitters": "source, target, flux",
    },
}

_OPTION_KEYS = {
    "rabi": {"lengths", "areas", "emitters", "fit_range"},
    "spectrum": {"areas", "emitters"},
    "occupation": {"areas"},
    "g2": {"areas", "emitters"},
    "hom": {"areas", "emitters"},
    "g2map": {"area", "emitters"},
    "sweep": {"areas", "lengths", "chi2_values", "outputs", "emitters"},
}

_NUM = re.compile(r"^\s*([-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?)?\s*(\*?\s*pi)?\s*$")


def parse_number(text):
    m = _NUM.match(str(text))
    if not m or (m.group(1) is None and m.group(5) is None):
        raise ValueError(f"cannot parse number {text!r}")
    value = float(m.group(1)) if m.group(1) is not None else 1.0
    return value * math.pi if m.group(5) else value


def parse_list(text):
    """Comma list of numbers and inclusive ``start:stop:step`` ranges."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            parts = [parse_number(p) for p in item.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError(f"range {item!r} must be start:stop:step with step > 0")
            start, stop, step = parts
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend((start + step * np.arange(n)).tolist())
        else:
            out.append(parse_number(item))
    if not out:
        raise ValueError(f"empty list {text!r}")
    return out


def parse_names(text, allowed):
    names = [n.strip() for n in str(text).split(",") if n.strip()]
    bad = [n for n in names if n not in allowed]
    if bad or not names:
        raise ValueError(f"invalid names {bad or text!r}; allowed: {', '.join(allowed)}")
    return names


@dataclass
class RunConfig:
    command: str
    system: SystemParams
    pulse: PulseParams
    grid: dict
    options: dict
    out: Path
    jobs: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    def echo(self):
        """Resolved configuration as ``(key, value)`` pairs for file headers."""
        items = [("command", self.command)]
        items += [(f"system.{f.name}", repr(getattr(self.system, f.name))) for f in fields(self.system)]
        items += [(f"pulse.{f.name}", repr(getattr(self.pulse, f.name))) for f in fields(self.pulse)]
        items += [(f"grid.{k}", repr(v)) for k, v in sorted(self.grid.items())]
        items += [(f"{self.command}.{k}", _show(v)) for k, v in sorted(self.options.items())]
        items += [("jobs", self.jobs)]
        return items


def _show(v):
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(repr(x) for x in v) + "]"
    return repr(v)


def read_config_file(path):
    """Parse a config file into ``{section: {key: text}}``."""
    cp = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",))
    cp.optionxform = str
    with open(path) as fh:
        cp.read_file(fh)
    return {s: dict(cp.items(s)) for s in cp.sections()}


def _system_keys():
    return {f.name for f in fields(SystemParams)}


def _pulse_keys():
    return {f.name for f in fields(PulseParams)}


def validate_sections(sections):
    allowed = {"system": _system_keys(), "pulse": _pulse_keys(), "grid": set(GRID_DEFAULTS)}
    allowed.update(_OPTION_KEYS)
    for sec, keys in sections.items():
        if sec not in allowed:
            raise ValueError(f"unknown config section [{sec}]")
        unknown = set(keys) - allowed[sec]
        if unknown:
            raise ValueError(f"unknown key(s) in [{sec}]: {', '.join(sorted(unknown))}")


def resolve(command, sections=None, overrides=None, out=".", jobs=1):
    """Merge command defaults, file sections and flag overrides into a RunConfig.

    ``overrides`` uses the same ``{section: {key: text}}`` shape as the file.
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}")
    sections = sections or {}
    overrides = overrides or {}
    validate_sections(sections)
    validate_sections(overrides)
    merged = {}
    for src in (sections, overrides):
        for sec, keys in src.items():
            merged.setdefault(sec, {}).update(keys)
    defaults = dict(COMMAND_DEFAULTS[command])

    system = SystemParams(**{k: parse_number(v) for k, v in merged.get("system", {}).items()})

    pulse_text = {}
    if "fwhm" in defaults:
        pulse_text["fwhm"] = defaults.pop("fwhm")
    pulse_text.update(merged.get("pulse", {}))
    pulse = PulseParams(**{k: parse_number(v) for k, v in pulse_text.items()})

    grid = dict(GRID_DEFAULTS)
    for k, v in merged.get("grid", {}).items():
        grid[k] = int(parse_number(v)) if k.endswith("_points") else parse_number(v)
    if not 1e-12 <= grid["tol"] <= 1e-4:
        raise ValueError("grid.tol must lie in [1e-12, 1e-4]")
    if grid["map_points"] < 3 or grid["spectrum_points"] < 3:
        raise ValueError("map and spectrum grids need at least 3 points")
    if grid["dt"] <= 0 or grid["map_t_after"] <= 0 or grid["spectrum_t_after"] <= 0:
        raise ValueError("grid spacings and windows must be positive")

    opt_text = dict(defaults)
    opt_text.update(merged.get(command, {}))
    options = {}
    for k, v in opt_text.items():
        if k == "emitters":
            options[k] = parse_names(v, EMITTERS)
        elif k == "outputs":
            from .sweeps import OUTPUTS

            options[k] = parse_names(v, sorted(OUTPUTS))
        elif k == "area":
            options[k] = parse_number(v)
        else:
            options[k] = parse_list(v)
    for k in ("areas", "area"):
        vals = np.atleast_1d(options.get(k, []))
        if np.any(vals < 0):
            raise ValueError("pulse areas must be >= 0")
    if np.any(np.asarray(options.get("lengths", [1.0])) <= 0):
        raise ValueError("pulse lengths must be > 0")
    if "fit_range" in options and (len(options["fit_range"]) != 2 or options["fit_range"][0] > options["fit_range"][1]):
        raise ValueError("rabi.fit_range must be 'low, high' with low <= high")
    if jobs < 1:
        raise ValueError("--jobs must be >= 1")
    return RunConfig(command, system, pulse, grid, options, Path(out), int(jobs), raw=merged)


def load(command, path=None, overrides=None, out=".", jobs=1):
    sections = read_config_file(path) if path else {}
    return resolve(command, sections, overrides, out, jobs)
