"""Scenario configuration: a TOML file with flat dotted keys.

Example::

    network.alpha = 4.0
    network.c_mode = "lower"
    targets.r1 = 1e-5
    targets.theta = 1e-2
    mc.samples = 200000
    mc.seed = 7

Every key has a default matching the numerical study (alpha = 4,
c = alpha/(alpha-2), eta2_floor = 0.9).  Unknown keys are rejected.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .analytic import COVERAGE_MODELS, LINK1_FORMS, NetworkParams
from .errors import ConfigError, SlicingError
from .montecarlo import McConfig
from .perception import JndTargets

# key -> (type, default).  float keys also accept integers.
SCHEMA: dict[str, tuple[type, object]] = {
    "network.alpha": (float, 4.0),
    "network.c_mode": (str, "lower"),
    "network.c_value": (float, None),
    "network.link1_form": (str, "derived"),
    "targets.r1": (float, 1e-5),
    "targets.theta": (float, 1e-2),
    "targets.eta2_floor": (float, 0.9),
    "solver.coverage_model": (str, "bound"),
    "mc.samples": (int, 200_000),
    "mc.seed": (int, 1),
    "mc.bs_density": (float, 1.0),
    "mc.truncation_radius_factor": (float, 10.0),
    "mc.confidence_level": (float, 0.95),
    "mc.chunk_size": (int, 16384),
    "mc.workers": (int, 1),
    "coverage.t_min": (float, 1e-3),
    "coverage.t_max": (float, 1e3),
    "coverage.points": (int, 13),
    "sweep.points": (int, 50),
    "sweep.eta2_min": (float, 0.01),
    "sweep.eta2_max": (float, None),
    "sweep.r1_min": (float, 1e-6),
    "sweep.r1_max": (float, 1e-2),
    "sweep.theta_min": (float, 1e-6),
    "sweep.theta_max": (float, 5e-2),
    "sweep.thetas": (list, [1e-4, 1e-2]),
    "sweep.r1_values": (list, [1e-6, 1e-5, 1e-4, 1e-3]),
    "validate.max_half_width": (float, 0.01),
    "output.path": (str, "-"),
    "output.format": (str, "csv"),
}


def _flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _line_of(text: str, key: str) -> int | None:
    leaf = key.rsplit(".", 1)[-1]
    pattern = re.compile(rf"^\s*({re.escape(key)}|{re.escape(leaf)})\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return None


def _where(text: str, key: str) -> str:
    line = _line_of(text, key)
    return f"line {line}, key '{key}'" if line else f"key '{key}'"


@dataclass(frozen=True)
class ScenarioConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (_, d) in SCHEMA.items()})
    source: str = "<defaults>"

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def network(self) -> NetworkParams:
        return NetworkParams(self["network.alpha"], self["network.c_mode"], self["network.c_value"],
                             self["network.link1_form"])

    @property
    def jnd(self) -> JndTargets:
        return JndTargets(self["targets.theta"], self["targets.eta2_floor"])

    @property
    def mc(self) -> McConfig:
        return McConfig(
            n_samples=self["mc.samples"],
            seed=self["mc.seed"],
            bs_density=self["mc.bs_density"],
            truncation_radius_factor=self["mc.truncation_radius_factor"],
            confidence_level=self["mc.confidence_level"],
            chunk_size=self["mc.chunk_size"],
            workers=self["mc.workers"],
        )

    @property
    def coverage_model(self) -> str:
        return self["solver.coverage_model"]

    def override(self, **dotted) -> "ScenarioConfig":
        """Copy with selected keys replaced; keys use '__' for '.'."""
        values = dict(self.values)
        for k, v in dotted.items():
            key = k.replace("__", ".")
            if key not in SCHEMA:
                raise ConfigError(f"unknown key '{key}'")
            values[key] = v
        cfg = replace(self, values=values)
        cfg.validate()
        return cfg

    def items(self):
        return sorted(self.values.items())

    def validate(self, text: str = ""):
        """Build every derived object once so bad values fail here, with context."""
        v = self.values
        checks = [
            ("network.alpha", lambda: self.network),
            ("targets.theta", lambda: self.jnd),
            ("mc.samples", lambda: self.mc),
        ]
        for key, build in checks:
            try:
                build()
            except SlicingError as exc:
                raise ConfigError(f"{self.source}: {_where(text, key)}: {exc}") from None
        if v["targets.r1"] <= 0:
            raise ConfigError(f"{self.source}: {_where(text, 'targets.r1')}: URLLC rate target must be positive")
        for key, allowed in (("solver.coverage_model", COVERAGE_MODELS), ("network.link1_form", LINK1_FORMS),
                             ("output.format", ("csv",))):
            if v[key] not in allowed:
                raise ConfigError(f"{self.source}: {_where(text, key)}: expected one of {allowed}, got {v[key]!r}")
        positive = ("coverage.t_min", "coverage.t_max", "sweep.r1_min", "sweep.r1_max", "sweep.theta_min",
                    "sweep.theta_max", "validate.max_half_width")
        for key in positive:
            if not v[key] > 0:
                raise ConfigError(f"{self.source}: {_where(text, key)}: must be positive, got {v[key]}")
        for lo, hi in (("coverage.t_min", "coverage.t_max"), ("sweep.r1_min", "sweep.r1_max"),
                       ("sweep.theta_min", "sweep.theta_max")):
            if v[lo] > v[hi]:
                raise ConfigError(f"{self.source}: {_where(text, lo)}: {lo}={v[lo]} exceeds {hi}={v[hi]}")
        for key in ("coverage.points", "sweep.points"):
            if v[key] < 0:
                raise ConfigError(f"{self.source}: {_where(text, key)}: must be non-negative")
        if not 0 < v["sweep.eta2_min"] < 1:
            raise ConfigError(f"{self.source}: {_where(text, 'sweep.eta2_min')}: must lie in (0, 1)")
        for key in ("sweep.thetas", "sweep.r1_values"):
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in v[key]):
                raise ConfigError(f"{self.source}: {_where(text, key)}: expected a list of positive numbers")


def _coerce(key: str, value, text: str, source: str):
    kind, _ = SCHEMA[key]
    bad = ConfigError(f"{source}: {_where(text, key)}: expected {kind.__name__}, got {type(value).__name__} {value!r}")
    if isinstance(value, bool):
        raise bad
    if kind is float:
        if not isinstance(value, (int, float)):
            raise bad
        value = float(value)
        if math.isnan(value):
            raise bad
        return value
    if kind is int:
        if not isinstance(value, int):
            raise bad
        return value
    if kind is list:
        if not isinstance(value, list):
            raise bad
        return [float(x) if isinstance(x, (int, float)) and not isinstance(x, bool) else x for x in value]
    if key == "network.c_mode" and isinstance(value, (int, float)):
        return value
    if not isinstance(value, kind):
        raise bad
    return value


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values = {k: d for k, (_, d) in SCHEMA.items()}
    for key, value in _flatten(tree).items():
        if key not in SCHEMA:
            raise ConfigError(f"{source}: {_where(text, key)}: unknown key")
        values[key] = _coerce(key, value, text, source)
    # allow network.c_mode = 2.2 as shorthand for an explicit constant
    if isinstance(values["network.c_mode"], (int, float)):
        values["network.c_value"] = float(values["network.c_mode"])
        values["network.c_mode"] = "explicit"
    cfg = ScenarioConfig(values, source)
    cfg.validate(text)
    return cfg


def load_config(path: str | Path | None) -> ScenarioConfig:
    if path is None:
        return ScenarioConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, str(path))
