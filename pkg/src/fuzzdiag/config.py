"""Run configuration, loaded from a TOML file.

Every key is optional::

    [detector]
    window_len = 60            # seconds per bucket
    slot_len = 1800            # seconds per baseline slot, must divide 86400
    weekly = false             # stratify slots by day of week as well
    utc_offset = 0.0           # hours added to UTC for time-of-day
    link_capacity_bps = 10e6
    cooldown = 300             # seconds between repeats of one (module, action)
    epsilon = 1.0              # floor for baseline means, feature units
    utilization_epsilon = 0.01 # same floor for the Utilization module, in percent
    profile = "profile.txt"

    [tuner]
    eta = 0.05
    max_total_disp = 0.25
    keep_order_margin = 0.1

    [sinks]
    log = "alerts.log"
    email = "cmd:/usr/local/bin/mail-alert"         # or "https://...", or a table
    sms = { url = "https://gw.example/sms", token_env = "SMS_TOKEN" }

    [rulebases]
    IpCount = "rules/ip.rules"                      # per module, default table otherwise
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .baseline import DAY
from .ingest import ConfigError
from .rulebook import ModuleKind
from .tuner import TunerConfig

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


@dataclass
class Config:
    window_len: float = 60.0
    slot_len: int = 1800
    weekly: bool = False
    utc_offset: float = 0.0
    link_capacity_bps: float = 10e6
    cooldown: float = 300.0
    epsilon: float = 1.0
    utilization_epsilon: float = 0.01
    profile: str = "profile.txt"
    tuner: TunerConfig = field(default_factory=TunerConfig)
    log: str = "alerts.log"
    email: object = None
    sms: object = None
    rulebases: dict[ModuleKind, str] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("window_len", "link_capacity_bps", "epsilon", "utilization_epsilon"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if not isinstance(self.slot_len, int) or self.slot_len <= 0 or DAY % self.slot_len:
            raise ConfigError(f"slot_len must be a positive divisor of {DAY}, got {self.slot_len!r}")
        if not (isinstance(self.cooldown, (int, float)) and self.cooldown >= 0):
            raise ConfigError(f"cooldown must be non-negative, got {self.cooldown!r}")
        if not (isinstance(self.utc_offset, (int, float)) and math.isfinite(self.utc_offset)):
            raise ConfigError(f"utc_offset must be a number, got {self.utc_offset!r}")


_DETECTOR_KEYS = {"window_len", "slot_len", "weekly", "utc_offset", "link_capacity_bps",
                  "cooldown", "epsilon", "utilization_epsilon", "profile"}


def load_config(path: Optional[Union[str, os.PathLike]]) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(data) - {"detector", "tuner", "sinks", "rulebases"}
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    base = path.parent
    kw = {}
    det = data.get("detector", {})
    bad = set(det) - _DETECTOR_KEYS
    if bad:
        raise ConfigError(f"unknown [detector] keys {sorted(bad)}")
    kw.update(det)
    if "profile" in kw:
        kw["profile"] = str(base / kw["profile"])
    try:
        kw["tuner"] = TunerConfig(**data.get("tuner", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[tuner]: {exc}") from None
    sinks = data.get("sinks", {})
    bad = set(sinks) - {"log", "email", "sms"}
    if bad:
        raise ConfigError(f"unknown [sinks] keys {sorted(bad)}")
    if "log" in sinks:
        kw["log"] = str(base / sinks["log"])
    kw["email"] = sinks.get("email")
    kw["sms"] = sinks.get("sms")
    rbs = {}
    for name, p in data.get("rulebases", {}).items():
        try:
            module = ModuleKind(name)
        except ValueError:
            raise ConfigError(f"unknown module {name!r} in [rulebases]; "
                              f"expected one of {[m.value for m in ModuleKind]}") from None
        rp = base / p
        if not rp.is_file():
            raise ConfigError(f"rule base file {rp} is not readable")
        rbs[module] = str(rp)
    kw["rulebases"] = rbs
    try:
        return Config(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
