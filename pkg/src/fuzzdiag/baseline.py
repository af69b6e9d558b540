"""Survey-mode traffic profiles and ratio normalization.

A profile keeps Welford running statistics per time-of-day slot (optionally
per day-of-week as well).  Live samples are normalized against the slot mean
into the ratio axis the intensity variable is defined on.

Profile file (version 1)::

    fuzzdiag-profile 1
    profile <module> slot_len=<s> weekly=<0|1> utc_offset=<h> epsilon=<e> slots=<k>
    slot <module> <index> <n> <mean> <m2>      (k lines, indices 0..k-1 in order)
    ...
    end <number of profile blocks>
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Union

from .ingest import FeatureSample, time_of_day
from .rulebook import ModuleKind

FORMAT_TAG = "fuzzdiag-profile"
FORMAT_VERSION = 1
DAY = 86400
DEFAULT_SLOT = 1800
DEFAULT_EPSILON = 1.0
# Utilization is a percentage of link capacity and typically far below 1.0.
DEFAULT_UTILIZATION_EPSILON = 0.01


class ColdStart(LookupError):
    """The sample's slot has no survey data yet."""


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class NormalizedInput:
    ratio: float
    zscore: float
    low_confidence: bool = False


@dataclass(eq=True)
class BaselineProfile:
    module: ModuleKind
    slot_len: int = DEFAULT_SLOT
    weekly: bool = False
    utc_offset: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    n: list[int] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)
    m2: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.module = ModuleKind(self.module)
        if self.slot_len <= 0 or DAY % self.slot_len:
            raise ProfileError(f"slot_len must divide {DAY}, got {self.slot_len}")
        if not self.epsilon > 0:
            raise ProfileError(f"epsilon must be positive, got {self.epsilon}")
        k = self.num_slots
        if not self.n:
            self.n, self.mean, self.m2 = [0] * k, [0.0] * k, [0.0] * k
        if not len(self.n) == len(self.mean) == len(self.m2) == k:
            raise ProfileError(f"expected {k} slots")
        if any(c < 0 for c in self.n) or any(v < 0 for v in self.m2):
            raise ProfileError("negative slot statistics")

    @property
    def num_slots(self) -> int:
        return (DAY // self.slot_len) * (7 if self.weekly else 1)

    def slot_of(self, ts: float) -> int:
        hours = time_of_day(ts, self.utc_offset)
        slot = min(int(hours * 3600 // self.slot_len), DAY // self.slot_len - 1)
        if self.weekly:
            # 1970-01-01 was a Thursday; Monday is day 0
            day = (math.floor((ts / 3600.0 + self.utc_offset) / 24.0) + 3) % 7
            slot += day * (DAY // self.slot_len)
        return slot

    def update(self, sample: FeatureSample) -> None:
        if sample.module is not self.module:
            raise ProfileError(f"{sample.module} sample fed to {self.module} profile")
        k = self.slot_of(sample.ts)
        self.n[k] += 1
        delta = sample.value - self.mean[k]
        self.mean[k] += delta / self.n[k]
        self.m2[k] += delta * (sample.value - self.mean[k])

    def variance(self, slot: int) -> float:
        # single-sample slots report 0 and are flagged low-confidence by normalize
        return self.m2[slot] / (self.n[slot] - 1) if self.n[slot] >= 2 else 0.0

    def normalize(self, sample: FeatureSample) -> NormalizedInput:
        k = self.slot_of(sample.ts)
        if self.n[k] == 0:
            raise ColdStart(f"{self.module} slot {k} has no survey data")
        mean = self.mean[k]
        std = math.sqrt(self.variance(k))
        return NormalizedInput(
            ratio=sample.value / max(mean, self.epsilon),
            zscore=(sample.value - mean) / max(std, self.epsilon),
            low_confidence=self.n[k] < 2,
        )

    def coverage(self) -> int:
        return sum(1 for c in self.n if c > 0)

    def copy(self) -> "BaselineProfile":
        return BaselineProfile(self.module, self.slot_len, self.weekly, self.utc_offset, self.epsilon,
                               list(self.n), list(self.mean), list(self.m2))


def survey_update(profile: BaselineProfile, sample: FeatureSample) -> BaselineProfile:
    profile.update(sample)
    return profile


def normalize(profile: BaselineProfile, sample: FeatureSample) -> NormalizedInput:
    return profile.normalize(sample)


def new_profiles(slot_len: int = DEFAULT_SLOT, weekly: bool = False, utc_offset: float = 0.0,
                 epsilon: float = DEFAULT_EPSILON,
                 utilization_epsilon: float = DEFAULT_UTILIZATION_EPSILON) -> dict[ModuleKind, BaselineProfile]:
    return {m: BaselineProfile(m, slot_len, weekly, utc_offset,
                               utilization_epsilon if m is ModuleKind.UTILIZATION else epsilon)
            for m in ModuleKind}


def dumps_profiles(profiles: Iterable[BaselineProfile]) -> str:
    profiles = list(profiles)
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    for p in profiles:
        lines.append(f"profile {p.module.value} slot_len={p.slot_len} weekly={int(p.weekly)} "
                     f"utc_offset={p.utc_offset!r} epsilon={p.epsilon!r} slots={p.num_slots}")
        for k in range(p.num_slots):
            lines.append(f"slot {p.module.value} {k} {p.n[k]} {p.mean[k]!r} {p.m2[k]!r}")
    lines.append(f"end {len(profiles)}")
    return "\n".join(lines) + "\n"


def loads_profiles(text: str) -> dict[ModuleKind, BaselineProfile]:
    lines = text.splitlines()
    if not lines or lines[0].split() != [FORMAT_TAG, str(FORMAT_VERSION)]:
        head = lines[0] if lines else ""
        if head.startswith(FORMAT_TAG):
            raise ProfileError(f"unsupported profile version: {head!r}")
        raise ProfileError("not a profile file (bad header)")
    out: dict[ModuleKind, BaselineProfile] = {}
    i = 1
    try:
        while i < len(lines):
            tokens = lines[i].split()
            if tokens and tokens[0] == "end":
                if int(tokens[1]) != len(out) or i != len(lines) - 1:
                    raise ProfileError("trailer does not match profile count")
                return out
            if not tokens or tokens[0] != "profile":
                raise ProfileError(f"line {i + 1}: expected a profile block")
            module = ModuleKind(tokens[1])
            opts = dict(t.split("=", 1) for t in tokens[2:])
            slot_len, slots = int(opts["slot_len"]), int(opts["slots"])
            n, mean, m2 = [], [], []
            for k in range(slots):
                i += 1
                st = lines[i].split()
                if len(st) != 6 or st[0] != "slot" or st[1] != module.value or int(st[2]) != k:
                    raise ProfileError(f"line {i + 1}: expected slot {k} of {module.value}")
                n.append(int(st[3]))
                mean.append(float(st[4]))
                m2.append(float(st[5]))
            p = BaselineProfile(module, slot_len, opts["weekly"] == "1", float(opts["utc_offset"]),
                                float(opts["epsilon"]), n, mean, m2)
            if p.num_slots != slots:
                raise ProfileError(f"{module.value}: slot count {slots} inconsistent with slot_len")
            if module in out:
                raise ProfileError(f"duplicate profile for {module.value}")
            out[module] = p
            i += 1
    except ProfileError:
        raise
    except (IndexError, KeyError, ValueError) as exc:
        raise ProfileError(f"corrupt profile file: {exc!r}") from None
    raise ProfileError("corrupt profile file: missing end trailer (truncated?)")


def save_profiles(profiles: Union[Mapping[ModuleKind, BaselineProfile], Iterable[BaselineProfile]],
                  path: Union[str, os.PathLike]) -> None:
    if isinstance(profiles, Mapping):
        profiles = profiles.values()
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(dumps_profiles(profiles))
    os.replace(tmp, path)


def load_profiles(path: Union[str, os.PathLike]) -> dict[ModuleKind, BaselineProfile]:
    return loads_profiles(Path(path).read_text())


def save_profile(profile: BaselineProfile, path: Union[str, os.PathLike]) -> None:
    save_profiles([profile], path)


def load_profile(path: Union[str, os.PathLike]) -> BaselineProfile:
    profiles = load_profiles(path)
    if len(profiles) != 1:
        raise ProfileError(f"expected one profile, file holds {len(profiles)}")
    return next(iter(profiles.values()))
