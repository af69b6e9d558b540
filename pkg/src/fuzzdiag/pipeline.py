"""Survey, detection and tuning passes over a flow-record stream."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from .alerting import RateLimiter, Sinks, decide, dispatch
from .baseline import BaselineProfile, ColdStart, new_profiles
from .config import Config
from .fuzzy import RuleBase, evaluate
from .ingest import Bucket, Bucketizer, FlowRecord, features, time_of_day
from .rulebook import ActionLevel, ModuleKind, action_from_severity, build_rulebase, load_rulebase
from .tuner import TuneReport, batch_tune

log = logging.getLogger(__name__)


def buckets_from(records: Iterable[FlowRecord], cfg: Config, stats: Optional[dict] = None) -> Iterable[Bucket]:
    b = Bucketizer(cfg.window_len)
    n = 0
    for rec in records:
        n += 1
        yield from b.push(rec)
    yield from b.flush()
    if stats is not None:
        stats["records"] = n
        stats["rejected"] = b.rejected
        stats["rejected_bytes"] = b.rejected_bytes


def load_rulebases(cfg: Config) -> dict[ModuleKind, RuleBase]:
    return {m: load_rulebase(cfg.rulebases[m]) if m in cfg.rulebases else build_rulebase(m)
            for m in ModuleKind}


def survey(records: Iterable[FlowRecord], cfg: Config,
           profiles: Optional[dict[ModuleKind, BaselineProfile]] = None) -> tuple[dict[ModuleKind, BaselineProfile], dict]:
    """Accumulate every bucket's features into the per-module profiles."""
    if profiles is None:
        profiles = new_profiles(cfg.slot_len, cfg.weekly, cfg.utc_offset, cfg.epsilon, cfg.utilization_epsilon)
    stats: dict = {"windows": 0}
    for bucket in buckets_from(records, cfg, stats):
        stats["windows"] += 1
        for sample in features(bucket, cfg.link_capacity_bps):
            profiles[sample.module].update(sample)
    return profiles, stats


@dataclass(frozen=True)
class Decision:
    module: ModuleKind
    ts: float
    tod: float
    ratio: float
    severity: float
    action: ActionLevel
    low_confidence: bool = False


@dataclass
class DetectSummary:
    windows: int = 0
    records: int = 0
    rejected: int = 0
    cold_start: int = 0
    low_confidence: int = 0
    decisions: Counter = field(default_factory=Counter)   # (module, action) -> n
    dispatched: Counter = field(default_factory=Counter)  # (module, action) -> n
    suppressed: Counter = field(default_factory=Counter)  # (module, action) -> still pending at the end
    downgraded: int = 0
    sink_failures: int = 0

    def by_action(self, counter: Counter) -> dict[ActionLevel, int]:
        out = {a: 0 for a in ActionLevel}
        for (_, action), n in counter.items():
            out[action] += n
        return out

    def format(self) -> str:
        lines = [f"windows: {self.windows}  records: {self.records}  rejected: {self.rejected}  "
                 f"cold-start: {self.cold_start}  low-confidence: {self.low_confidence}"]
        lines.append(f"{'module':<12} " + " ".join(f"{a.name:>7}" for a in ActionLevel)
                     + "   dispatched  suppressed")
        for m in ModuleKind:
            dec = " ".join(f"{self.decisions[(m, a)]:>7}" for a in ActionLevel)
            disp = sum(self.dispatched[(m, a)] for a in ActionLevel)
            sup = sum(self.suppressed[(m, a)] for a in ActionLevel)
            lines.append(f"{m.value:<12} {dec}   {disp:>10}  {sup:>10}")
        lines.append(f"downgraded: {self.downgraded}  sink failures: {self.sink_failures}")
        return "\n".join(lines)


class Detector:
    """Ready-to-alert mode.  Profiles stay frozen unless `learn` is set."""

    def __init__(self, profiles: Mapping[ModuleKind, BaselineProfile], rulebases: Mapping[ModuleKind, RuleBase],
                 cfg: Config, sinks: Optional[Sinks] = None, learn: bool = False,
                 on_decision: Optional[Callable[[Decision], None]] = None):
        self.profiles = profiles
        self.rulebases = rulebases
        self.cfg = cfg
        self.sinks = sinks
        self.learn = learn
        self.on_decision = on_decision
        self.limiter = RateLimiter(cfg.cooldown)
        self.summary = DetectSummary()

    def evaluate_bucket(self, bucket: Bucket) -> list[Decision]:
        out = []
        tod = time_of_day(bucket.window_start, self.cfg.utc_offset)
        for sample in features(bucket, self.cfg.link_capacity_bps):
            profile = self.profiles[sample.module]
            try:
                norm = profile.normalize(sample)
            except ColdStart:
                self.summary.cold_start += 1
                continue
            severity = evaluate(self.rulebases[sample.module], (norm.ratio, tod)).output
            out.append(Decision(sample.module, sample.ts, tod, norm.ratio, severity,
                                action_from_severity(severity), norm.low_confidence))
            if self.learn:
                profile.update(sample)
        return out

    def process(self, bucket: Bucket) -> list[Decision]:
        self.summary.windows += 1
        decisions = self.evaluate_bucket(bucket)
        for d in decisions:
            self.summary.decisions[(d.module, d.action)] += 1
            self.summary.low_confidence += d.low_confidence
            if self.on_decision is not None:
                self.on_decision(d)
            event = decide(d.module, d.ts, d.severity, d.ratio, d.tod)
            if event is None:
                continue
            out = self.limiter(event)
            if out is None:
                continue
            self.summary.dispatched[(d.module, d.action)] += 1
            if self.sinks is not None:
                rec = dispatch(out, self.sinks)
                self.summary.downgraded += rec.downgraded
        return decisions

    def run(self, records: Iterable[FlowRecord]) -> DetectSummary:
        stats: dict = {}
        for bucket in buckets_from(records, self.cfg, stats):
            self.process(bucket)
        self.summary.records += stats.get("records", 0)
        self.summary.rejected += stats.get("rejected", 0)
        self.summary.suppressed = Counter(self.limiter.pending())
        if self.sinks is not None:
            self.summary.sink_failures = self.sinks.failures
        return self.summary


def normal_samples(records: Iterable[FlowRecord], profiles: Mapping[ModuleKind, BaselineProfile],
                   cfg: Config) -> dict[ModuleKind, list[tuple[float, float]]]:
    """(ratio, hour) pairs per module; cold-start windows are skipped."""
    out: dict[ModuleKind, list[tuple[float, float]]] = {m: [] for m in ModuleKind}
    for bucket in buckets_from(records, cfg):
        tod = time_of_day(bucket.window_start, cfg.utc_offset)
        for sample in features(bucket, cfg.link_capacity_bps):
            try:
                out[sample.module].append((profiles[sample.module].normalize(sample).ratio, tod))
            except ColdStart:
                pass
    return out


def tune(samples: Mapping[ModuleKind, list[tuple[float, float]]], rulebases: Mapping[ModuleKind, RuleBase],
         cfg: Config, holdout: Optional[Mapping[ModuleKind, list[tuple[float, float]]]] = None
         ) -> dict[ModuleKind, tuple[RuleBase, TuneReport]]:
    holdout = samples if holdout is None else holdout
    out = {}
    for m in ModuleKind:
        rb = rulebases[m]
        var, report = batch_tune(rb.variables[0], samples[m], rb, cfg.tuner, holdout[m])
        out[m] = (rb.with_variable(0, var), report)
    return out
