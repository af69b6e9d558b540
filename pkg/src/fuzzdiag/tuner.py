"""Online vertex-displacement tuning of the intensity variable.

When a sample known to be normal still raised an alert, the peak of the
strongest-firing intensity term is pulled toward the sample by
``eta * (x - peak)``.  Moves are clipped so peaks keep a minimum separation,
stay inside the domain and never drift further than ``max_total_disp`` from
where tuning started.  Feet are re-derived from the new peaks afterwards, so
the variable stays a ruspini partition.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .fuzzy import LinguisticVariable, RuleBase, evaluate
from .rulebook import ActionLevel, action_from_severity

log = logging.getLogger(__name__)


class Label(enum.Enum):
    NORMAL = "normal"
    ANOMALOUS = "anomalous"


@dataclass(frozen=True)
class TunerConfig:
    eta: float = 0.05
    max_total_disp: float = 0.25
    keep_order_margin: float = 0.1

    def __post_init__(self):
        # eta = 0 is accepted as the explicit "tuning off" setting
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if self.max_total_disp < 0:
            raise ValueError("max_total_disp must be non-negative")
        if not self.keep_order_margin > 0:
            raise ValueError("keep_order_margin must be positive")


@dataclass
class TuneReport:
    displacement: dict[str, float]
    samples_seen: int = 0
    steps_applied: int = 0
    false_alerts_before: int = 0
    false_alerts_after: int = 0
    escalated_before: int = 0
    escalated_after: int = 0
    holdout_size: int = 0
    warnings: list[str] = field(default_factory=list)

    def format(self) -> str:
        lines = [
            f"samples seen:         {self.samples_seen}",
            f"tuning steps applied: {self.steps_applied}",
            f"held-out samples:     {self.holdout_size}",
            f"false alerts before:  {self.false_alerts_before} (EMAIL or SMS: {self.escalated_before})",
            f"false alerts after:   {self.false_alerts_after} (EMAIL or SMS: {self.escalated_after})",
            "peak displacement:",
        ]
        lines += [f"  {name:<12} {d:+.6f}" for name, d in self.displacement.items()]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def online_tune_step(variable: LinguisticVariable, x: float, decided: ActionLevel, label: Label,
                     cfg: TunerConfig = TunerConfig(),
                     anchor: Optional[Sequence[float]] = None) -> LinguisticVariable:
    """One tuning step; returns `variable` itself when nothing moves.

    `anchor` holds the peaks tuning started from and bounds the cumulative
    displacement; it defaults to the current peaks (a per-step bound).
    """
    if label is not Label.NORMAL or decided <= ActionLevel.IGNORE or cfg.eta == 0.0:
        return variable
    if not math.isfinite(x):
        raise ValueError(f"non-finite tuning input {x}")
    x = variable.prepare(x)
    degrees = variable.memberships(x)
    k = max(range(len(degrees)), key=degrees.__getitem__)
    peaks = list(variable.peaks)
    anchor = list(peaks if anchor is None else anchor)
    target = peaks[k] + cfg.eta * (x - peaks[k])

    lo, hi = variable.domain_min, variable.domain_max
    lo = max(lo, anchor[k] - cfg.max_total_disp)
    hi = min(hi, anchor[k] + cfg.max_total_disp)
    if k > 0:
        lo = max(lo, peaks[k - 1] + cfg.keep_order_margin)
    if k < len(peaks) - 1:
        hi = min(hi, peaks[k + 1] - cfg.keep_order_margin)
    if lo > hi:
        # already squeezed against a constraint; do not move at all
        return variable
    new = min(max(target, lo), hi)
    if new == peaks[k]:
        return variable
    peaks[k] = new
    return LinguisticVariable.ruspini(variable.name, variable.term_names, peaks,
                                      variable.domain_min, variable.domain_max, variable.circular)


def count_false_alerts(rb: RuleBase, samples: Sequence[tuple[float, float]]) -> tuple[int, int]:
    """(non-IGNORE decisions, EMAIL-or-higher decisions) over normal (ratio, hour) samples."""
    alerts = escalated = 0
    for ratio, hour in samples:
        action = action_from_severity(evaluate(rb, (ratio, hour)).output)
        if action > ActionLevel.IGNORE:
            alerts += 1
        if action >= ActionLevel.EMAIL:
            escalated += 1
    return alerts, escalated


def batch_tune(variable: LinguisticVariable, normal_samples: Sequence[tuple[float, float]], rb: RuleBase,
               cfg: TunerConfig = TunerConfig(),
               holdout: Optional[Sequence[tuple[float, float]]] = None,
               intensity_index: int = 0) -> tuple[LinguisticVariable, TuneReport]:
    """Apply online steps over (ratio, hour-of-day) samples in order.

    Decisions are taken with `rb` carrying the current state of `variable`.
    False alerts are counted on `holdout` before and after.
    """
    anchor = variable.peaks
    report = TuneReport(displacement={n: 0.0 for n in variable.term_names})
    current_rb = rb.with_variable(intensity_index, variable)
    if holdout is not None:
        report.holdout_size = len(holdout)
        report.false_alerts_before, report.escalated_before = count_false_alerts(current_rb, holdout)
    if not normal_samples:
        report.warnings.append("no samples given, variable left unchanged")
        log.warning("batch_tune called with no samples")
    for ratio, hour in normal_samples:
        report.samples_seen += 1
        decided = action_from_severity(evaluate(current_rb, (ratio, hour)).output)
        tuned = online_tune_step(variable, ratio, decided, Label.NORMAL, cfg, anchor)
        if tuned is not variable:
            report.steps_applied += 1
            variable = tuned
            current_rb = rb.with_variable(intensity_index, variable)
    report.displacement = {n: p - a for n, p, a in zip(variable.term_names, variable.peaks, anchor)}
    if holdout is not None:
        report.false_alerts_after, report.escalated_after = count_false_alerts(current_rb, holdout)
    return variable, report
