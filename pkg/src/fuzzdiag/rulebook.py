"""Default linguistic variables, the IP-packet rule table and the rule-base file format.

Rule-base file grammar (version 1), one statement per line, ``#`` starts a comment::

    fuzzdiag-rulebase 1
    tnorm product|min
    variable <name> <domain_min> <domain_max> linear|circular
    term <name> <left> <peak> <right> [left_shoulder] [right_shoulder]
    ...                                   (terms belong to the last variable)
    rules
    <term of var 1> <term of var 2> : <a_0> [<a_1> <a_2>]
    ...

Numbers are written with ``repr`` so a save/load round trip is exact.
"""
from __future__ import annotations

import enum
import math
import os
from pathlib import Path
from typing import Union

from .fuzzy import FuzzyError, LinguisticVariable, RuleBase, TNorm, TriangularMF, TSRule

FORMAT_TAG = "fuzzdiag-rulebase"
FORMAT_VERSION = 1

INTENSITY_TERMS = ("ExtremeLow", "Low", "Average", "High", "ExtremeHigh")
INTENSITY_PEAKS = (0.0, 0.5, 1.0, 1.5, 2.0)

# Ordered by peak hour; the circular domain wraps Night back onto MidNight.
TIME_TERMS = ("MidNight", "AfterMid", "EarlyMorning", "Morning", "Afternoon", "Evening", "Night")
TIME_PEAKS = (0.0, 2.5, 6.0, 10.0, 14.0, 18.0, 21.0)


class ModuleKind(enum.Enum):
    IP_COUNT = "IpCount"
    IPX_COUNT = "IpxCount"
    UTILIZATION = "Utilization"
    BYTES_PER_SEC = "BytesPerSec"

    def __str__(self):
        return self.value


class ActionLevel(enum.IntEnum):
    IGNORE = 0
    LOG = 1
    EMAIL = 2
    SMS = 3

    def __str__(self):
        return self.name


_I, _L, _E, _S = ActionLevel.IGNORE, ActionLevel.LOG, ActionLevel.EMAIL, ActionLevel.SMS

# Initial control rules for the IP packet vs. time module.
# Rows are time periods, columns ExtremeLow, Low, Average, High, ExtremeHigh.
IP_RULE_TABLE: dict[str, tuple[ActionLevel, ...]] = {
    "AfterMid":     (_S, _I, _L, _S, _S),
    "EarlyMorning": (_S, _I, _L, _E, _S),
    "Morning":      (_S, _L, _I, _I, _S),
    "Afternoon":    (_S, _I, _I, _L, _S),
    "Evening":      (_S, _L, _I, _I, _S),
    "Night":        (_S, _I, _L, _E, _S),
    "MidNight":     (_S, _I, _L, _S, _S),
}


class RulebookError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


def default_intensity_variable() -> LinguisticVariable:
    """Observed/baseline ratio; 1.0 is normal, inputs above 2.0 clamp onto ExtremeHigh."""
    return LinguisticVariable.ruspini("intensity", INTENSITY_TERMS, INTENSITY_PEAKS, 0.0, 2.0)


def default_time_variable() -> LinguisticVariable:
    return LinguisticVariable.ruspini("time", TIME_TERMS, TIME_PEAKS, 0.0, 24.0, circular=True)


def table_rulebase(table: dict[str, tuple[ActionLevel, ...]],
                   intensity: LinguisticVariable | None = None,
                   time: LinguisticVariable | None = None,
                   tnorm: TNorm = TNorm.PRODUCT) -> RuleBase:
    """Zero-order rule base whose constant consequents are the action codes."""
    intensity = intensity or default_intensity_variable()
    time = time or default_time_variable()
    rules = []
    for t_idx, t_name in enumerate(time.term_names):
        row = table[t_name]
        if len(row) != len(intensity.terms):
            raise RulebookError(f"row {t_name} has {len(row)} cells, expected {len(intensity.terms)}")
        for i_idx, action in enumerate(row):
            rules.append(TSRule((i_idx, t_idx), (float(int(action)),)))
    return RuleBase((intensity, time), tuple(rules), tnorm)


def build_rulebase(kind: ModuleKind) -> RuleBase:
    # Only the IP table is published; the other three modules start from a copy
    # of it and are meant to be overridden from file.
    ModuleKind(kind)
    return table_rulebase(IP_RULE_TABLE)


def action_from_severity(y: float) -> ActionLevel:
    if not math.isfinite(y):
        raise ValueError(f"severity must be finite, got {y}")
    if y < 0.5:
        return ActionLevel.IGNORE
    if y < 1.5:
        return ActionLevel.LOG
    if y < 2.5:
        return ActionLevel.EMAIL
    return ActionLevel.SMS


def dumps_rulebase(rb: RuleBase) -> str:
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}", f"tnorm {rb.tnorm.value}", ""]
    for var in rb.variables:
        kind = "circular" if var.circular else "linear"
        lines.append(f"variable {var.name} {var.domain_min!r} {var.domain_max!r} {kind}")
        for name, mf in var.terms:
            flags = ""
            if mf.left_shoulder:
                flags += " left_shoulder"
            if mf.right_shoulder:
                flags += " right_shoulder"
            lines.append(f"term {name} {mf.left!r} {mf.peak!r} {mf.right!r}{flags}")
        lines.append("")
    lines.append("rules")
    for rule in rb.rules:
        terms = " ".join(v.terms[t][0] for v, t in zip(rb.variables, rule.antecedent))
        coeffs = " ".join(repr(c) for c in rule.consequent)
        lines.append(f"{terms} : {coeffs}")
    return "\n".join(lines) + "\n"


def _float(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise RulebookError(f"expected a number, got {token!r}", lineno) from None
    if not math.isfinite(value):
        raise RulebookError(f"non-finite number {token!r}", lineno)
    return value


def loads_rulebase(text: str) -> RuleBase:
    variables: list[tuple[str, float, float, bool, list]] = []
    rules: list[tuple[int, list[str], list[float]]] = []
    tnorm = None
    in_rules = False
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not header_seen:
            if tokens[0] != FORMAT_TAG or len(tokens) != 2:
                raise RulebookError(f"expected header '{FORMAT_TAG} {FORMAT_VERSION}'", lineno)
            if tokens[1] != str(FORMAT_VERSION):
                raise RulebookError(f"unsupported rulebase version {tokens[1]}", lineno)
            header_seen = True
            continue
        if in_rules:
            if ":" not in line:
                raise RulebookError("rule line needs '<terms> : <coefficients>'", lineno)
            lhs, rhs = line.split(":", 1)
            terms, coeffs = lhs.split(), rhs.split()
            if not coeffs:
                raise RulebookError("rule has no coefficients", lineno)
            rules.append((lineno, terms, [_float(c, lineno) for c in coeffs]))
            continue
        head = tokens[0]
        if head == "tnorm":
            if len(tokens) != 2:
                raise RulebookError("tnorm takes one argument", lineno)
            try:
                tnorm = TNorm(tokens[1])
            except ValueError:
                raise RulebookError(f"unknown tnorm {tokens[1]!r}", lineno) from None
        elif head == "variable":
            if len(tokens) != 5 or tokens[4] not in ("linear", "circular"):
                raise RulebookError("expected 'variable <name> <min> <max> linear|circular'", lineno)
            variables.append((tokens[1], _float(tokens[2], lineno), _float(tokens[3], lineno),
                              tokens[4] == "circular", []))
        elif head == "term":
            if not variables:
                raise RulebookError("term before any variable", lineno)
            if len(tokens) < 5:
                raise RulebookError("expected 'term <name> <left> <peak> <right> [flags]'", lineno)
            flags = set(tokens[5:])
            unknown = flags - {"left_shoulder", "right_shoulder"}
            if unknown:
                raise RulebookError(f"unknown term flags {sorted(unknown)}", lineno)
            try:
                mf = TriangularMF(_float(tokens[2], lineno), _float(tokens[3], lineno), _float(tokens[4], lineno),
                                  "left_shoulder" in flags, "right_shoulder" in flags)
            except FuzzyError as exc:
                raise RulebookError(str(exc), lineno) from None
            variables[-1][4].append((tokens[1], mf))
        elif head == "rules":
            in_rules = True
        else:
            raise RulebookError(f"unknown statement {head!r}", lineno)

    if not header_seen:
        raise RulebookError("empty rulebase file")
    if tnorm is None:
        raise RulebookError("missing tnorm statement")
    if not in_rules:
        raise RulebookError("missing rules section")
    built = []
    for name, lo, hi, circ, terms in variables:
        try:
            var = LinguisticVariable(name, lo, hi, tuple(terms), circ)
        except FuzzyError as exc:
            raise RulebookError(str(exc)) from None
        if not var.is_ruspini():
            raise RulebookError(f"variable {name}: terms must put their feet on the neighbouring peaks")
        built.append(var)
    ts_rules = []
    for lineno, terms, coeffs in rules:
        if len(terms) != len(built):
            raise RulebookError(f"rule names {len(terms)} terms for {len(built)} variables", lineno)
        try:
            cell = tuple(v.term_index(t) for v, t in zip(built, terms))
        except FuzzyError as exc:
            raise RulebookError(str(exc), lineno) from None
        ts_rules.append(TSRule(cell, tuple(coeffs)))
    try:
        return RuleBase(tuple(built), tuple(ts_rules), tnorm)
    except FuzzyError as exc:
        raise RulebookError(str(exc)) from None


def save_rulebase(rb: RuleBase, path: Union[str, os.PathLike]) -> None:
    Path(path).write_text(dumps_rulebase(rb))


def load_rulebase(path: Union[str, os.PathLike]) -> RuleBase:
    return loads_rulebase(Path(path).read_text())
