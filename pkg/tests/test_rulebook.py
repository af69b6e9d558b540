import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzdiag.fuzzy import TNorm, evaluate, membership
from fuzzdiag.rulebook import (IP_RULE_TABLE, ActionLevel, ModuleKind, RulebookError, action_from_severity,
                               build_rulebase, default_intensity_variable, default_time_variable,
                               dumps_rulebase, load_rulebase, loads_rulebase, save_rulebase,
                               table_rulebase)


def term(var, name):
    return var.terms[var.term_index(name)][1]


def test_intensity_variable():
    iv = default_intensity_variable()
    assert iv.term_names == ("ExtremeLow", "Low", "Average", "High", "ExtremeHigh")
    assert iv.peaks == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert membership(term(iv, "Average"), 1.0) == 1.0
    assert membership(term(iv, "Low"), 1.0) == 0.0
    # halfway up the ramp from the Average peak (1.0) to the High peak (1.5)
    assert membership(term(iv, "High"), 1.25) == 0.5
    assert iv.is_ruspini()


def test_time_variable():
    tv = default_time_variable()
    assert set(tv.term_names) == {"AfterMid", "EarlyMorning", "Morning", "Afternoon", "Evening", "Night", "MidNight"}
    assert tv.circular
    assert tv.memberships(10.0)[tv.term_index("Morning")] == 1.0
    assert tv.memberships(24.0)[tv.term_index("MidNight")] == 1.0
    # midway between the Night peak (21) and the wrapped MidNight peak (24)
    assert tv.memberships(22.5)[tv.term_index("Night")] == 0.5
    assert tv.memberships(22.5)[tv.term_index("MidNight")] == 0.5


@pytest.mark.parametrize("intensity, time, action", [
    ("Average", "Morning", ActionLevel.IGNORE),
    ("High", "Night", ActionLevel.EMAIL),
    ("ExtremeLow", "Afternoon", ActionLevel.SMS),
    ("Low", "Evening", ActionLevel.LOG),
    ("High", "AfterMid", ActionLevel.SMS),
])
def test_table_cells(intensity, time, action):
    rb = build_rulebase(ModuleKind.IP_COUNT)
    assert rb.rule_for(intensity, time).consequent == (float(action),)


@pytest.mark.parametrize("kind", list(ModuleKind))
def test_every_module_has_complete_rulebase(kind):
    rb = build_rulebase(kind)
    assert len(rb.rules) == 35
    assert rb.tnorm is TNorm.PRODUCT


def test_peak_inputs_reproduce_table():
    rb = build_rulebase(ModuleKind.IP_COUNT)
    iv, tv = rb.variables
    for t_name, row in IP_RULE_TABLE.items():
        for i_name, action in zip(iv.term_names, row):
            res = evaluate(rb, (term(iv, i_name).peak, term(tv, t_name).peak))
            assert sum(w > 0 for w in res.weights) == 1
            assert action_from_severity(res.output) is action


@pytest.mark.parametrize("y, action", [
    (0.0, ActionLevel.IGNORE), (0.4999, ActionLevel.IGNORE), (0.5, ActionLevel.LOG), (1.0, ActionLevel.LOG),
    (1.5, ActionLevel.EMAIL), (2.49, ActionLevel.EMAIL), (2.5, ActionLevel.SMS), (2.6, ActionLevel.SMS),
])
def test_action_from_severity(y, action):
    assert action_from_severity(y) is action


@pytest.mark.parametrize("y", [math.nan, math.inf, -math.inf])
def test_action_from_severity_rejects_nonfinite(y):
    with pytest.raises(ValueError):
        action_from_severity(y)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_action_monotone(a, b):
    lo, hi = sorted((a, b))
    assert action_from_severity(lo) <= action_from_severity(hi)


def test_roundtrip(tmp_path):
    rb = build_rulebase(ModuleKind.IP_COUNT)
    save_rulebase(rb, tmp_path / "ip.rules")
    assert load_rulebase(tmp_path / "ip.rules") == rb


def test_roundtrip_first_order_min_and_odd_peaks():
    iv = default_intensity_variable()
    from fuzzdiag.fuzzy import LinguisticVariable, RuleBase, TSRule
    iv = LinguisticVariable.ruspini(iv.name, iv.term_names, (0.1, 0.47, 1.0123456789, 1.5, 1.9), 0.0, 2.0)
    base = table_rulebase(IP_RULE_TABLE, iv, tnorm=TNorm.MIN)
    rules = tuple(TSRule(r.antecedent, (r.consequent[0], 0.1 * k, -1 / 3)) for k, r in enumerate(base.rules))
    rb = RuleBase(base.variables, rules, TNorm.MIN)
    assert loads_rulebase(dumps_rulebase(rb)) == rb


def _text_without(predicate):
    text = dumps_rulebase(build_rulebase(ModuleKind.IP_COUNT))
    return "\n".join(line for line in text.splitlines() if not predicate(line))


def test_missing_rule_is_named():
    text = _text_without(lambda line: line.startswith("High Night :"))
    with pytest.raises(RulebookError, match=r"\(High, Night\)"):
        loads_rulebase(text)


def test_duplicate_rule():
    text = dumps_rulebase(build_rulebase(ModuleKind.IP_COUNT)) + "Low Morning : 2.0\n"
    with pytest.raises(RulebookError, match="duplicate"):
        loads_rulebase(text)


@pytest.mark.parametrize("bad, lineno", [
    ("tnorm sometimes", 2),
    ("term Bogus 0 1", 5),
])
def test_parse_errors_carry_line_numbers(bad, lineno):
    lines = dumps_rulebase(build_rulebase(ModuleKind.IP_COUNT)).splitlines()
    lines.insert(lineno - 1, bad)
    if bad.startswith("tnorm"):
        del lines[lineno]
    with pytest.raises(RulebookError) as info:
        loads_rulebase("\n".join(lines))
    assert info.value.lineno == lineno


def test_bad_rule_coefficient_line_number():
    lines = dumps_rulebase(build_rulebase(ModuleKind.IP_COUNT)).splitlines()
    idx = next(i for i, line in enumerate(lines) if line.startswith("Low Morning :"))
    lines[idx] = "Low Morning : one"
    with pytest.raises(RulebookError) as info:
        loads_rulebase("\n".join(lines))
    assert info.value.lineno == idx + 1


def test_non_ruspini_terms_rejected():
    text = dumps_rulebase(build_rulebase(ModuleKind.IP_COUNT)).replace("term Low 0.0 0.5 1.0", "term Low 0.1 0.5 1.0")
    with pytest.raises(RulebookError, match="neighbouring peaks"):
        loads_rulebase(text)


def test_bad_header():
    with pytest.raises(RulebookError):
        loads_rulebase("fuzzdiag-rulebase 2\n")
    with pytest.raises(RulebookError):
        loads_rulebase("")
