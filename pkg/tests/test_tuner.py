import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzdiag.rulebook import ActionLevel, ModuleKind, build_rulebase, default_intensity_variable
from fuzzdiag.tuner import Label, TunerConfig, batch_tune, count_false_alerts, online_tune_step


@pytest.fixture
def var():
    return default_intensity_variable()


def test_single_step_moves_max_firing_peak(var):
    out = online_tune_step(var, 1.3, ActionLevel.LOG, Label.NORMAL, TunerConfig(eta=0.1))
    assert out.peaks == pytest.approx((0.0, 0.5, 1.0, 1.48, 2.0), abs=1e-12)
    assert out.is_ruspini()
    # neighbours' feet follow the moved peak
    assert out.terms[2][1].right == pytest.approx(1.48)
    assert out.terms[4][1].left == pytest.approx(1.48)


@pytest.mark.parametrize("decided, label", [
    (ActionLevel.IGNORE, Label.NORMAL),
    (ActionLevel.SMS, Label.ANOMALOUS),
])
def test_no_move_without_false_alert(var, decided, label):
    assert online_tune_step(var, 1.3, decided, label) is var


def test_order_margin_clips_move(var):
    cfg = TunerConfig(eta=0.9, max_total_disp=10.0, keep_order_margin=0.1)
    out = online_tune_step(var, 1.0, ActionLevel.LOG, Label.NORMAL, cfg)
    assert out is var  # x sits on Average's peak, nothing to do
    out = online_tune_step(var, 1.26, ActionLevel.LOG, Label.NORMAL, cfg)
    # High is max-firing at 1.26; target 1.5 + 0.9 * (-0.24) = 1.284 is allowed
    assert out.peaks[3] == pytest.approx(1.284)
    squeezed = online_tune_step(out, 1.11, ActionLevel.LOG, Label.NORMAL, cfg)
    # Average (peak 1.0) fires strongest at 1.11; the order margin caps it at 1.284 - 0.1
    assert squeezed.peaks[2] == pytest.approx(1.099)
    out = online_tune_step(var, 1.74, ActionLevel.LOG, Label.NORMAL, cfg)
    assert out.peaks[3] == pytest.approx(1.716)
    out = online_tune_step(var, 1.8, ActionLevel.LOG, Label.NORMAL, TunerConfig(0.99, 10.0, 0.3))
    # ExtremeHigh fires strongest at 1.8; High's peak plus the margin stops it at 1.8
    assert out.peaks[3] == 1.5 and out.peaks[4] == pytest.approx(1.802)


def test_displacement_cap(var):
    cfg = TunerConfig(eta=0.5, max_total_disp=0.05)
    v = var
    for _ in range(20):
        v = online_tune_step(v, 1.3, ActionLevel.LOG, Label.NORMAL, cfg, anchor=var.peaks)
    assert v.peaks[3] == pytest.approx(1.45)


def test_eta_zero_is_identity(var):
    rb = build_rulebase(ModuleKind.IP_COUNT)
    rng = np.random.default_rng(0)
    samples = list(zip(rng.uniform(0, 2, 300).tolist(), rng.uniform(0, 24, 300).tolist()))
    out, report = batch_tune(var, samples, rb, TunerConfig(eta=0.0))
    assert out == var
    assert all(d == 0.0 for d in report.displacement.values())
    assert report.steps_applied == 0


def test_empty_samples_warn(var):
    rb = build_rulebase(ModuleKind.IP_COUNT)
    out, report = batch_tune(var, [], rb, holdout=[(1.0, 10.0)])
    assert out == var and report.warnings
    assert report.false_alerts_before == report.false_alerts_after


def test_invalid_config():
    for kw in ({"eta": 1.0}, {"eta": -0.1}, {"max_total_disp": -1}, {"keep_order_margin": 0}):
        with pytest.raises(ValueError):
            TunerConfig(**kw)


def synthetic(seed, n, mean=1.2, sd=0.03):
    rng = np.random.default_rng(seed)
    return list(zip(rng.normal(mean, sd, n).tolist(), rng.uniform(0, 24, n).tolist()))


def test_shifted_normal_traffic_reduces_false_alerts(var):
    rb = build_rulebase(ModuleKind.IP_COUNT)
    train, holdout = synthetic(1, 3000), synthetic(2, 2000)
    before = count_false_alerts(rb, holdout)[0]
    out, report = batch_tune(var, train, rb, holdout=holdout)
    assert report.false_alerts_before == before
    assert report.false_alerts_after <= before
    assert report.steps_applied > 0
    assert report.displacement["Average"] > 0


stream = st.lists(st.tuples(st.floats(-1, 3), st.sampled_from(list(ActionLevel))), max_size=80)
configs = st.builds(TunerConfig, st.floats(0, 0.99), st.floats(0, 1), st.floats(0.01, 0.4))


@given(stream, configs)
def test_tuning_keeps_order_and_cap(samples, cfg):
    var = default_intensity_variable()
    v = var
    for x, decided in samples:
        v = online_tune_step(v, x, decided, Label.NORMAL, cfg, anchor=var.peaks)
        peaks = v.peaks
        assert all(b > a for a, b in zip(peaks, peaks[1:]))
        assert all(abs(p - a) <= cfg.max_total_disp + 1e-12 for p, a in zip(peaks, var.peaks))
        assert v.domain_min <= peaks[0] and peaks[-1] <= v.domain_max
        assert v.is_ruspini()
