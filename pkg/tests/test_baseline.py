import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzdiag.baseline import (BaselineProfile, ColdStart, ProfileError, dumps_profiles, load_profile,
                               load_profiles, loads_profiles, new_profiles, normalize, save_profile,
                               save_profiles, survey_update)
from fuzzdiag.ingest import FeatureSample
from fuzzdiag.rulebook import ModuleKind

IP = ModuleKind.IP_COUNT


def sample(value, ts=0.0, module=IP):
    return FeatureSample(module, ts, float(value))


def test_two_point_mean():
    p = BaselineProfile(IP)
    survey_update(p, sample(10))
    survey_update(p, sample(20))
    assert p.n[0] == 2 and p.mean[0] == 15.0 and p.variance(0) == 50.0


def test_single_sample_flagged():
    p = BaselineProfile(IP)
    p.update(sample(10))
    assert p.variance(0) == 0.0
    assert normalize(p, sample(10)).low_confidence


def test_matches_two_pass_reference():
    rng = random.Random(42)
    values = [rng.lognormvariate(4, 0.7) for _ in range(1000)]
    p = BaselineProfile(IP)
    for v in values:
        p.update(sample(v))
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    assert p.mean[0] == pytest.approx(mean, abs=1e-9)
    assert p.variance(0) == pytest.approx(var, abs=1e-9)


def test_slots_follow_time_of_day():
    p = BaselineProfile(IP, slot_len=1800, utc_offset=2.0)
    assert p.num_slots == 48
    assert p.slot_of(0) == 4  # 02:00 local
    assert p.slot_of(86400 * 3 + 1799) == 4
    w = BaselineProfile(IP, weekly=True)
    assert w.num_slots == 336
    # 1970-01-05 was a Monday
    assert w.slot_of(4 * 86400) == 0 and w.slot_of(0) == 3 * 48


def test_module_mismatch():
    with pytest.raises(ProfileError):
        BaselineProfile(IP).update(sample(1, module=ModuleKind.IPX_COUNT))


def test_normalize():
    p = BaselineProfile(IP)
    p.update(sample(100))
    p.update(sample(100))
    assert normalize(p, sample(150)).ratio == 1.5
    assert normalize(p, sample(0)).ratio == 0.0
    idle = BaselineProfile(IP, epsilon=1.0)
    idle.update(sample(0))
    assert normalize(idle, sample(100)).ratio == 100.0


def test_cold_start():
    with pytest.raises(ColdStart):
        normalize(BaselineProfile(IP), sample(5))


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=60), st.randoms())
def test_mean_is_order_independent(values, rnd):
    a, b = BaselineProfile(IP), BaselineProfile(IP)
    shuffled = list(values)
    rnd.shuffle(shuffled)
    for v in values:
        a.update(sample(v))
    for v in shuffled:
        b.update(sample(v))
    assert a.mean[0] == pytest.approx(b.mean[0], abs=1e-9, rel=1e-12)


@given(st.lists(st.floats(1, 1e6), min_size=1, max_size=30))
def test_mean_valued_sample_has_unit_ratio(values):
    p = BaselineProfile(IP)
    for v in values:
        p.update(sample(v))
    assert normalize(p, sample(p.mean[0])).ratio == 1.0


def filled_profiles():
    ps = new_profiles()
    rng = random.Random(3)
    for m, p in ps.items():
        for k in range(500):
            p.update(FeatureSample(m, rng.uniform(0, 86400), rng.uniform(0, 300)))
    return ps


def test_roundtrip(tmp_path):
    ps = filled_profiles()
    save_profiles(ps, tmp_path / "p.txt")
    assert load_profiles(tmp_path / "p.txt") == ps
    one = ps[IP]
    save_profile(one, tmp_path / "one.txt")
    assert load_profile(tmp_path / "one.txt") == one


def test_truncated_file_rejected():
    text = dumps_profiles(filled_profiles().values())
    for cut in (len(text) // 2, len(text) - 8):
        with pytest.raises(ProfileError):
            loads_profiles(text[:cut])


def test_version_mismatch():
    text = dumps_profiles([BaselineProfile(IP)]).replace("fuzzdiag-profile 1", "fuzzdiag-profile 9")
    with pytest.raises(ProfileError, match="version"):
        loads_profiles(text)


def test_slot_len_must_divide_day():
    text = dumps_profiles([BaselineProfile(IP, slot_len=3600)]).replace("slot_len=3600", "slot_len=7000")
    with pytest.raises(ProfileError):
        loads_profiles(text)
    with pytest.raises(ProfileError):
        BaselineProfile(IP, slot_len=7000)
