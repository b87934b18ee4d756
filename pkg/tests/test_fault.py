import numpy as np
import pytest
from scipy import stats

from hprmul.core import MulConfig, UWord
from hprmul.fault import (ALL_SITES, Bus, FaultPlan, FaultPlanError, Injector, Mode, Replica,
                          SiteId, apply_plan, corrupt, flip_mask_array, scheme_sites,
                          site_width, stream_for)

HPR_RP1_PHH = SiteId("hpr", Replica.RP1, Bus.P_HH)
HPR_FP_PHH = SiteId("hpr", Replica.FP, Bus.P_HH)


def test_corrupt_extremes():
    x = UWord(8, 0b10110010)
    s = stream_for(7, 0, HPR_FP_PHH)
    assert corrupt(x, 0.0, s) == x
    assert corrupt(x, 1.0, stream_for(7, 0, HPR_FP_PHH)).value == 0b01001101


def test_corrupt_rejects_bad_probability():
    with pytest.raises(FaultPlanError):
        corrupt(UWord(4, 1), 1.5, stream_for(0, 0, HPR_FP_PHH))


def test_mean_flip_count_matches_binomial():
    idx = np.arange(1_000_000, dtype=np.uint64)
    m = flip_mask_array(123, idx, HPR_FP_PHH, 8, 0.05)
    counts = np.bitwise_count(m) if hasattr(np, "bitwise_count") else \
        np.array([bin(int(v)).count("1") for v in m])
    assert abs(counts.mean() - 0.4) <= 0.01


def test_per_bit_frequency_chi_square():
    t, p, width = 1_000_000, 0.02, 16
    idx = np.arange(t, dtype=np.uint64)
    m = flip_mask_array(99, idx, SiteId("tmr", Replica.FP, Bus.FP_SUM_OUT), width, p)
    obs = np.array([int(((m >> np.uint64(j)) & np.uint64(1)).sum()) for j in range(width)])
    chi2 = float((((obs - t * p) ** 2) / (t * p * (1 - p))).sum())
    assert chi2 < stats.chi2.ppf(0.99, df=width)


def test_replica_streams_uncorrelated():
    t = 1_000_000
    idx = np.arange(t, dtype=np.uint64)
    masks = [flip_mask_array(5, idx, SiteId("hpr", r, Bus.INPUT_A), 1, 0.5) for r in Replica]
    for i in range(3):
        for j in range(i + 1, 3):
            r = np.corrcoef(masks[i].astype(float), masks[j].astype(float))[0, 1]
            assert abs(r) < 5 / np.sqrt(t)


def test_stream_determinism_and_seed_sensitivity():
    a = [stream_for(1, 42, HPR_FP_PHH).uniform_at(j) for j in range(64)]
    b = [stream_for(1, 42, HPR_FP_PHH).uniform_at(j) for j in range(64)]
    c = [stream_for(2, 42, HPR_FP_PHH).uniform_at(j) for j in range(64)]
    assert a == b
    assert sum(x != y for x, y in zip(a, c)) == 64
    assert all(0.0 < u <= 1.0 for u in a + c)


def test_vector_masks_match_scalar_corrupt():
    site = SiteId("rpr", Replica.RP2, Bus.PRODUCT)
    idx = np.array([0, 1, 17, 10**9, 2**40], dtype=np.uint64)
    vec = flip_mask_array(2024, idx, site, 12, 0.3)
    for i, v in zip(idx, vec):
        x = UWord(12, 0)
        assert corrupt(x, 0.3, stream_for(2024, int(i), site)).value == int(v)


def test_masks_independent_of_evaluation_order():
    idx = np.arange(5000, dtype=np.uint64)
    perm = np.random.default_rng(0).permutation(5000).astype(np.uint64)
    m1 = flip_mask_array(3, idx, HPR_FP_PHH, 12, 0.1)
    m2 = flip_mask_array(3, perm, HPR_FP_PHH, 12, 0.1)
    np.testing.assert_array_equal(m1[perm.astype(np.int64)], m2)


def test_site_enumeration_is_stable_and_unique():
    assert len(set(ALL_SITES)) == len(ALL_SITES)
    ords = [s.ordinal for s in ALL_SITES]
    assert ords == list(range(1, len(ALL_SITES) + 1))
    assert str(ALL_SITES[0]) == "tmr.fp.input_a"
    assert len(scheme_sites("tmr")) == 27
    assert len(scheme_sites("rpr")) == 9 + 4 + 4
    assert len(scheme_sites("hpr")) == 9 + 5 + 5
    for s in ALL_SITES:
        assert SiteId.parse(str(s)) == s


def test_site_widths_hpr_n8_k2():
    cfg = MulConfig(8, 2)
    w = {str(s): site_width(s, cfg) for s in scheme_sites("hpr")}
    assert w["hpr.fp.input_a"] == 8 and w["hpr.rp1.input_a"] == 6
    assert w["hpr.fp.p_hh"] == 12 and w["hpr.fp.p_hl"] == 8 and w["hpr.fp.p_ll"] == 4
    assert w["hpr.fp.lower_sum"] == 11 and w["hpr.fp.fp_sum_out"] == 12
    assert w["hpr.rp2.rp_adder_out"] == 12 and w["hpr.rp2.voter_in"] == 12


def test_apply_plan_examples():
    clean = UWord(12, 999)
    assert apply_plan(FaultPlan(), HPR_RP1_PHH, clean) == clean
    forced = FaultPlan.forced([("hpr.rp1.p_hh", 0)])
    assert apply_plan(forced, HPR_RP1_PHH, clean).value == 998
    assert apply_plan(forced, HPR_FP_PHH, clean) == clean
    noisy_inputs = FaultPlan(mode=Mode.INPUT, p_f=1.0, seed=1)
    assert apply_plan(noisy_inputs, HPR_FP_PHH, clean) == clean
    assert apply_plan(noisy_inputs, SiteId("hpr", Replica.FP, Bus.INPUT_A), UWord(8, 0)).value == 255


def test_internal_mode_gating():
    plan = FaultPlan(mode=Mode.INTERNAL, p_f=1.0)
    assert plan.targets(HPR_FP_PHH)
    assert not plan.targets(SiteId("hpr", Replica.FP, Bus.INPUT_B))
    assert not plan.targets(SiteId("hpr", Replica.FP, Bus.VOTER_IN))


def test_site_filter_passes_other_sites_clean():
    plan = FaultPlan(mode=Mode.INPUT, p_f=1.0, site_filter=frozenset(
        {SiteId("tmr", Replica.FP, Bus.INPUT_A)}))
    assert plan.targets(SiteId("tmr", Replica.FP, Bus.INPUT_A))
    assert not plan.targets(SiteId("tmr", Replica.RP1, Bus.INPUT_A))


def test_plan_validation():
    with pytest.raises(FaultPlanError):
        FaultPlan(mode=Mode.INPUT, p_f=-0.1)
    with pytest.raises(FaultPlanError):
        FaultPlan.forced([("hpr.rp1.p_hl", 0)])  # RP has no p_hl bus
    with pytest.raises(FaultPlanError):
        FaultPlan.forced([("hpr.rp1.p_hh", 12)]).validate("hpr", MulConfig(8, 2))
    with pytest.raises(FaultPlanError):
        Injector(FaultPlan.forced([("hpr.fp.p_ll", 4)]), "hpr", MulConfig(8, 2),
                 np.zeros(1, np.uint64))
    FaultPlan.forced([("hpr.rp1.p_hh", 11)]).validate("hpr", MulConfig(8, 2))


def test_plan_dict_round_trip():
    plan = FaultPlan(mode=Mode.INPUT, p_f=0.01, seed=2**64 - 1,
                     site_filter=frozenset({HPR_FP_PHH, HPR_RP1_PHH}))
    assert FaultPlan.from_dict(plan.to_dict()) == plan
    forced = FaultPlan.forced([("tmr.rp2.voter_in", 3), ("hpr.fp.lower_sum", 8)])
    assert FaultPlan.from_dict(forced.to_dict()) == forced
