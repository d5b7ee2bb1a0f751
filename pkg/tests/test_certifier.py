import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm
from statsmodels.stats.proportion import proportion_confint

from bellbattery import behaviors as bh
from bellbattery.certifier import (
    ReadoutModel,
    azuma_lower_bound,
    certify,
    chsh_interval,
    chsh_to_probability,
    clopper_pearson,
    clopper_pearson_lower,
    hoeffding_epsilon,
    hoeffding_lower,
    normal_quantile,
    readout_invert,
    symmetric_flip_threshold,
    wilson,
)
from bellbattery.errors import DegenerateCalibration, InvalidParameter
from bellbattery.games import GameValues, game_values, make_chained, make_chsh
from bellbattery.transducer import WorkRecord, simulate

COS2 = math.cos(math.pi / 8) ** 2
CHSH_VALUES = GameValues(0.75, COS2, True, 1.0)


def binomial_upper_tails(n, p):
    """P[X >= k] for k = 0..n, X ~ Binomial(n, p), by direct summation of the pmf."""
    j = np.arange(n + 1)
    comb = np.array([float(math.comb(n, i)) for i in j])
    pmf = comb[None, :] * np.power(p[:, None], j[None, :]) * np.power(1.0 - p[:, None], (n - j)[None, :])
    pmf = np.where(j[None, :] >= np.arange(n + 1)[:, None], pmf, 0.0)
    return pmf.sum(axis=1)


def record(bits, name="chsh"):
    return WorkRecord(name, 1.0, 0, np.asarray(bits, dtype=np.uint8))


# Hoeffding / Azuma


def test_hoeffding_examples():
    assert hoeffding_epsilon(5000, 0.01) == pytest.approx(0.021459660262893473, abs=1e-15)
    assert hoeffding_epsilon(200_000, 0.01) == pytest.approx(0.003393070212207556, abs=1e-15)
    assert hoeffding_epsilon(5000, 0.001) > hoeffding_epsilon(5000, 0.01)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_hoeffding_rejects_alpha(alpha):
    with pytest.raises(InvalidParameter):
        hoeffding_epsilon(100, alpha)


def test_azuma_matches_hoeffding():
    rec = simulate(make_chsh(), bh.tsirelson_chsh(), 20_000, seed=3)
    assert azuma_lower_bound(rec, 0.01) == hoeffding_lower(rec.p_hat, rec.rounds, 0.01)
    assert azuma_lower_bound(record([1]), 0.01) == 0.0
    full = record(np.ones(10_000))
    assert azuma_lower_bound(full, 0.01) == 1.0 - hoeffding_epsilon(10_000, 0.01)


def test_hoeffding_soundness():
    rng = np.random.default_rng(11)
    alpha, n, trials, p = 0.05, 1000, 10_000, 0.8
    p_hat = rng.binomial(n, p, size=trials) / n
    misses = np.mean(p_hat - hoeffding_epsilon(n, alpha) > p)
    assert misses <= alpha + 3 * math.sqrt(alpha * (1 - alpha) / trials)


# Clopper-Pearson


def test_clopper_pearson_endpoints():
    for n in (1, 10, 1000):
        assert clopper_pearson(0, n, 0.05)[0] == 0.0
        assert clopper_pearson(n, n, 0.05)[1] == 1.0
    with pytest.raises(InvalidParameter):
        clopper_pearson(11, 10, 0.05)
    with pytest.raises(InvalidParameter):
        clopper_pearson(1, 10, 0.05, sided="left")


def test_clopper_pearson_example():
    p_lo, _ = clopper_pearson(85, 100, 0.05, sided="one")
    tail = binomial_upper_tails(100, np.array([p_lo]))[85]
    assert abs(tail - 0.05) <= 1e-9


def test_clopper_pearson_lower_oracle_all_n():
    worst = 0.0
    for alpha in (0.05, 0.01):
        for n in range(1, 501):
            k = np.arange(n + 1)
            p_lo = clopper_pearson_lower(k, n, alpha)
            assert p_lo[0] == 0.0
            tails = binomial_upper_tails(n, p_lo)
            worst = max(worst, float(np.abs(tails[1:] - alpha).max()))
    assert worst <= 1e-8


def test_scalar_and_vector_agree():
    k = np.arange(0, 51)
    vec = clopper_pearson_lower(k, 50, 0.01)
    scal = [clopper_pearson(int(i), 50, 0.01, sided="one")[0] for i in k]
    np.testing.assert_allclose(vec, scal, atol=1e-13)


def test_clopper_pearson_upper_oracle():
    n = 80
    for k in range(0, n):
        _, hi = clopper_pearson(k, n, 0.05)
        lower_tail = 1.0 - binomial_upper_tails(n, np.array([hi]))[k + 1]
        assert abs(lower_tail - 0.025) <= 1e-8


@pytest.mark.parametrize("p", [0.1, 0.5, 0.853553, 0.99])
def test_clopper_pearson_coverage(p):
    rng = np.random.default_rng(int(p * 1e6))
    alpha, n, trials = 0.05, 200, 10_000
    ks = rng.binomial(n, p, size=trials)
    table = {k: clopper_pearson(int(k), n, alpha) for k in np.unique(ks)}
    covered = np.mean([table[k][0] <= p <= table[k][1] for k in ks])
    assert covered >= 1 - alpha - 3 * math.sqrt(alpha * (1 - alpha) / trials)


# Wilson and the normal quantile


@pytest.mark.parametrize("p", [1e-10, 1e-4, 0.01, 0.02425, 0.2, 0.5, 0.975, 0.995, 1 - 1e-9])
def test_normal_quantile(p):
    assert normal_quantile(p) == pytest.approx(norm.ppf(p), abs=1e-8)


@given(st.floats(1e-12, 1 - 1e-12))
def test_normal_quantile_property(p):
    assert abs(normal_quantile(p) - norm.ppf(p)) < 1e-8


@pytest.mark.parametrize("k,n,alpha", [(50, 100, 0.05), (0, 10, 0.05), (10, 10, 0.01), (853553, 10**6, 0.05), (3, 7, 0.2)])
def test_wilson_matches_oracle(k, n, alpha):
    lo, hi = wilson(k, n, alpha)
    ref = proportion_confint(k, n, alpha=alpha, method="wilson")
    assert lo == pytest.approx(ref[0], abs=1e-9)
    assert hi == pytest.approx(ref[1], abs=1e-9)


def test_wilson_examples():
    lo, hi = wilson(50, 100, 0.05)
    assert (lo + hi) / 2 == pytest.approx(0.5, abs=1e-15)
    assert wilson(0, 10, 0.05)[0] == 0.0
    lo, hi = wilson(853553, 10**6, 0.05)
    # full width is 2 z sqrt(p(1-p)/n) to leading order, about 1.39e-3
    assert (hi - lo) / 2 < 0.0008
    assert hi - lo == pytest.approx(2 * 1.959963984540054 * math.sqrt(0.853553 * 0.146447 / 1e6), rel=1e-3)


# CHSH mapping


def test_chsh_interval():
    assert chsh_interval((0.75, 1.0)) == (2.0, 4.0)
    assert chsh_interval((COS2, 0.5))[0] == pytest.approx(2 * math.sqrt(2), abs=1e-14)
    assert chsh_interval((0.5, 0.5)) == (0.0, 0.0)


@given(st.floats(0, 1), st.floats(0, 1))
def test_chsh_round_trip(a, b):
    lo, hi = chsh_to_probability(chsh_interval((a, b)))
    assert abs(lo - a) <= 1e-15 and abs(hi - b) <= 1e-15


# readout


def test_readout_examples():
    assert readout_invert(0.9, ReadoutModel(eta1=0.97, eta0=0.02, eta0_upper=0.05)) == pytest.approx(
        0.8947368421052632, abs=1e-15
    )
    assert readout_invert(0.04, ReadoutModel(eta1=0.97, eta0=0.02, eta0_upper=0.05)) == 0.0
    assert readout_invert(0.05, ReadoutModel(eta1=0.97, eta0=0.02, eta0_upper=0.05)) == 0.0


def test_readout_round_trip_grid():
    worst = 0.0
    for p in np.linspace(0, 1, 21):
        for e0 in np.linspace(0, 0.45, 10):
            for e1 in np.linspace(0.55, 1.0, 10):
                m = ReadoutModel(eta1=e1, eta0=e0)
                worst = max(worst, abs(readout_invert(m.observe(p), m, conservative=False) - p))
    assert worst <= 1e-12


@given(
    st.floats(0, 1),
    st.floats(0, 0.4),
    st.floats(0, 0.4),
    st.floats(0.6, 1),
    st.floats(0.6, 1),
)
def test_readout_monotone(p_obs, e0a, e0b, e1a, e1b):
    e0a, e0b = sorted((e0a, e0b))
    e1a, e1b = sorted((e1a, e1b))
    lo_e0 = ReadoutModel(eta1=1.0, eta0=0.0, eta0_upper=e0a, eta1_upper=e1a)
    hi_e0 = ReadoutModel(eta1=1.0, eta0=0.0, eta0_upper=e0b, eta1_upper=e1a)
    hi_e1 = ReadoutModel(eta1=1.0, eta0=0.0, eta0_upper=e0a, eta1_upper=e1b)
    base = readout_invert(p_obs, lo_e0)
    assert readout_invert(p_obs, hi_e0) <= base + 1e-15
    if p_obs > e0a:
        assert readout_invert(p_obs, hi_e1) <= base + 1e-15
    assert 0.0 <= base <= 1.0


def test_readout_model_validation():
    with pytest.raises(DegenerateCalibration):
        ReadoutModel(eta1=0.3, eta0=0.3)
    with pytest.raises(DegenerateCalibration):
        ReadoutModel(eta1=0.9, eta0=0.1, eta0_upper=0.6, eta1_upper=0.5)
    with pytest.raises(InvalidParameter):
        ReadoutModel(eta1=1.2, eta0=0.1)


def test_flip_threshold():
    t = symmetric_flip_threshold()
    assert t == pytest.approx(0.146447, abs=5e-7)
    assert t == pytest.approx(1 - COS2, abs=1e-15)
    assert ReadoutModel.symmetric_flip(0.1).observe(1.0) > COS2
    assert ReadoutModel.symmetric_flip(0.2).observe(1.0) < COS2


# verdicts


@pytest.mark.parametrize("method", ["hoeffding", "azuma", "clopper-pearson", "wilson"])
def test_pr_record_post_quantum(method):
    rec = simulate(make_chsh(), bh.pr_box(), 10**5, seed=1)
    rep = certify(rec, CHSH_VALUES, method=method, alpha=0.01)
    assert rep.verdict == "post-quantum"
    assert rep.effective_lower > COS2
    assert rep.s_lower == pytest.approx(8 * (rep.p_lower - 0.5))
    assert 0.0 <= rep.p_lower <= rep.p_hat <= 1.0
    d = rep.to_dict()
    assert d["thresholds"]["omega_Q"] == COS2
    if method == "azuma":
        assert rep.time_averaged
        assert d["bound_refers_to"].startswith("time-averaged")
    if method == "hoeffding":
        assert rep.epsilon == pytest.approx(hoeffding_epsilon(10**5, 0.01))


def test_local_record_no_verdict():
    g = make_chsh()
    rec = simulate(g, bh.local_zeros(g), 10**5, seed=2)
    assert certify(rec, CHSH_VALUES).verdict == "none"


def test_tsirelson_record_nonlocal():
    rec = simulate(make_chsh(), bh.tsirelson_chsh(), 10**5, seed=5)
    assert certify(rec, CHSH_VALUES, method="clopper-pearson").verdict == "nonlocal"


def test_non_exact_quantum_caps_verdict():
    rec = simulate(make_chsh(), bh.pr_box(), 10**4, seed=1)
    rep = certify(rec, GameValues(0.75, COS2, False, 1.0))
    assert rep.verdict == "nonlocal"
    assert rep.warnings


def test_ties_give_lower_verdict():
    rec = record(np.r_[np.ones(900), np.zeros(100)])
    p_lo = certify(rec, CHSH_VALUES).p_lower
    assert certify(rec, GameValues(p_lo, 0.99, True, 1.0)).verdict == "none"
    assert certify(rec, GameValues(0.5, p_lo, True, 1.0)).verdict == "nonlocal"


def test_readout_correction_in_certificate():
    rec = record(np.r_[np.ones(95_000), np.zeros(5_000)])
    model = ReadoutModel(eta1=0.97, eta0=0.02, eta0_upper=0.05)
    rep = certify(rec, CHSH_VALUES, model=model)
    assert rep.corrected_p_lower == pytest.approx((rep.p_lower - 0.05) / 0.95)
    assert rep.effective_lower == rep.corrected_p_lower
    assert rep.to_dict()["readout"]["conservative"] is True


def test_certify_non_chsh_has_no_s():
    g = make_chained(3)
    rec = simulate(g, bh.chained_quantum_behavior(3), 10**4, seed=1)
    rep = certify(rec, game_values(g))
    assert rep.s_lower is None


def test_certify_rejects():
    rec = record([1, 0, 1])
    with pytest.raises(InvalidParameter):
        certify(rec, CHSH_VALUES, method="bayes")
    with pytest.raises(InvalidParameter):
        certify(rec, CHSH_VALUES.scaled(2.0))
    with pytest.raises(InvalidParameter):
        certify(rec, CHSH_VALUES, alpha=0.0)
