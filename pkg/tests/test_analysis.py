import csv
import io
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellbattery import behaviors as bh
from bellbattery.analysis import (
    CHAINED_COLUMNS,
    NOISE_COLUMNS,
    NOISE_THRESHOLD,
    chsh_contents,
    content_bound,
    monogamy_check,
    noisy_pr,
    rows_to_csv,
    sweep_chained,
    sweep_noise,
)
from bellbattery.errors import InconsistentMarginal, InvalidParameter
from bellbattery.games import make_chsh
from bellbattery.transducer import exact_work_mean

SQ2 = math.sqrt(2)
COS2 = math.cos(math.pi / 8) ** 2


def random_local_tripartite(rng, terms=5):
    t = np.zeros((2,) * 6)
    weights = rng.dirichlet(np.ones(terms))
    for w in weights:
        fa, fb, fc = rng.integers(0, 2, size=(3, 2))
        for x, y, z in itertools.product((0, 1), repeat=3):
            t[x, y, z, fa[x], fb[y], fc[z]] += w
    return bh.TripartiteBehavior(t)


def test_content_examples():
    assert content_bound(0.75, 0.75, 1.0).q_lower == 0.0
    assert content_bound(1.0, COS2, 1.0).q_lower == pytest.approx(1.0, abs=1e-15)
    assert content_bound(0.875, 0.75, 1.0).q_lower == 0.5
    assert content_bound(0.5, 0.75, 1.0).q_lower == 0.0
    assert content_bound(1.75, 0.75, 1.0, delta=2.0).q_lower == 0.5


def test_content_rejects():
    with pytest.raises(InvalidParameter):
        content_bound(0.8, 0.9, 0.9)
    with pytest.raises(InvalidParameter):
        content_bound(1.2, 0.5, 0.9)
    with pytest.raises(InvalidParameter):
        content_bound(0.8, 0.5, 0.9, delta=0.0)


def test_chsh_contents():
    assert chsh_contents(2.0)["q_NL_lower"] == 0.0
    assert chsh_contents(4.0)["q_NL_lower"] == 1.0
    assert chsh_contents(4.0)["q_postQ_lower"] == 1.0
    assert chsh_contents(2 * SQ2)["q_postQ_lower"] == 0.0
    c = chsh_contents(3.5)
    assert c["q_NL_lower"] == 0.75
    assert c["q_postQ_lower"] == pytest.approx((3.5 - 2 * SQ2) / (4 - 2 * SQ2), abs=1e-15)
    assert c["q_postQ_lower"] == pytest.approx(0.573223304703363, abs=1e-12)
    for bad in (4.0001, -4.5):
        with pytest.raises(InvalidParameter):
            chsh_contents(bad)


def test_chsh_contents_agrees_with_content_bound():
    for S in np.linspace(-4, 4, 81):
        p = 0.5 + S / 8
        c = chsh_contents(float(S))
        assert c["q_NL_lower"] == pytest.approx(content_bound(p, 0.75, 1.0).q_lower, abs=1e-12)
        assert c["q_postQ_lower"] == pytest.approx(content_bound(p, COS2, 1.0).q_lower, abs=1e-12)


@pytest.mark.parametrize("q", [i / 20 for i in range(21)])
def test_content_soundness_on_mixtures(q):
    game = make_chsh()
    for a0, a1, b0, b1 in itertools.product((0, 1), repeat=4):
        local = bh.deterministic_local({0: a0, 1: a1}, {0: b0, 1: b1})
        box = bh.mix([local, bh.pr_box()], [1 - q, q])
        c = chsh_contents(bh.chsh_value(box))
        assert c["q_NL_lower"] <= q + 1e-12
        assert bh.success_probability(game, box) <= 0.75 + 0.25 * q + 1e-12


# monogamy


def test_monogamy_examples():
    pr_c = bh.TripartiteBehavior.product(bh.pr_box(), np.full((2, 2), 0.5))
    r = monogamy_check(pr_c, delta=2.0)
    assert (r.s_ab, r.s_ac) == pytest.approx((4.0, 0.0), abs=1e-12)
    assert r.sum_w == pytest.approx(3.0, abs=1e-12)
    assert r.bound == 3.0 and r.satisfied

    r = monogamy_check(bh.TripartiteBehavior.uniform())
    assert r.sum_w == pytest.approx(1.0, abs=1e-15)

    ts = bh.TripartiteBehavior.product(bh.tsirelson_chsh(), np.full((2, 2), 0.5))
    r = monogamy_check(ts)
    assert r.sum_w == pytest.approx(1 + 2 * SQ2 / 8, abs=1e-12)
    assert r.sum_w == pytest.approx(1.3535533905932737, abs=1e-12)
    assert r.satisfied


def test_monogamy_identity_matches_work():
    chsh = make_chsh()
    rng = np.random.default_rng(3)
    cases = [bh.TripartiteBehavior.product(bh.pr_box(), np.full((2, 2), 0.5))]
    cases += [random_local_tripartite(rng) for _ in range(10)]
    for t in cases:
        r = monogamy_check(t, delta=1.5)
        assert r.w_ab == pytest.approx(exact_work_mean(chsh, bh.marginalize(t, "AB"), delta=1.5), abs=1e-12)
        assert r.w_ac == pytest.approx(exact_work_mean(chsh, bh.marginalize(t, "AC"), delta=1.5), abs=1e-12)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_monogamy_holds_for_local_tripartite(seed):
    t = random_local_tripartite(np.random.default_rng(seed))
    assert monogamy_check(t).satisfied


def test_monogamy_flip_option():
    pr_c = bh.TripartiteBehavior.product(bh.pr_box(), np.full((2, 2), 0.5))
    r = monogamy_check(pr_c, flip_ab=True)
    assert r.flip_ab and r.s_ab == pytest.approx(2.0, abs=1e-12)
    # the flipped expression is not a Bell expression: a constant local box reaches 4
    t = np.zeros((2,) * 6)
    t[..., 0, 0, 0] = 1.0
    r = monogamy_check(bh.TripartiteBehavior(t), flip_ab=True, flip_ac=True)
    assert r.s_ab == r.s_ac == 4.0
    assert not r.satisfied


def test_signalling_tripartite_rejected():
    t = np.zeros((2,) * 6)
    for x, y, z in itertools.product((0, 1), repeat=3):
        t[x, y, z, z, 0, 0] = 1.0  # Alice's output reveals z
    with pytest.raises(InvalidParameter):
        bh.TripartiteBehavior(t)


def test_marginal_consistency_error():
    t = bh.TripartiteBehavior.uniform()
    bad = t.table.copy()
    # setting dependence of the AB marginal on z, below construction tolerance
    bad[:, :, 1, 0, 0, :] += 5e-11
    bad[:, :, 1, 1, 1, :] -= 5e-11
    bt = object.__new__(bh.TripartiteBehavior)
    object.__setattr__(bt, "table", bad)
    with pytest.raises(InconsistentMarginal):
        bh.marginalize(bt, "AB", tol=1e-12)


# sweeps


def test_noise_sweep():
    grid = [i / 20 for i in range(21)]
    rows = sweep_noise(grid)
    assert len(rows) == 21
    assert (rows[0]["S"], rows[0]["work_over_delta"], rows[0]["above_quantum"]) == (4.0, 1.0, True)
    last = rows[-1]
    assert (last["S"], last["work_over_delta"], last["above_quantum"]) == pytest.approx((2.0, 0.75, False))
    flags = [r["above_quantum"] for r in rows]
    assert flags == [e < 0.58 for e in grid]
    assert rows[11]["above_quantum"] and not rows[12]["above_quantum"]
    game = make_chsh()
    for r in rows:
        assert r["work_over_delta"] == pytest.approx(0.5 + r["S"] / 8, abs=1e-12)
        assert r["work_over_delta"] == pytest.approx(1 - r["eps"] / 4, abs=1e-12)
        assert r["work_over_delta"] == pytest.approx(exact_work_mean(game, noisy_pr(r["eps"])), abs=1e-12)


def test_noise_threshold_strict():
    rows = sweep_noise([NOISE_THRESHOLD - 1e-9, NOISE_THRESHOLD, NOISE_THRESHOLD + 1e-9])
    assert [r["above_quantum"] for r in rows] == [True, False, False]
    assert rows[0]["S"] > 2 * SQ2 > rows[2]["S"]


def test_chained_sweep():
    rows = sweep_chained(range(2, 11))
    assert rows[0]["gap"] == pytest.approx(0.146447, abs=5e-7)
    assert rows[-1]["gap"] == pytest.approx(math.sin(math.pi / 40) ** 2, abs=1e-15)
    gaps = [r["gap"] for r in rows]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    for r in rows:
        assert r["omega_L"] == pytest.approx(1 - 1 / (2 * r["N"]), abs=2**-52)
        assert 1 - r["omega_Q"] == pytest.approx(r["gap"], abs=1e-12)
        if r["N"] >= 8:
            assert abs(r["gap"] / r["leading_term"] - 1) < 0.1


def test_csv_output():
    text = rows_to_csv(sweep_noise([0.0, NOISE_THRESHOLD, 1.0]), NOISE_COLUMNS)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["eps", "S", "work_over_delta", "above_quantum"]
    assert rows[2][0] == "0.585786437627"
    assert [r[3] for r in rows[1:]] == ["true", "false", "false"]
    text = rows_to_csv(sweep_chained([2, 3]), CHAINED_COLUMNS)
    assert text.splitlines()[0] == "N,omega_L,omega_Q,gap,leading_term"
    assert text.splitlines()[1].startswith("2,0.75,0.853553390593,")


def test_noisy_pr_rejects():
    with pytest.raises(InvalidParameter):
        noisy_pr(1.5)
