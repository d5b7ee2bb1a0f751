import json
import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.stats import entropy

from bellbattery.errors import InvalidParameter, MissingParameter
from bellbattery.ledger import VARIANTS, binary_entropy, cycle_report

GRID = [i / 100 for i in range(101)]


def _h2_oracle(p):
    return float(entropy([p, 1 - p], base=2))


def test_binary_entropy_examples():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0


@pytest.mark.parametrize("p", GRID)
def test_binary_entropy_matches_oracle(p):
    assert binary_entropy(p) == pytest.approx(_h2_oracle(p), abs=1e-14)


@given(st.floats(0.0, 1.0))
def test_binary_entropy_symmetric(p):
    # below ~1e-16 the argument 1 - p itself rounds, so the pair is not symmetric
    assume(1.0 - (1.0 - p) == p)
    assert abs(binary_entropy(p) - binary_entropy(1.0 - p)) <= 1e-15
    assert 0.0 <= binary_entropy(p) <= 1.0


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_binary_entropy_rejects(p):
    with pytest.raises(InvalidParameter):
        binary_entropy(p)


def test_cycle_examples():
    assert cycle_report(1.0, variant="measured-memory").net_work_upper == 0.0
    r = cycle_report(0.853553, kT_ln2=1.0, variant="measured-memory")
    assert r.net_work_upper == pytest.approx(-_h2_oracle(0.853553), abs=1e-15)
    for p in (0.0, 0.3, 0.853553, 1.0):
        r = cycle_report(p, delta=2.0, variant="reversible")
        assert r.reset_cost == 0.0
        assert r.net_work_upper == 0.0


def _full(p, kT=1.0, extra=0.5):
    return cycle_report(p, kT_ln2=kT, variant="full-transcript", transcript_entropy=binary_entropy(p) + extra)


@pytest.mark.parametrize("p", GRID)
def test_grid_nonpositive_all_variants(p):
    reports = [cycle_report(p, delta=1.3, kT_ln2=0.7, variant=v) for v in ("reversible", "measured-memory")]
    reports.append(_full(p, kT=0.7))
    for r in reports:
        assert r.net_work_upper <= 0.0
        assert r.fuel_cost == r.battery_gain
        assert r.battery_gain - r.fuel_cost <= 1e-12
        assert r.net_work_upper == r.battery_gain - r.fuel_cost - r.reset_cost
    mm = reports[1]
    assert reports[2].reset_cost >= mm.reset_cost
    assert mm.net_work_upper == pytest.approx(-0.7 * binary_entropy(p), abs=1e-15)


def test_full_transcript_needs_entropy():
    with pytest.raises(MissingParameter):
        cycle_report(0.8, variant="full-transcript")
    with pytest.raises(InvalidParameter):
        cycle_report(0.8, variant="full-transcript", transcript_entropy=0.1)
    r = cycle_report(0.8, variant="full-transcript", transcript_entropy=3.0)
    assert r.reset_cost == 3.0


@given(st.floats(0.0, 1.0), st.floats(0.0, 10.0))
def test_full_transcript_dominates_measured(p, extra):
    assert _full(p, extra=extra).reset_cost >= cycle_report(p).reset_cost


@pytest.mark.parametrize(
    "kwargs",
    [dict(delta=0.0), dict(delta=-1.0), dict(kT_ln2=-0.1), dict(variant="erase-later")],
)
def test_cycle_rejects(kwargs):
    with pytest.raises(InvalidParameter):
        cycle_report(0.5, **kwargs)


def test_report_json_units():
    r = cycle_report(0.75, delta=2.0, kT_ln2=0.5, variant="measured-memory")
    d = json.loads(json.dumps(r.to_dict()))
    assert d["absolute"]["battery_gain"] == 1.5
    assert d["delta_units"]["battery_gain"] == 0.75
    assert d["delta_units"]["battery_minus_fuel"] == 0.0
    assert d["kT_ln2_units"]["reset_cost"] == pytest.approx(binary_entropy(0.75))
    assert d["fuel_cost_is_lower_bound"] is True
    assert any("side-information" in n for n in d["notes"])
    zero = cycle_report(0.75, kT_ln2=0.0).to_dict()
    assert zero["kT_ln2_units"]["reset_cost"] is None
    assert set(VARIANTS) == {"reversible", "measured-memory", "full-transcript"}
    assert not math.isnan(d["absolute"]["net_work_upper"])
