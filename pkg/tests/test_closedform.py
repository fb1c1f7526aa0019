import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meshfwd import closedform
from meshfwd.channel import ChannelParams, NodePosition
from meshfwd.closedform import ConditionalErrorTable
from oracles import accumulation_mc, three_link_mc


def test_uniform_table_reduces_to_simple_forms():
    e = 0.3
    res = closedform.sinr_three_path(ConditionalErrorTable.uniform(e))
    assert res["SP"].delay == pytest.approx(1 / (1 - e))
    assert res["MC"].delay == pytest.approx(1 / (1 - e**3))
    assert res["SP"].delay_ratio_to_sp == 1.0
    mp = res["MP"]
    assert mp.packets == 3
    assert mp.extras["per_packet_delay"] == pytest.approx(mp.delay / 3)
    assert mp.throughput == pytest.approx(3 / mp.delay)


def test_lossless_links():
    res = closedform.sinr_three_path(ConditionalErrorTable.uniform(0.0))
    assert res["MP"].throughput == pytest.approx(3.0)
    assert res["NC"].throughput == pytest.approx(2.0)
    assert all(r.delay == pytest.approx(1.0) for r in res.values())


def test_incomplete_table_reports_missing_entries():
    table = ConditionalErrorTable({(1, frozenset({1})): 0.1})
    with pytest.raises(KeyError, match="incomplete"):
        closedform.sinr_three_path(table)
    with pytest.raises(ValueError):
        ConditionalErrorTable({(1, frozenset({2})): 0.1})


def test_dead_link_set_is_unreachable_not_an_error():
    res = closedform.sinr_three_path(ConditionalErrorTable.uniform(1.0))
    assert not res["MC"].reachable
    assert res["MC"].throughput == 0.0
    assert math.isinf(res["NC"].delay)


def _interference_table(seed):
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.05, 0.5, size=3)
    extra = rng.uniform(0.0, 0.3, size=(3, 3))

    def fn(i, active):
        e = base[i - 1] + sum(extra[i - 1, j - 1] for j in active if j != i)
        return min(e, 0.95)
    return fn


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_three_link_sinr_system_against_monte_carlo(seed):
    fn = _interference_table(seed)
    table = ConditionalErrorTable.from_function(fn)
    res = closedform.sinr_three_path(table)
    rng = np.random.default_rng(100 + seed)
    for scheme in ("SP", "MC", "NC", "MP"):
        mean, se = three_link_mc(fn, scheme, 1_000_000, rng)
        assert abs(mean - res[scheme].delay) <= 4 * se, scheme


def test_table_from_channel_geometry():
    ch = ChannelParams(gamma=1.0, eta=1e-3)
    pos = {0: NodePosition(0, 10), 1: NodePosition(20, 10), 2: NodePosition(0, 0), 3: NodePosition(20, 0),
           4: NodePosition(0, -10), 5: NodePosition(20, -10)}
    table = ConditionalErrorTable.from_channel({1: (0, 1), 2: (2, 3), 3: (4, 5)}, ch, pos)
    assert not table.missing()
    assert table[2, {2}] < table[2, {1, 2}] < table[2, {1, 2, 3}]


def test_hop_by_hop_three_paths():
    res = closedform.hopbyhop_three(0.2)
    assert res["NC"].delay_ratio_to_sp == pytest.approx(0.8845, abs=5e-5)
    assert res["NC"].throughput_ratio_to_sp == pytest.approx(2.261, abs=5e-4)
    assert res["MP"].throughput_ratio_to_sp == pytest.approx(3.0)


@pytest.mark.parametrize("e", [0.2, 0.4, 0.7])
def test_hop_by_hop_against_monte_carlo(e):
    rng = np.random.default_rng(int(e * 100))
    three = closedform.hopbyhop_three(e)
    mean, se = accumulation_mc(2, 3, e, 400_000, rng)
    assert abs(mean - three["NC"].delay) <= 4 * se
    seven = closedform.hopbyhop_seven(e)
    for label, needed in (("NC-L", 3), ("NC-U", 4)):
        mean, se = accumulation_mc(needed, 7, e, 400_000, rng)
        assert abs(mean - seven[label].delay) <= 4 * se


def test_accumulation_recursion_base_cases():
    assert closedform.accumulation_delay(0, 7, 0.3) == 0.0
    assert closedform.accumulation_delay(1, 1, 0.25) == pytest.approx(1 / 0.75)
    assert math.isinf(closedform.accumulation_delay(2, 3, 1.0))


def test_hetero_against_monte_carlo():
    errs = (0.3, 0.4, 0.5)
    res = closedform.hetero_three(*errs)
    mean, se = accumulation_mc(2, 3, np.array(errs), 400_000, np.random.default_rng(3))
    assert abs(mean - res["NC"].delay) <= 4 * se
    singles = [1 / (1 - e) for e in errs]
    assert res["MP"].delay == pytest.approx(sum(singles) / 3)
    assert res["SP"].delay == pytest.approx(min(singles))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 0.99))
def test_hetero_equal_errors_matches_three_path(e):
    a = closedform.hetero_three(e, e, e)
    b = closedform.hopbyhop_three(e)
    for s in ("SP", "MP", "MC", "NC"):
        assert a[s].delay == pytest.approx(b[s].delay, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 0.98), st.floats(0.0, 0.98))
def test_nc_delay_monotone_in_error(e1, e2):
    lo, hi = sorted((e1, e2))
    assert closedform.hopbyhop_three(lo)["NC"].delay <= closedform.hopbyhop_three(hi)["NC"].delay + 1e-12
    assert closedform.hopbyhop_seven(lo)["NC-U"].delay <= closedform.hopbyhop_seven(hi)["NC-U"].delay + 1e-12


def test_invalid_probability_rejected():
    with pytest.raises(ValueError):
        closedform.hopbyhop_three(1.2)
    with pytest.raises(ValueError):
        closedform.hetero_three(0.1, -0.1, 0.2)


def test_extend_hops_scales_delay_keeps_ratios():
    one = closedform.hopbyhop_three(0.2)
    four = {k: closedform.extend_hops(v, 4) for k, v in one.items()}
    assert four["SP"].delay == pytest.approx(4 * one["SP"].delay)
    assert four["NC"].throughput == pytest.approx(one["NC"].throughput / 4)
    assert four["NC"].delay_ratio_to_sp == one["NC"].delay_ratio_to_sp
    with pytest.raises(ValueError):
        closedform.extend_hops(one["SP"], 0)
