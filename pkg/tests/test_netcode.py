import itertools

import pytest
from hypothesis import given, settings, strategies as st

from meshfwd import netcode
from meshfwd.netcode import CoefficientVector, Generation
from oracles import gf2_rank_numpy


def test_enumeration_is_ascending_nonzero():
    vs = netcode.enumerate_coefficients(3)
    assert [v.bits for v in vs] == list(range(1, 8))
    assert [str(v) for v in vs[:3]] == ["001", "010", "011"]
    with pytest.raises(ValueError):
        netcode.enumerate_coefficients(0)


def test_coefficient_bit_order():
    v = CoefficientVector.parse("100")
    assert v.selects(0) and not v.selects(1) and not v.selects(2)
    assert CoefficientVector.parse(str(CoefficientVector(5, 4))) == CoefficientVector(5, 4)
    with pytest.raises(ValueError):
        CoefficientVector(8, 3)


def test_encode_xors_selected_payloads():
    gen = Generation(0, (b"\x01", b"\x02", b"\x04"))
    coded = {str(p.coefficients): p.payload for p in netcode.encode(gen)}
    assert coded["100"] == b"\x01"
    assert coded["011"] == b"\x06"
    assert coded["111"] == b"\x07"


def test_rank_matches_matrix_elimination():
    for k in (1, 2, 3, 4):
        vecs = list(range(1, 1 << k))
        for r in range(1, len(vecs) + 1):
            for subset in itertools.islice(itertools.combinations(vecs, r), 200):
                assert netcode.gf2_rank(subset) == gf2_rank_numpy(list(subset), k)


def test_decode_rejects_rank_deficient_sets():
    gen = Generation(1, (b"ab", b"cd", b"ef"))
    coded = netcode.encode(gen)
    dependent = [p for p in coded if str(p.coefficients) in ("001", "010", "011")]
    assert not netcode.is_decodable([p.coefficients for p in dependent], 3)
    with pytest.raises(ValueError):
        netcode.decode(dependent, 3)


def _oracle_bounds(k):
    vecs = list(range(1, 1 << k))
    lo = min(r for r in range(1, len(vecs) + 1)
             if any(gf2_rank_numpy(list(s), k) == k for s in itertools.combinations(vecs, r)))
    hi = min(r for r in range(1, len(vecs) + 1)
             if all(gf2_rank_numpy(list(s), k) == k for s in itertools.combinations(vecs, r)))
    return lo, hi


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_decode_bounds_match_exhaustive_search(k):
    assert netcode.decode_bounds(k) == _oracle_bounds(k)


def test_decode_bounds_larger_generations():
    # any hyperplane holds 2^(k-1) - 1 nonzero vectors, one more always spans
    for k in (5, 6, 8):
        assert netcode.decode_bounds(k) == (k, 1 << (k - 1))


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 3), st.integers(1, 6), st.data())
def test_round_trip_every_full_rank_subset(k, size, data):
    payloads = tuple(data.draw(st.binary(min_size=size, max_size=size)) for _ in range(k))
    gen = Generation(data.draw(st.integers(0, 1000)), payloads)
    coded = netcode.encode(gen)
    for r in range(k, len(coded) + 1):
        for subset in itertools.combinations(coded, r):
            if netcode.is_decodable([p.coefficients for p in subset], k):
                assert netcode.decode(list(subset), k) == list(payloads)
