import math

import pytest
from hypothesis import given, strategies as st

from dmtu.model import (
    LinkSpec,
    Packet,
    PathTopology,
    PdrCounts,
    TimingParams,
    ValidationError,
    check_fragment_set,
    fragment,
    split_sizes,
    validate_topology,
)


def test_packet_rejects_empty_and_non_integer_sizes():
    with pytest.raises(ValidationError):
        Packet(0)
    with pytest.raises(ValidationError):
        Packet(True)
    with pytest.raises(ValidationError):
        Packet(12.0)
    with pytest.raises(ValidationError):
        Packet(10, frag_id=-1)


def test_fragment_set_rules():
    good = fragment(Packet(3000, frag_id=4), 1400)
    check_fragment_set(good)
    assert [f.mf for f in good] == [True, True, False]
    assert {f.frag_id for f in good} == {4}

    with pytest.raises(ValidationError):
        check_fragment_set([])
    with pytest.raises(ValidationError):
        check_fragment_set([Packet(10, mf=True)])
    with pytest.raises(ValidationError):
        check_fragment_set([Packet(10), Packet(10)])
    with pytest.raises(ValidationError):
        check_fragment_set([Packet(10, frag_id=1, mf=True), Packet(10, frag_id=2)])


def test_split_sizes():
    assert split_sizes(1800, 1400) == [1400, 400]
    assert split_sizes(2801, 1400) == [1400, 1400, 1]
    assert split_sizes(1400, 1400) == [1400]
    with pytest.raises(ValidationError):
        split_sizes(10, 0)


def test_refragmenting_a_middle_fragment_keeps_mf():
    middle = Packet(1400, mf=True, frag_id=2)
    pieces = fragment(middle, 1000)
    assert all(p.mf for p in pieces)


@given(st.integers(1, 100_000), st.integers(1, 9216))
def test_fragments_partition_the_payload(total, limit):
    pieces = fragment(Packet(total, frag_id=9), limit)
    check_fragment_set(pieces)
    assert sum(p.size_octets for p in pieces) == total
    assert all(p.size_octets <= limit for p in pieces)
    assert len(pieces) == math.ceil(total / limit)


def test_validate_topology_examples():
    t = validate_topology(PathTopology([LinkSpec(1500, 9216)]))
    assert t.n == 0
    t = PathTopology([LinkSpec(1500, 9216), LinkSpec(1400, 9216), LinkSpec(1300, 9216)])
    assert validate_topology(t).n == 2
    with pytest.raises(ValidationError):
        PathTopology([LinkSpec(9300, 9216)])
    with pytest.raises(ValidationError):
        PathTopology([])
    with pytest.raises(ValidationError):
        LinkSpec(0)


def test_link_indexing_is_one_based():
    t = PathTopology.from_mtus([1500, 1400, 1300])
    assert t.link(1).current_mtu == 1500
    assert t.next_link(1).current_mtu == 1400
    assert t.next_link(2).current_mtu == 1300
    assert t.first_hop_mtu == 1500
    assert t.bottleneck_mtu == 1300
    with pytest.raises(IndexError):
        t.link(0)
    with pytest.raises(IndexError):
        t.next_link(3)
    assert PathTopology.from_mtus([1500]).bottleneck_mtu == math.inf


def test_timing_defaults():
    p = TimingParams()
    assert (p.t_d, p.t_d_icmp, p.t_f, p.t_o, p.dt_d) == (0.1, 0.085, 1e-4, 1e-3, 0.01)
    assert p.timeout_for(5) == pytest.approx(1.2)
    assert TimingParams(retransmit_timeout=3.0).timeout_for(5) == 3.0


@pytest.mark.parametrize("kw", [
    {"t_d_icmp": 0.2},                    # icmp slower than data
    {"dt_d": 0.03},                       # above epsilon
    {"t_o": 0.09},                        # overhead beats icmp + t_f
    {"t_d": -1.0},
    {"t_f": math.nan},
    {"epsilon": 0.0, "dt_d": 0.0},
    {"retransmit_timeout": 0.0},
])
def test_timing_rejects_bad_constants(kw):
    with pytest.raises(ValidationError):
        TimingParams(**kw)


finite = st.floats(0, 1, allow_nan=False)


@given(finite, finite, finite, finite, finite, st.floats(1e-6, 1))
def test_timing_params_hold_their_inequalities_or_fail(t_d, icmp, t_f, t_o, dt_d, eps):
    try:
        p = TimingParams(t_d, icmp, t_f, t_o, dt_d, eps)
    except ValidationError:
        return
    assert p.t_d_icmp <= p.t_d
    assert p.dt_d < p.epsilon
    assert p.t_d_icmp + p.t_f > p.t_o


def test_pdr_counts():
    PdrCounts(100, 5, 10)
    for bad in [(0, 0, 0), (10, 6, 5), (10, -1, 0)]:
        with pytest.raises(ValidationError):
            PdrCounts(*bad)
