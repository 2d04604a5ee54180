"""Demand profiles, gravity trip distribution, and demand file round-trips."""

import math

import pytest

from aevplan.demandgen import (
    DemandEntry,
    DemandSet,
    flat_profile,
    gravity_demands,
    load_demands,
    peaked_profile,
    save_demands,
)
from aevplan.errors import InputError, ParseError
from aevplan.netcore import Arc, Network, Node


def triangle(w=(1.0, 1.0, 1.0)):
    return Network(
        nodes=(
            Node(0, gravity_weight=w[0]),
            Node(1, gravity_weight=w[1]),
            Node(2, gravity_weight=w[2]),
        ),
        arcs=(
            Arc(0, 1, 100.0), Arc(1, 0, 100.0),
            Arc(1, 2, 100.0), Arc(2, 1, 100.0),
            Arc(0, 2, 200.0), Arc(2, 0, 200.0),
        ),
        names=("A", "B", "C"),
    )


class TestProfiles:
    def test_flat_profile(self):
        p = flat_profile(24)
        assert len(p) == 24
        assert sum(p) == pytest.approx(1.0, abs=1e-12)
        assert len(set(p)) == 1

    def test_peaked_profile_shape(self):
        p = peaked_profile(24, peak_hour=8, peak_share=0.15)
        assert p[8] == 0.15
        assert sum(p) == pytest.approx(1.0, abs=1e-12)
        off = (1.0 - 0.15) / 23
        assert all(v == off for i, v in enumerate(p) if i != 8)

    def test_peaked_profile_validation(self):
        with pytest.raises(InputError):
            peaked_profile(24, peak_hour=24, peak_share=0.15)
        with pytest.raises(InputError):
            peaked_profile(24, peak_hour=8, peak_share=1.0)
        with pytest.raises(InputError):
            # 2% "peak" would be below the uniform share
            peaked_profile(24, peak_hour=8, peak_share=0.02)


class TestGravity:
    def test_split_follows_weights_over_distance(self):
        net = triangle()
        dem = gravity_demands(net, 600.0, flat_profile(6), beta=2.0)
        by_pair = {(e.origin, e.destination): e.total for e in dem.entries}
        assert len(by_pair) == 6
        # A-B and B-C legs are 100 km, A-C is 200 km: 1/100^2 vs 1/200^2
        assert by_pair[(0, 1)] == pytest.approx(4 * by_pair[(0, 2)], rel=1e-9)
        assert by_pair[(0, 1)] == by_pair[(1, 0)]
        assert sum(by_pair.values()) == pytest.approx(600.0, rel=1e-9)

    def test_beta_zero_ignores_distance(self):
        dem = gravity_demands(triangle(), 600.0, flat_profile(4), beta=0.0)
        totals = {e.total for e in dem.entries}
        assert len(totals) == 1  # all pairs equal

    def test_zero_weight_node_gets_no_trips(self):
        dem = gravity_demands(triangle(w=(1.0, 1.0, 0.0)), 100.0, flat_profile(4))
        pairs = {(e.origin, e.destination) for e in dem.entries}
        assert pairs == {(0, 1), (1, 0)}

    def test_disconnected_pair_is_skipped_and_reported(self):
        net = Network(
            nodes=(Node(0), Node(1), Node(2)),
            arcs=(Arc(0, 1, 50.0), Arc(1, 0, 50.0), Arc(2, 0, 50.0)),
            names=("A", "B", "C"),
        )
        # C is reachable from nobody; A,B cannot reach C.
        dem = gravity_demands(net, 100.0, flat_profile(4))
        assert (0, 2) in dem.skipped_pairs and (1, 2) in dem.skipped_pairs
        assert all(e.destination != 2 for e in dem.entries)
        # trips from C still exist (C->A direct, C->B via A)
        assert {(e.origin, e.destination) for e in dem.entries} >= {(2, 0), (2, 1)}

    def test_validation(self):
        net = triangle()
        with pytest.raises(InputError):
            gravity_demands(net, 0.0, flat_profile(4))
        with pytest.raises(InputError):
            gravity_demands(net, 10.0, flat_profile(4), beta=-1.0)
        with pytest.raises(InputError):
            gravity_demands(net, 10.0, (0.5, 0.4))  # doesn't sum to 1
        with pytest.raises(InputError):
            gravity_demands(net, 10.0, (1.5, -0.5))
        with pytest.raises(InputError):
            gravity_demands(triangle(w=(0.0, 0.0, 0.0)), 10.0, flat_profile(4))


class TestContainers:
    def test_entry_validation(self):
        with pytest.raises(InputError):
            DemandEntry(0, 0, (1.0,))
        with pytest.raises(InputError):
            DemandEntry(0, 1, (1.0, -2.0))

    def test_set_validation(self):
        good = DemandEntry(0, 1, (1.0, 2.0))
        with pytest.raises(InputError):
            DemandSet(horizon_hours=0, entries=())
        with pytest.raises(InputError):
            DemandSet(horizon_hours=3, entries=(good,))  # wrong volume count
        with pytest.raises(InputError):
            DemandSet(horizon_hours=2, entries=(good, good))  # duplicate pair

    def test_aggregates(self):
        dem = DemandSet(
            horizon_hours=3,
            entries=(
                DemandEntry(0, 1, (1.0, 0.0, 2.0)),
                DemandEntry(1, 0, (0.0, 4.0, 1.0)),
            ),
        )
        assert dem.total_trips == 8.0
        assert dem.peak_hour_trips() == 4.0
        assert dem.entries[0].peak_rate == 2.0


class TestDemandFile:
    def test_roundtrip_with_names(self, tmp_path):
        net = triangle()
        dem = gravity_demands(net, 120.0, flat_profile(6))
        f = tmp_path / "case.dem"
        save_demands(dem, f, net)
        back = load_demands(f, net)
        assert back.horizon_hours == dem.horizon_hours
        got = {(e.origin, e.destination): e.volumes for e in back.entries}
        for e in dem.entries:
            assert got[(e.origin, e.destination)] == pytest.approx(e.volumes)

    def test_roundtrip_without_network_uses_ids(self, tmp_path):
        dem = DemandSet(horizon_hours=2, entries=(DemandEntry(0, 1, (1.5, 0.0)),))
        f = tmp_path / "ids.dem"
        save_demands(dem, f)
        back = load_demands(f)
        assert back.entries[0].origin == 0
        assert back.entries[0].volumes == (1.5, 0.0)

    @pytest.mark.parametrize(
        "text,line",
        [
            ("A B 1,1\n", 1),                      # rows before horizon
            ("horizon 2\nhorizon 2\n", 2),         # duplicate horizon
            ("horizon x\n", 1),                    # bad horizon
            ("horizon 2\nA B 1\n", 2),             # wrong volume count
            ("horizon 2\nA B 1,q\n", 2),           # bad volume
            ("horizon 2\nA Z 1,1\n", 2),           # unknown node name
        ],
    )
    def test_parse_errors_carry_line_numbers(self, tmp_path, text, line):
        f = tmp_path / "bad.dem"
        f.write_text(text)
        with pytest.raises(ParseError) as err:
            load_demands(f, triangle())
        assert err.value.line == line

    def test_integer_ids_required_without_network(self, tmp_path):
        f = tmp_path / "named.dem"
        f.write_text("horizon 2\nA B 1,1\n")
        with pytest.raises(ParseError):
            load_demands(f)
