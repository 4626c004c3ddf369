"""Tests for bond configurations and connection events."""

import pytest

from lace_perc.events import (
    BondConfig,
    LevelStack,
    bridges,
    cluster,
    cluster_without_bond,
    connected_through,
    double_connected,
    doubly_connected_set,
    e_prime_holds,
    e_prime_targets,
    has_long_path,
    is_connected,
    is_pivotal,
)
from lace_perc.graphs import build_graph

Q1 = build_graph("q1")
Q2 = build_graph("q2")
Q3 = build_graph("q3")

# Q2 bonds in dense order: 0:(0,1) 1:(0,2) 2:(1,3) 3:(2,3)
ANTIPODE = 3


def q2_configs():
    return [BondConfig(Q2, mask) for mask in range(16)]


class TestBondConfig:
    """Tests for the bitset container."""

    def test_from_bonds(self):
        config = BondConfig.from_bonds(Q2, [0, 2])
        assert config.is_occupied(0) and config.is_occupied(2)
        assert not config.is_occupied(1)
        assert config.occupied_count == 2

    def test_with_bond_is_pure(self):
        config = BondConfig(Q2, 0)
        on = config.with_bond(3, True)
        assert on.is_occupied(3)
        assert not config.is_occupied(3)
        assert on.with_bond(3, False) == config

    def test_oversized_bitset_rejected(self):
        with pytest.raises(ValueError):
            BondConfig(Q1, 0b10)

    def test_full(self):
        assert BondConfig.full(Q3).occupied_count == 12


class TestConnectivity:
    """Tests for clusters and C̃^b(x)."""

    def test_empty_config_self_connected(self):
        assert is_connected(BondConfig(Q2, 0), 2, 2)

    def test_q1_removing_only_bond(self):
        assert cluster_without_bond(BondConfig.full(Q1), 0, 0) == {0}

    def test_q2_cycle_redundancy(self):
        full = BondConfig.full(Q2)
        for b in range(4):
            assert cluster_without_bond(full, b, 0) == {0, 1, 2, 3}

    def test_cluster_respects_removed_mask(self):
        full = BondConfig.full(Q2)
        assert cluster(full, 0, removed=0b0011) == {0}

    def test_bridges_of_path(self):
        config = BondConfig.from_bonds(Q2, [0, 2])
        assert sorted(bridges(config, 0)) == [(0, 1, 0), (1, 3, 2)]

    def test_cycle_has_no_bridges(self):
        assert bridges(BondConfig.full(Q2), 0) == []


class TestDoubleConnection:
    """Tests for x ⇔ y."""

    def test_reflexive(self):
        for config in q2_configs():
            assert double_connected(config, 1, 1)

    def test_full_cycle(self):
        assert double_connected(BondConfig.full(Q2), 0, 1)
        assert doubly_connected_set(BondConfig.full(Q2), 0) == {0, 1, 2, 3}

    def test_needs_every_bond_on_q2(self):
        for config in q2_configs():
            expected = config.occupied == 0b1111
            assert double_connected(config, 0, ANTIPODE) == expected

    def test_tree_component_is_single(self):
        config = BondConfig.from_bonds(Q3, [0, 1, 2])
        assert doubly_connected_set(config, 0) == {0}


class TestConnectedThrough:
    """Tests for connection through a vertex set."""

    def test_coincident_endpoints_convention(self):
        config = BondConfig(Q2, 0)
        assert connected_through(config, 1, 1, {1})
        assert not connected_through(config, 1, 1, {0})

    def test_q1_endpoint_in_set(self):
        assert connected_through(BondConfig.full(Q1), 1, 0, {0})

    def test_not_connected(self):
        assert not connected_through(BondConfig(Q1, 0), 1, 0, {0, 1})

    def test_cycle_avoids_interior_vertex(self):
        full = BondConfig.full(Q2)
        assert not connected_through(full, 0, ANTIPODE, {1})
        assert connected_through(full, 0, ANTIPODE, {1, 2})


class TestPivotal:
    """Tests for directed pivotal bonds."""

    def test_single_bond(self):
        assert is_pivotal(BondConfig.full(Q1), (0, 1), 0, 1)

    def test_cycle_has_no_pivotal(self):
        full = BondConfig.full(Q2)
        for u, v in Q2.directed_bonds():
            assert not is_pivotal(full, (u, v), 0, ANTIPODE)

    def test_one_arc(self):
        config = BondConfig.from_bonds(Q2, [0, 2])
        assert is_pivotal(config, (0, 1), 0, ANTIPODE)
        assert not is_pivotal(config, (1, 0), 0, ANTIPODE)

    def test_vacant_bond_can_be_pivotal(self):
        # 0-1 vacant, 1-3 occupied: occupying (0,1) connects 0 to 3
        config = BondConfig.from_bonds(Q2, [2])
        assert is_pivotal(config, (0, 1), 0, ANTIPODE)


class TestEPrime:
    """Tests for E′(v, x; A)."""

    def test_coincident_in_set(self):
        for config in q2_configs():
            assert e_prime_holds(config, 2, 2, {2})

    def test_q1_pivotal_outside_set(self):
        assert e_prime_holds(BondConfig.full(Q1), 1, 0, {0})

    def test_q1_pivotal_inside_set(self):
        assert not e_prime_holds(BondConfig.full(Q1), 1, 0, {1})

    @pytest.mark.parametrize(
        "through", [frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 3}), frozenset({1, 2})]
    )
    def test_targets_match_literal_scan_on_q2(self, through):
        for config in q2_configs():
            for v in range(4):
                expected = {x for x in range(4) if e_prime_holds(config, v, x, through)}
                assert e_prime_targets(config, v, through) == expected

    @pytest.mark.parametrize("through", [frozenset({0}), frozenset({1, 6})])
    def test_targets_match_literal_scan_on_q3(self, through):
        for mask in range(0, 1 << 12, 97):
            config = BondConfig(Q3, mask)
            for v in (0, 5):
                expected = {x for x in range(8) if e_prime_holds(config, v, x, through)}
                assert e_prime_targets(config, v, through) == expected


class TestLongPath:
    """Tests for occupied self-avoiding paths of a minimum length."""

    def test_cycle_long_way_round(self):
        full = BondConfig.full(Q2)
        assert has_long_path(full, 0, 1, 3)
        assert not has_long_path(full, 0, 1, 4)

    def test_direct_bond_only(self):
        config = BondConfig.from_bonds(Q2, [0, 2, 3])
        assert has_long_path(config, 0, 1, 1)
        assert not has_long_path(config, 0, 1, 2)

    def test_same_point(self):
        config = BondConfig(Q2, 0)
        assert has_long_path(config, 0, 0, 0)
        assert not has_long_path(config, 0, 0, 1)

    def test_implies_connection(self):
        for config in q2_configs():
            for y in range(4):
                if has_long_path(config, 0, y, 1):
                    assert is_connected(config, 0, y)


class TestLevelStack:
    """Tests for nested level counts."""

    def test_single_level_counts_double_connections(self):
        assert LevelStack([BondConfig.full(Q2)]).count() == 3
        assert LevelStack([BondConfig(Q2, 0b0111)]).count() == 0

    def test_two_levels_on_q1(self):
        full, empty = BondConfig.full(Q1), BondConfig(Q1, 0)
        assert LevelStack([full, full]).count() == 1
        assert LevelStack([empty, full]).count() == 1
        assert LevelStack([full, empty]).count() == 0

    def test_three_levels_on_q1(self):
        full = BondConfig.full(Q1)
        empty = BondConfig(Q1, 0)
        assert LevelStack([full, full, full]).count() == 1
        # the last level only needs x = v_1 inside C̃_1
        assert LevelStack([full, full, empty]).count() == 1
        assert LevelStack([full, empty, full]).count() == 0

    def test_depth(self):
        assert LevelStack([BondConfig(Q1, 0)] * 3).depth == 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            LevelStack([])
