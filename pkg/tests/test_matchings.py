import pathlib

import pytest

from xorcast.matchings import (
    all_pairs,
    assign_cycle_edges,
    balanced_edge_partition,
    degrees,
    hamiltonian_decomposition,
    near_one_factorization,
    one_factorization,
    reference_matching,
    uniform_pairing_plan,
    uniform_pairing_plan_odd,
)

DATA = pathlib.Path(__file__).parent / "data"


def _load_near_matchings():
    table = {}
    for line in (DATA / "near_matchings_7.txt").read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, body = line.partition(":")
        omitted = int(head.split()[1])
        table[omitted] = tuple(sorted(
            tuple(sorted(map(int, e.split("-")))) for e in body.split()))
    return table


class TestOneFactorization:
    def test_single_edge(self):
        assert one_factorization({1, 2}) == [((1, 2),)]

    @pytest.mark.parametrize("n", range(2, 21, 2))
    def test_cover_and_disjoint(self, n):
        rounds = one_factorization(range(1, n + 1))
        assert len(rounds) == n - 1
        edges = [e for m in rounds for e in m]
        assert len(edges) == len(set(edges))
        assert set(edges) == all_pairs(range(1, n + 1))
        for m in rounds:
            assert sorted(degrees(m)) == list(range(1, n + 1))
            assert all(d == 1 for d in degrees(m).values())

    def test_four_vertices_cover(self):
        rounds = one_factorization({1, 2, 3, 4})
        assert len(rounds) == 3
        assert {e for m in rounds for e in m} == all_pairs({1, 2, 3, 4})

    def test_noncontiguous_ids(self):
        rounds = one_factorization({3, 8, 11, 20})
        assert {e for m in rounds for e in m} == all_pairs({3, 8, 11, 20})

    def test_odd_rejected(self):
        with pytest.raises(ValueError, match="even ground set"):
            one_factorization({1, 2, 3})


class TestNearOneFactorization:
    def test_three_vertices(self):
        out = near_one_factorization({1, 2, 3})
        assert out == {1: ((2, 3),), 2: ((1, 3),), 3: ((1, 2),)}

    def test_five_vertices_published(self):
        out = near_one_factorization(range(1, 6))
        assert out[5] == ((1, 4), (2, 3))
        assert out[1] == ((2, 5), (3, 4))
        assert out[2] == ((1, 3), (4, 5))
        assert out[3] == ((1, 5), (2, 4))
        assert out[4] == ((1, 2), (3, 5))

    def test_seven_vertices_golden(self):
        table = _load_near_matchings()
        out = near_one_factorization(range(1, 8))
        assert out == table

    @pytest.mark.parametrize("n", range(3, 22, 2))
    def test_cover_disjoint_omission(self, n):
        out = near_one_factorization(range(1, n + 1))
        assert len(out) == n
        edges = [e for m in out.values() for e in m]
        assert len(edges) == len(set(edges))
        assert set(edges) == all_pairs(range(1, n + 1))
        for omitted, m in out.items():
            touched = {v for e in m for v in e}
            assert omitted not in touched
            assert len(touched) == n - 1

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            near_one_factorization({1, 2, 3, 4})

    @pytest.mark.parametrize("n", range(3, 22, 2))
    def test_reference_matching_is_the_omitted_vertex_matching(self, n):
        users = range(1, n + 1)
        assert set(reference_matching(users)) == set(near_one_factorization(users)[n])


class TestPairingPlans:
    def test_zero_degree(self):
        assert uniform_pairing_plan({1, 2, 3, 4}, 0) == ()
        assert uniform_pairing_plan_odd(range(1, 6), 0) == ()

    def test_complete_plan(self):
        plan = uniform_pairing_plan({1, 2, 3, 4}, 3)
        assert set(plan) == all_pairs({1, 2, 3, 4})
        assert all(d == 3 for d in degrees(plan).values())

    def test_degree_two_six_users(self):
        plan = uniform_pairing_plan(range(1, 7), 2)
        assert len(plan) == 6
        assert all(d == 2 for d in degrees(plan).values())

    def test_degree_four_plan_golden(self):
        golden = [
            tuple(sorted(map(int, line.split("-"))))
            for line in (DATA / "q4_plan_7.txt").read_text().splitlines()
            if line.strip() and not line.startswith("#")
        ]
        plan = uniform_pairing_plan_odd(range(1, 8), 4)
        assert sorted(plan) == sorted(golden)
        assert all(d == 4 for d in degrees(plan).values())

    def test_three_users_degree_two(self):
        plan = uniform_pairing_plan_odd({1, 2, 3}, 2)
        assert set(plan) == {(1, 2), (1, 3), (2, 3)}
        assert all(d == 2 for d in degrees(plan).values())

    @pytest.mark.parametrize("n", (3, 5, 7, 9))
    def test_every_even_degree(self, n):
        for n_even in range(0, n, 2):
            plan = uniform_pairing_plan_odd(range(1, n + 1), n_even)
            deg = degrees(plan)
            assert all(deg.get(u, 0) == n_even for u in range(1, n + 1)) or n_even == 0

    def test_errors(self):
        with pytest.raises(ValueError, match="even"):
            uniform_pairing_plan_odd(range(1, 6), 3)
        with pytest.raises(ValueError, match="range"):
            uniform_pairing_plan_odd(range(1, 6), 6)
        with pytest.raises(ValueError, match="range"):
            uniform_pairing_plan({1, 2, 3, 4}, 4)


class TestHamiltonianDecomposition:
    def test_triangle(self):
        assert hamiltonian_decomposition({1, 2, 3}) == [((1, 2), (1, 3), (2, 3))]

    @pytest.mark.parametrize("n", (3, 5, 7, 11, 13, 17, 19))
    def test_cycles_cover_complete_graph(self, n):
        cycles = hamiltonian_decomposition(range(1, n + 1))
        assert len(cycles) == (n - 1) // 2
        edges = [e for c in cycles for e in c]
        assert len(edges) == len(set(edges))
        assert set(edges) == all_pairs(range(1, n + 1))
        for c in cycles:
            deg = degrees(c)
            assert len(deg) == n
            assert all(d == 2 for d in deg.values())
            # connectivity: a single assignment walk touches every vertex
            assert len(assign_cycle_edges(c)) == n

    @pytest.mark.parametrize("n", (9, 15, 21))
    def test_composite_sizes_rejected(self, n):
        with pytest.raises(ValueError, match="prime"):
            hamiltonian_decomposition(range(1, n + 1))

    def test_even_rejected(self):
        with pytest.raises(ValueError):
            hamiltonian_decomposition({1, 2, 3, 4})


class TestAssignCycleEdges:
    def test_published_walk(self):
        # walking 1 -> 7 -> 5 -> 3 -> 2 -> 6 -> 4 hands each edge to its
        # departure vertex
        cycle = [(1, 7), (5, 7), (2, 6), (2, 3), (1, 4), (4, 6), (3, 5)]
        assert assign_cycle_edges(cycle) == {
            (1, 7): 1, (5, 7): 7, (3, 5): 5, (2, 3): 3,
            (2, 6): 2, (4, 6): 6, (1, 4): 4,
        }

    def test_triangle_one_edge_each(self):
        out = assign_cycle_edges([(1, 2), (2, 3), (1, 3)])
        assert sorted(out.values()) == [1, 2, 3]
        assert all(v in e for e, v in out.items())

    @pytest.mark.parametrize("n", (4, 5, 8, 11))
    def test_every_vertex_one_incident_edge(self, n):
        cycle = [tuple(sorted((x + 1, (x + 1) % n + 1))) for x in range(n)]
        out = assign_cycle_edges(cycle)
        assert sorted(out.values()) == list(range(1, n + 1))
        assert all(v in e for e, v in out.items())

    def test_non_cycle_rejected(self):
        with pytest.raises(ValueError):
            assign_cycle_edges([(1, 2), (2, 3)])
        with pytest.raises(ValueError):
            # two disjoint triangles are not a single cycle
            assign_cycle_edges([(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)])


class TestBalancedEdgePartition:
    def test_two_users_forced(self):
        parts = balanced_edge_partition({(6, 7)}, {6, 7})
        assert parts == {6: {(6, 7)}, 7: set()}

    def test_seven_users_uniform(self):
        parts = balanced_edge_partition(all_pairs(range(1, 8)), range(1, 8))
        assert all(len(p) == 3 for p in parts.values())

    def test_four_users_split(self):
        parts = balanced_edge_partition(all_pairs(range(1, 5)), range(1, 5))
        assert sorted(len(p) for p in parts.values()) == [1, 1, 2, 2]

    @pytest.mark.parametrize("n", range(2, 13))
    def test_owner_membership_and_near_uniformity(self, n):
        users = range(1, n + 1)
        parts = balanced_edge_partition(all_pairs(users), users)
        for u, edges in parts.items():
            assert all(u in e for e in edges)
        sizes = [len(p) for p in parts.values()]
        assert max(sizes) - min(sizes) <= 1
        assert sum(sizes) == n * (n - 1) // 2

    def test_wrong_items_rejected(self):
        with pytest.raises(ValueError):
            balanced_edge_partition({(1, 2)}, {1, 2, 3})
