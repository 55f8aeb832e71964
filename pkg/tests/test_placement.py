import pathlib
from fractions import Fraction
from math import comb

import pytest

from xorcast.placement import (
    Level,
    LibraryConfig,
    all_indices,
    build_placement,
    classify_demand,
    export_placement,
    group_library,
    low_level_owner,
    owner_map,
    parse_placement_records,
)

DATA = pathlib.Path(__file__).parent / "data"


class TestGroupLibrary:
    def test_published_sizing(self):
        assert group_library(7, Fraction(12, 7), 2, 0, 7)[:2] == (5, 2)

    def test_everything_level_one(self):
        assert group_library(7, 1, 2, 0, 7)[:2] == (0, 7)

    def test_removal_frees_capacity(self):
        n_high, n_low, slack = group_library(7, Fraction(12, 7), 2, 1, 7)
        assert (n_high, n_low) == (6, 0)
        assert Fraction(12, 7) == Fraction(n_high * 1 + 7 - 1, 7) + slack

    def test_cache_too_small(self):
        with pytest.raises(ValueError, match="cache too small"):
            group_library(10, 0, 2, 1, 5)

    def test_slack_reported_not_spent(self):
        n_high, n_low, slack = group_library(10, Fraction(13, 5), 3, 0, 5)
        assert n_high == (13 - 10) // 2
        assert slack == Fraction(13, 5) - Fraction(n_high * 2 + 10, 5)
        assert 0 <= slack < Fraction(2, 5)

    @pytest.mark.parametrize("n_r", range(0, 8))
    def test_monotone_in_removal(self, n_r):
        if n_r < 7:
            a = group_library(7, Fraction(10, 7), 2, n_r, 7).n_high
            b = group_library(7, Fraction(10, 7), 2, n_r + 1, 7).n_high
            assert b >= a


class TestLibraryConfig:
    def test_exact_cache_accounting_enforced(self):
        with pytest.raises(ValueError, match="cache size"):
            LibraryConfig(K=7, N=7, t=2, M=Fraction(12, 7), N_h=4, N_r=0)

    def test_divisibility_enforced(self):
        with pytest.raises(ValueError, match="divisible"):
            LibraryConfig(K=6, N=6, t=2, M=Fraction(6 + 6, 6), N_h=6, N_r=0)

    def test_fit_example(self):
        cfg = LibraryConfig.fit(7, 7, 2, Fraction(12, 7))
        assert (cfg.N_h, cfg.n_low, cfg.N_r) == (5, 2, 0)


class TestLowLevelOwner:
    @pytest.mark.parametrize("index,owner", [
        ((1, 2), 1), ((1, 3), 1), ((1, 4), 1), ((1, 5), 5),
        ((5, 6), 5), ((5, 7), 5), ((1, 6), 6), ((2, 6), 6), ((6, 7), 6),
        ((1, 7), 7), ((2, 7), 7), ((3, 7), 7),
    ])
    def test_published_pattern_k7(self, index, owner):
        assert low_level_owner(index, 7, 2) == owner

    @pytest.mark.parametrize("K,t", [(7, 2), (7, 3), (5, 2), (11, 2), (7, 6), (10, 4)])
    def test_balance_and_membership(self, K, t):
        counts: dict[int, int] = {}
        for index in all_indices(K, t):
            u = low_level_owner(index, K, t)
            assert u in index
            counts[u] = counts.get(u, 0) + 1
        assert all(c == comb(K, t) // K for c in counts.values())

    def test_owner_map_matches_closed_form_at_t2(self):
        assert owner_map(7, 2) == {ix: low_level_owner(ix, 7, 2)
                                   for ix in all_indices(7, 2)}

    def test_bad_index_rejected(self):
        with pytest.raises(ValueError):
            low_level_owner((0, 3), 7, 2)
        with pytest.raises(ValueError):
            low_level_owner((1, 2, 3), 7, 2)


class TestBuildPlacement:
    def test_example1_golden(self, example1_placement):
        golden = parse_placement_records((DATA / "example1_placement.txt").read_text())
        ours = parse_placement_records(export_placement(example1_placement))
        assert ours == golden

    def test_example1_user1_rows(self, example1_placement):
        cache = example1_placement.cache[1]
        for f in range(1, 6):
            assert sorted(ix for (g, ix) in cache if g == f) == [
                (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7)]
        for f in (6, 7):
            assert sorted(ix for (g, ix) in cache if g == f) == [(1, 2), (1, 3), (1, 4)]

    def test_all_high_is_uniform_level_t(self):
        cfg = LibraryConfig(K=7, N=3, t=2, M=Fraction(3 * 2, 7), N_h=3, N_r=0)
        placement = build_placement(cfg)
        for u in range(1, 8):
            assert len(placement.cache[u]) == 3 * comb(6, 1)

    def test_all_removed_empty_caches(self):
        cfg = LibraryConfig(K=7, N=3, t=2, M=Fraction(0), N_h=0, N_r=3)
        placement = build_placement(cfg)
        assert all(not c for c in placement.cache.values())

    def test_cache_occupancy_exact(self, example1_placement, example2_placement,
                                   mixed_placement):
        for placement in (example1_placement, example2_placement, mixed_placement):
            for u in range(1, 8):
                assert placement.cached_file_units(u) == placement.config.M

    def test_low_ownership_partitions_indices(self, example1_placement):
        owned = [ix for u in range(1, 8) for ix in example1_placement.owned_indices(u)]
        assert sorted(owned) == all_indices(7, 2)

    def test_systematic_subset_property(self, example1_placement):
        # low-tier cached indices are a subset of the high-tier index pattern
        for u in range(1, 8):
            for ix in example1_placement.owned_indices(u):
                assert u in ix

    def test_ranking_reorders_tiers(self):
        cfg = LibraryConfig(K=7, N=7, t=2, M=Fraction(10, 7), N_h=4, N_r=1)
        placement = build_placement(cfg, ranking=[7, 6, 5, 4, 3, 2, 1])
        assert placement.level[7] is Level.HIGH
        assert placement.level[1] is Level.ZERO

    def test_bad_ranking_rejected(self):
        cfg = LibraryConfig(K=7, N=7, t=2, M=Fraction(10, 7), N_h=4, N_r=1)
        with pytest.raises(ValueError):
            build_placement(cfg, ranking=[1, 1, 2, 3, 4, 5, 6])


class TestClassifyDemand:
    def test_example1(self, example1_placement):
        cls = classify_demand([1, 2, 3, 4, 5, 6, 7], example1_placement)
        assert cls.high_users == (1, 2, 3, 4, 5)
        assert cls.low_users == (6, 7)
        assert cls.k == (5, 2, 0)

    def test_example2(self, example2_placement):
        cls = classify_demand([1, 2, 3, 4, 5, 6, 7], example2_placement)
        assert cls.high_users == (1, 2, 3, 4)
        assert cls.low_users == (5, 6)
        assert cls.zero_users == (7,)

    def test_all_high(self, example1_placement):
        cls = classify_demand([1] * 7, example1_placement)
        assert cls.k == (7, 0, 0)

    def test_out_of_range_rejected(self, example1_placement):
        with pytest.raises(ValueError):
            classify_demand([1, 2, 3, 4, 5, 6, 8], example1_placement)
        with pytest.raises(ValueError):
            classify_demand([1, 2, 3], example1_placement)


class TestExportImport:
    def test_roundtrip(self, example2_placement):
        text = export_placement(example2_placement)
        records = parse_placement_records(text)
        expected = {(u, f, ix) for u, c in example2_placement.cache.items()
                    for (f, ix) in c}
        assert records == expected
