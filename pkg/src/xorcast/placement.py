"""Library grouping, sub-packetization and cache filling.

Files are ranked by popularity and split into three tiers: *high* files are
cached at level ``t`` (every subfile held by the ``t`` users in its index),
*low* files at level one (every subfile held by exactly one user), and
*zero* files not at all.  Each file is cut into ``C(K, t)`` equal subfiles
indexed by t-subsets of the user set, the same sub-packetization for every
tier, so all multicast payloads have identical size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import NamedTuple

Index = tuple[int, ...]  # sorted t-subset of user ids
Subfile = tuple[int, Index]  # (file id, index)


class Level(enum.Enum):
    HIGH = "high"
    LOW = "low"
    ZERO = "zero"


class Grouping(NamedTuple):
    n_high: int
    n_low: int
    slack: Fraction  # unused cache capacity per user, in file units


def group_library(N: int, M: Fraction | int, t: int, N_r: int, K: int) -> Grouping:
    """Split ``N`` files into high/low/zero counts for cache size ``M``.

    Caching a file at level ``t`` costs ``t/K`` file units per user and at
    level one ``1/K``, so ``M = (N_h (t-1) + N - N_r) / K`` when the cache
    is exactly full.  ``N_h`` is rounded down and any leftover capacity is
    reported as slack, never spent.
    """
    M = Fraction(M)
    if t < 2:
        raise ValueError("caching level t must be at least 2")
    if not 0 <= N_r <= N:
        raise ValueError("uncached file count out of range")
    budget = M * K - (N - N_r)
    if budget < 0:
        raise ValueError("cache too small for level t with this N_r")
    n_high = min(int(budget // (t - 1)), N - N_r)
    n_low = N - n_high - N_r
    slack = M - Fraction(n_high * (t - 1) + N - N_r, K)
    return Grouping(n_high, n_low, slack)


@dataclass(frozen=True)
class LibraryConfig:
    """Validated system parameters for one placement.

    ``M`` must account exactly for the chosen grouping:
    ``M == (N_h (t-1) + N - N_r) / K``, all arithmetic rational.
    """

    K: int
    N: int
    t: int
    M: Fraction
    N_h: int
    N_r: int
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.K < 2:
            raise ValueError("need at least two users")
        if not 2 <= self.t <= self.K - 1:
            raise ValueError("caching level t must satisfy 2 <= t <= K-1")
        if comb(self.K, self.t) % self.K:
            raise ValueError(f"C({self.K},{self.t}) is not divisible by {self.K}")
        if self.N_h < 0 or self.N_r < 0 or self.N_h + self.N_r > self.N:
            raise ValueError("invalid high/zero file counts")
        expected = Fraction(self.N_h * (self.t - 1) + self.N - self.N_r, self.K)
        if Fraction(self.M) != expected:
            raise ValueError(f"cache size {self.M} does not equal required {expected}")

    @property
    def n_low(self) -> int:
        return self.N - self.N_h - self.N_r

    @classmethod
    def fit(cls, K: int, N: int, t: int, M: Fraction | int, N_r: int = 0,
            gamma: float = 0.0) -> "LibraryConfig":
        """Config for the largest high tier that fits in cache size ``M``."""
        grouping = group_library(N, M, t, N_r, K)
        exact = Fraction(grouping.n_high * (t - 1) + N - N_r, K)
        return cls(K=K, N=N, t=t, M=exact, N_h=grouping.n_high, N_r=N_r, gamma=gamma)


def all_indices(K: int, t: int) -> list[Index]:
    return [tuple(s) for s in combinations(range(1, K + 1), t)]


def _gap_sequence(index: Index, K: int, start: int) -> tuple[int, ...]:
    members = sorted(index)
    p = members.index(start)
    ring = members[p:] + members[:p]
    return tuple((ring[(x + 1) % len(ring)] - ring[x]) % K for x in range(len(ring)))


def _gap_rule_owner(index: Index, K: int) -> int:
    return min(index, key=lambda u: (_gap_sequence(index, K, u), u))


@lru_cache(maxsize=None)
def owner_map(K: int, t: int) -> dict[Index, int]:
    """Deterministic balanced owner for every t-subset index.

    Each index is owned by one of its members and every user owns exactly
    ``C(K,t)/K`` indices.  The primary rule picks the member whose circular
    gap sequence is lexicographically smallest; that rule is shift-
    equivariant, hence exactly balanced whenever no index is fixed by a
    cyclic shift (always true for prime ``K``).  Residual imbalance is
    repaired by deterministic reassignment chains.
    """
    if comb(K, t) % K:
        raise ValueError(f"C({K},{t}) is not divisible by {K}")
    quota = comb(K, t) // K
    owners: dict[Index, int] = {}
    owned: dict[int, list[Index]] = {u: [] for u in range(1, K + 1)}
    for index in all_indices(K, t):
        u = _gap_rule_owner(index, K)
        owners[index] = u
        owned[u].append(index)
    while True:
        over = [u for u in owned if len(owned[u]) > quota]
        if not over:
            break
        src = min(over)
        parent: dict[int, int | None] = {src: None}
        via: dict[int, Index] = {}
        queue = [src]
        found = None
        while queue and found is None:
            u = queue.pop(0)
            for index in sorted(owned[u]):
                for v in index:
                    if v not in parent:
                        parent[v] = u
                        via[v] = index
                        if len(owned[v]) < quota:
                            found = v
                            break
                        queue.append(v)
                if found is not None:
                    break
        if found is None:
            raise AssertionError("owner rebalancing failed; no augmenting chain")
        v = found
        while parent[v] is not None:
            u = parent[v]
            index = via[v]
            owned[u].remove(index)
            owned[v].append(index)
            owners[index] = v
            v = u
    assert all(len(ix) == quota for ix in owned.values())
    return owners


def low_level_owner(index: Index, K: int, t: int) -> int:
    """Which member of ``index`` exclusively caches that subfile of a low file.

    For ``t == 2`` this is the closed split of the index ring: ``(u, v)``
    belongs to ``u`` when ``(v - u) mod K <= (K-1)/2``, to ``v`` otherwise.
    """
    index = tuple(sorted(index))
    if len(index) != t or len(set(index)) != t:
        raise ValueError(f"index {index} is not a {t}-subset")
    if any(not 1 <= u <= K for u in index):
        raise ValueError(f"index {index} outside user range 1..{K}")
    if t == 2:
        u, v = index
        return u if (v - u) % K <= (K - 1) // 2 else v
    return owner_map(K, t)[index]


@dataclass(frozen=True)
class PlacementSpec:
    """Immutable cache contents after the placement phase."""

    config: LibraryConfig
    level: dict[int, Level]
    owner: dict[Index, int]
    cache: dict[int, frozenset[Subfile]] = field(repr=False)

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def t(self) -> int:
        return self.config.t

    def caches_subfile(self, user: int, subfile: Subfile) -> bool:
        file_id, index = subfile
        lvl = self.level[file_id]
        if lvl is Level.HIGH:
            return user in index
        if lvl is Level.LOW:
            return self.owner[index] == user
        return False

    def owned_indices(self, user: int) -> list[Index]:
        return sorted(ix for ix, u in self.owner.items() if u == user)

    def cached_file_units(self, user: int) -> Fraction:
        """Cache occupancy of one user in file units; must equal ``M``."""
        return Fraction(len(self.cache[user]), comb(self.K, self.t))


def build_placement(config: LibraryConfig, ranking: list[int] | None = None) -> PlacementSpec:
    """Fill every user cache for the given grouping.

    ``ranking`` lists file ids by decreasing popularity (ties already
    broken by id); the first ``N_h`` become high files, the last ``N_r``
    are left uncached.  Low ownership uses ``low_level_owner``, so each
    user's low-tier indices are a subset of its high-tier index pattern.
    """
    if ranking is None:
        ranking = list(range(1, config.N + 1))
    if sorted(ranking) != list(range(1, config.N + 1)):
        raise ValueError("ranking must be a permutation of 1..N")
    level: dict[int, Level] = {}
    for pos, file_id in enumerate(ranking):
        if pos < config.N_h:
            level[file_id] = Level.HIGH
        elif pos < config.N - config.N_r:
            level[file_id] = Level.LOW
        else:
            level[file_id] = Level.ZERO
    K, t = config.K, config.t
    owner = {ix: low_level_owner(ix, K, t) for ix in all_indices(K, t)}
    cache: dict[int, frozenset[Subfile]] = {}
    for u in range(1, K + 1):
        contents: set[Subfile] = set()
        for file_id, lvl in level.items():
            if lvl is Level.HIGH:
                contents.update((file_id, ix) for ix in all_indices(K, t) if u in ix)
            elif lvl is Level.LOW:
                contents.update((file_id, ix) for ix, o in owner.items() if o == u)
        cache[u] = frozenset(contents)
    spec = PlacementSpec(config=config, level=level, owner=owner, cache=cache)
    for u in range(1, K + 1):
        assert spec.cached_file_units(u) == config.M, "cache accounting mismatch"
    return spec


@dataclass(frozen=True)
class DemandClassification:
    """Demand vector with users grouped by their requested file's tier."""

    d: tuple[int, ...]
    high_users: tuple[int, ...]
    low_users: tuple[int, ...]
    zero_users: tuple[int, ...]

    @property
    def k(self) -> tuple[int, int, int]:
        return (len(self.high_users), len(self.low_users), len(self.zero_users))

    def request(self, user: int) -> int:
        return self.d[user - 1]


def classify_demand(d: list[int] | tuple[int, ...], placement: PlacementSpec) -> DemandClassification:
    cfg = placement.config
    if len(d) != cfg.K:
        raise ValueError(f"demand vector must have {cfg.K} entries")
    if any(not 1 <= f <= cfg.N for f in d):
        raise ValueError("demand contains a file id outside 1..N")
    groups: dict[Level, list[int]] = {Level.HIGH: [], Level.LOW: [], Level.ZERO: []}
    for user, file_id in enumerate(d, start=1):
        groups[placement.level[file_id]].append(user)
    return DemandClassification(
        d=tuple(d),
        high_users=tuple(groups[Level.HIGH]),
        low_users=tuple(groups[Level.LOW]),
        zero_users=tuple(groups[Level.ZERO]),
    )


def export_placement(placement: PlacementSpec) -> str:
    """One text record per (user, file, index), for golden-file comparison."""
    lines = []
    for u in sorted(placement.cache):
        for file_id, index in sorted(placement.cache[u]):
            lines.append(f"{u}\t{file_id}\t{'-'.join(map(str, index))}")
    return "\n".join(lines) + "\n"


def parse_placement_records(text: str) -> set[tuple[int, int, Index]]:
    records = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        u, f, ix = line.split("\t")
        records.add((int(u), int(f), tuple(int(x) for x in ix.split("-"))))
    return records
