"""Matchings and edge partitions of complete graphs.

Everything here operates on plain user-id sets.  A pair is a canonical
2-tuple ``(a, b)`` with ``a < b``; a matching is a sorted tuple of
vertex-disjoint pairs.  All constructions are deterministic pure functions
of their inputs, so they are safe to call concurrently.
"""

from __future__ import annotations

from collections.abc import Iterable

Pair = tuple[int, int]
Matching = tuple[Pair, ...]


def pair(a: int, b: int) -> Pair:
    if a == b:
        raise ValueError(f"pair endpoints must differ, got {a}")
    return (a, b) if a < b else (b, a)


def all_pairs(users: Iterable[int]) -> set[Pair]:
    ids = sorted(users)
    return {(ids[x], ids[y]) for x in range(len(ids)) for y in range(x + 1, len(ids))}


def degrees(pairs: Iterable[Pair]) -> dict[int, int]:
    """Number of pairs each endpoint appears in."""
    deg: dict[int, int] = {}
    for a, b in pairs:
        deg[a] = deg.get(a, 0) + 1
        deg[b] = deg.get(b, 0) + 1
    return deg


def one_factorization(users: Iterable[int]) -> list[Matching]:
    """Partition the complete graph on an even vertex set into perfect matchings.

    Uses the classic circle (round-robin) construction: the largest id sits
    in the hub, the rest rotate.  Returns ``n - 1`` matchings that are
    pairwise edge-disjoint and jointly cover every pair exactly once.
    """
    ids = sorted(users)
    n = len(ids)
    if n < 2 or n % 2:
        raise ValueError("one_factorization requires even ground set of size >= 2")
    m = n - 1
    rounds: list[Matching] = []
    for r in range(m):
        pairs = [pair(ids[m], ids[r])]
        for a in range(1, (m - 1) // 2 + 1):
            pairs.append(pair(ids[(r - a) % m], ids[(r + a) % m]))
        rounds.append(tuple(sorted(pairs)))
    return rounds


def near_one_factorization(users: Iterable[int]) -> dict[int, Matching]:
    """Decompose the complete graph on an odd vertex set into maximum matchings.

    Returns one matching per vertex; the matching keyed by ``i`` omits
    exactly ``i``.  Built by the circle method on sorted positions, so the
    matching for the vertex at position ``p`` is ``{(p-a, p+a) mod n}``.
    The matchings are edge-disjoint and jointly cover every pair once.
    """
    ids = sorted(users)
    n = len(ids)
    if n < 3 or n % 2 == 0:
        raise ValueError("near_one_factorization requires odd ground set of size >= 3")
    out: dict[int, Matching] = {}
    for p, u in enumerate(ids):
        pairs = [pair(ids[(p - a) % n], ids[(p + a) % n]) for a in range(1, (n - 1) // 2 + 1)]
        out[u] = tuple(sorted(pairs))
    return out


def uniform_pairing_plan(users: Iterable[int], n: int) -> Matching:
    """Union of the first ``n`` matchings of the even-ground factorization.

    Every user appears in exactly ``n`` pairs of the result.
    """
    ids = sorted(users)
    if len(ids) % 2:
        raise ValueError("uniform_pairing_plan requires an even ground set")
    if not 0 <= n <= len(ids) - 1:
        raise ValueError(f"pairing degree {n} out of range 0..{len(ids) - 1}")
    rounds = one_factorization(ids) if ids else []
    plan: list[Pair] = []
    for matching in rounds[:n]:
        plan.extend(matching)
    return tuple(sorted(plan))


def uniform_pairing_plan_odd(users: Iterable[int], n_even: int) -> Matching:
    """Pairing plan of even uniform degree over an odd ground set.

    The ground set cannot be partitioned into pairs directly, so degree is
    accumulated two at a time: drop the largest id to get an even reference
    set, take the first matching of its factorization, and for each of its
    first ``n_even / 2`` pairs ``(i, k)`` add the maximum matchings omitting
    ``i`` and ``k`` plus the pair ``(i, k)`` itself.  Each user ends up in
    exactly ``n_even`` pairs.
    """
    ids = sorted(users)
    k = len(ids)
    if k < 3 or k % 2 == 0:
        raise ValueError("uniform_pairing_plan_odd requires an odd ground set of size >= 3")
    if n_even % 2:
        raise ValueError(f"pairing degree must be even, got {n_even}")
    if not 0 <= n_even <= k - 1:
        raise ValueError(f"pairing degree {n_even} out of range 0..{k - 1}")
    reference = reference_matching(ids)
    near = near_one_factorization(ids)
    plan: list[Pair] = []
    for ind in range(n_even // 2):
        i, kk = reference[ind]
        plan.extend(near[i])
        plan.extend(near[kk])
        plan.append((i, kk))
    if len(plan) != len(set(plan)):
        raise AssertionError("pairing plan construction produced a duplicate pair")
    return tuple(sorted(plan))


def reference_matching(users: Iterable[int]) -> Matching:
    """Perfect matching of the odd ground set minus its largest id.

    This is the fixed matching the degree-two accumulation above draws its
    anchor pairs from; taking the first factorization round makes it equal,
    in position space, to the maximum matching omitting the dropped vertex.
    """
    ids = sorted(users)
    if len(ids) % 2 == 0:
        raise ValueError("reference_matching expects an odd ground set")
    return one_factorization(ids[:-1])[0]


def _near_matching_unions(ids: list[int]) -> list[Matching]:
    """Two-regular edge sets M(j) + M(k) + (j, k) over the reference pairs.

    The unions are edge-disjoint and jointly cover the complete graph; each
    vertex has degree exactly two in every union.
    """
    near = near_one_factorization(ids)
    return [tuple(sorted(near[j] + near[k] + ((j, k),)))
            for j, k in reference_matching(ids)]


def hamiltonian_decomposition(users: Iterable[int]) -> list[Matching]:
    """Split the complete graph on an odd vertex set into Hamiltonian cycles.

    Each cycle is the union of the two maximum matchings omitting ``j`` and
    ``k`` plus the edge ``(j, k)``, with ``(j, k)`` running over the
    reference matching.  Returns ``(n - 1) / 2`` edge-disjoint cycles whose
    union is the complete graph; each is reported as a sorted edge tuple.

    The circle matchings make every union a single cycle only when ``n`` is
    prime (for composite ``n`` some union splits into shorter cycles, e.g.
    the position pair (3, 6) at n = 9), so composite sizes are rejected.
    """
    ids = sorted(users)
    n = len(ids)
    if n < 3 or n % 2 == 0:
        raise ValueError("hamiltonian_decomposition requires an odd ground set of size >= 3")
    cycles = _near_matching_unions(ids)
    for cycle in cycles:
        if len(_cycle_components(cycle)) != 1:
            raise ValueError(
                f"matching unions split into shorter cycles for ground size {n}; "
                "single Hamiltonian cycles need a prime-sized ground set")
    return cycles


def _cycle_components(edges: Iterable[Pair]) -> list[list[Pair]]:
    """Split a 2-regular edge set into its cycles; reject anything else."""
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    for v, nbrs in adj.items():
        if len(nbrs) != 2 or len(set(nbrs)) != 2:
            raise ValueError(f"vertex {v} does not have two distinct neighbours; not a cycle set")
    seen: set[int] = set()
    components: list[list[Pair]] = []
    for start in sorted(adj):
        if start in seen:
            continue
        walk = [start]
        seen.add(start)
        cur, prev = start, None
        while True:
            nxt = max(v for v in adj[cur] if v != prev) if prev is None else next(
                v for v in adj[cur] if v != prev
            )
            if nxt == start:
                break
            walk.append(nxt)
            seen.add(nxt)
            prev, cur = cur, nxt
        components.append([pair(walk[x], walk[(x + 1) % len(walk)]) for x in range(len(walk))])
    return components


def assign_cycle_edges(cycle: Iterable[Pair]) -> dict[Pair, int]:
    """Assign each edge of a cycle to one endpoint, one edge per vertex.

    Walks the cycle from its lowest id towards that vertex's larger
    neighbour and gives every traversed edge to its departure vertex.
    """
    edges = list(cycle)
    components = _cycle_components(edges)
    if len(components) != 1 or len(components[0]) != len(edges):
        raise ValueError("input is not a single cycle")
    start = min(v for e in edges for v in e)
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seq = [start]
    cur, prev = start, None
    while len(seq) < len(edges):
        nxt = max(adj[cur]) if prev is None else next(v for v in adj[cur] if v != prev)
        seq.append(nxt)
        prev, cur = cur, nxt
    return {pair(v, seq[(x + 1) % len(seq)]): v for x, v in enumerate(seq)}


def balanced_edge_partition(pairs: Iterable[Pair], users: Iterable[int]) -> dict[int, set[Pair]]:
    """Partition the complete pair set of ``users`` among its endpoints.

    Every pair lands on one of its two endpoints and part sizes differ by
    at most one.  Odd ground sets decompose into Hamiltonian cycles whose
    edges are walked off one per vertex, giving all parts exactly
    ``(n - 1) / 2`` pairs.  Even ground sets pair up factorization rounds
    the same way and assign each edge of the leftover perfect matching to
    its lower id, so half the parts have ``n / 2`` pairs and half have
    ``n / 2 - 1``.
    """
    ids = sorted(users)
    n = len(ids)
    items = set(pairs)
    if items != all_pairs(ids):
        raise ValueError("pair set does not match the complete graph on the given users")
    parts: dict[int, set[Pair]] = {u: set() for u in ids}
    if n <= 1:
        return parts
    if n % 2:
        # every vertex has degree two in each union, hence lies in exactly
        # one of its cycles and collects exactly one edge per union
        for union in _near_matching_unions(ids):
            for component in _cycle_components(union):
                for edge, v in assign_cycle_edges(component).items():
                    parts[v].add(edge)
        return parts
    if n == 2:
        parts[ids[0]].add((ids[0], ids[1]))
        return parts
    rounds = one_factorization(ids)
    for x in range(0, n - 2, 2):
        union = rounds[x] + rounds[x + 1]
        for component in _cycle_components(union):
            for edge, v in assign_cycle_edges(component).items():
                parts[v].add(edge)
    for a, b in rounds[n - 2]:
        parts[min(a, b)].add((a, b))
    return parts
