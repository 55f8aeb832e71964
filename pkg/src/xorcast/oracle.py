"""Ground-truth machinery: payload simulation, XOR decoding, baselines.

This module never looks at how a schedule was constructed.  It fills every
subfile with seeded pseudo-random bytes, replays the transmissions, and
checks that each user ends up holding its requested file bit-exactly.  It
also provides the conventional per-tier delivery baseline and brute-force
missing-subfile accounting, used as independent cross checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations
from math import comb

from .messages import DeliverySchedule, MulticastMessage, subfile_label
from .placement import (
    DemandClassification,
    PlacementSpec,
    Subfile,
    all_indices,
)

DEFAULT_SUBFILE_BYTES = 8


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


def payload_store(files: set[int], K: int, t: int, seed: int,
                  subfile_bytes: int = DEFAULT_SUBFILE_BYTES) -> dict[Subfile, bytes]:
    """Deterministic pseudo-random payload for every subfile of ``files``.

    Seeded per file through the string path of ``random.Random`` so payloads
    are stable across processes and independent of the demand vector.
    """
    store: dict[Subfile, bytes] = {}
    for f in sorted(files):
        rng = random.Random(f"payload|{seed}|{f}")
        for ix in all_indices(K, t):
            store[(f, ix)] = rng.randbytes(subfile_bytes)
    return store


@dataclass(frozen=True)
class DecodeVerdict:
    ok: bool
    failures: tuple[tuple[int, Subfile], ...]
    absorbed: tuple[tuple[int, int], ...]  # (message position, user) decode trace

    def report(self) -> str:
        if self.ok:
            return "ok\n"
        lines = [f"user {u} missing {subfile_label(s)}" for u, s in self.failures]
        lines += [f"absorbed message {m} at user {u}" for m, u in self.absorbed]
        return "\n".join(lines) + "\n"


def simulate_and_decode(placement: PlacementSpec, schedule: DeliverySchedule,
                        d: list[int] | tuple[int, ...], seed: int = 0,
                        subfile_bytes: int = DEFAULT_SUBFILE_BYTES) -> DecodeVerdict:
    """Replay a schedule and verify bit-exact recovery at every user.

    Each user starts from its cache and absorbs a message once all but one
    of its parts are known, XOR-recovering the last one.  Replay repeats to
    a fixpoint, so message order never affects the verdict.
    """
    K, t = placement.K, placement.t
    store = payload_store(set(d), K, t, seed, subfile_bytes)
    known: list[dict[Subfile, bytes]] = [dict() for _ in range(K + 1)]
    for u in range(1, K + 1):
        for f in set(d):
            for ix in all_indices(K, t):
                if placement.caches_subfile(u, (f, ix)):
                    known[u][(f, ix)] = store[(f, ix)]

    transmissions = [(pos, m, _payload(m, store)) for pos, m in enumerate(schedule.all_messages())]
    trace: list[tuple[int, int]] = []
    progress = True
    while progress:
        progress = False
        for pos, message, payload in transmissions:
            for u in range(1, K + 1):
                unknown = [p for p in message.parts if p not in known[u]]
                if len(unknown) != 1:
                    continue
                acc = payload
                for p in message.parts:
                    if p != unknown[0]:
                        acc = _xor(acc, known[u][p])
                known[u][unknown[0]] = acc
                trace.append((pos, u))
                progress = True

    failures = []
    for u in range(1, K + 1):
        f = d[u - 1]
        for ix in all_indices(K, t):
            got = known[u].get((f, ix))
            if got is None or got != store[(f, ix)]:
                failures.append((u, (f, ix)))
    return DecodeVerdict(ok=not failures, failures=tuple(failures), absorbed=tuple(trace))


def _payload(message: MulticastMessage, store: dict[Subfile, bytes]) -> bytes:
    acc = store[message.parts[0]]
    for p in message.parts[1:]:
        acc = _xor(acc, store[p])
    return acc


def count_missing(placement: PlacementSpec, d: list[int] | tuple[int, ...]) -> int:
    """Brute-force count of subfiles absent from their requester's cache."""
    K, t = placement.K, placement.t
    total = 0
    for u in range(1, K + 1):
        f = d[u - 1]
        total += sum(1 for ix in all_indices(K, t)
                     if not placement.caches_subfile(u, (f, ix)))
    return total


def conventional_schedule(placement: PlacementSpec,
                          classification: DemandClassification) -> DeliverySchedule:
    """Per-tier delivery with no cross-level pairing, the baseline to beat.

    High requesters are served by XOR triples over every user triple that
    contains at least one of them (parts only for the high requesters in
    the triple); low requesters exchange owned subfiles pairwise and
    receive everything held by high or zero requesters as unicasts;
    uncached files go out whole.
    """
    if placement.t != 2:
        raise ValueError("conventional baseline implemented for t == 2 placements")
    K = placement.K
    high = set(classification.high_users)
    msgs: list[MulticastMessage] = []
    for S in combinations(range(1, K + 1), 3):
        hs = [u for u in S if u in high]
        if not hs:
            continue
        parts = tuple((classification.request(u), tuple(sorted(set(S) - {u}))) for u in hs)
        msgs.append(MulticastMessage(parts=parts, step=1, targets=tuple(hs)))
    for j, k in combinations(sorted(classification.low_users), 2):
        of_k_at_j = [(classification.request(k), ix) for ix in placement.owned_indices(j)]
        of_j_at_k = [(classification.request(j), ix) for ix in placement.owned_indices(k)]
        for a, b in zip(of_k_at_j, of_j_at_k):
            msgs.append(MulticastMessage(parts=(a, b), step=2, targets=(j, k)))
    low = set(classification.low_users)
    for j in sorted(low):
        f = classification.request(j)
        for ix in all_indices(K, 2):
            holder = placement.owner[ix]
            if holder != j and holder not in low:
                msgs.append(MulticastMessage(parts=((f, ix),), step=5, targets=(j,)))
    zero_msgs: list[MulticastMessage] = []
    for r in sorted(classification.zero_users):
        f = classification.request(r)
        for ix in all_indices(K, 2):
            zero_msgs.append(MulticastMessage(parts=((f, ix),), step=5, targets=(r,)))
    return DeliverySchedule(K=K, t=2, messages=tuple(msgs),
                            zero_level_messages=tuple(zero_msgs))


def delivered_exactly_once(placement: PlacementSpec, schedule: DeliverySchedule,
                           classification: DemandClassification) -> bool:
    """Check each missing (user, subfile) is carried by exactly one message.

    Counts, for every message part, the targets whose request matches the
    part's file and whose cache lacks it.  Completeness plus no-duplication
    is equivalent to every such pair appearing exactly once.
    """
    wanted: dict[tuple[int, Subfile], int] = {}
    for u in range(1, placement.K + 1):
        f = classification.request(u)
        for ix in all_indices(placement.K, placement.t):
            if not placement.caches_subfile(u, (f, ix)):
                wanted[(u, (f, ix))] = 0
    for m in schedule.all_messages():
        for p in m.parts:
            for u in m.targets:
                if (u, p) in wanted:
                    wanted[(u, p)] += 1
    return all(c == 1 for c in wanted.values())
