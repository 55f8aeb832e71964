"""Cross-level delivery scheduling for level-2 placements.

Given a placement with ``t == 2`` and a demand vector, the scheduler emits
five steps of multicast messages:

1. conventional XOR triples among users requesting high or uncached files,
2. pairwise XOR exchange among users requesting low files,
3. cross-level pairs, each XORing one high requester's missing subfile held
   only lower in the hierarchy with one low requester's missing subfile held
   by that high user,
4. leftover high-high pairs built from uniform pairing plans (plus at most
   one unicast when the leftover count is odd),
5. unicasts: subfiles of low files held by zero-level requesters, spillover
   subfiles that did not fit in step 3, and the uncached files themselves.

Rate bookkeeping is exact rational arithmetic throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import ceil, comb

from .matchings import (
    Pair,
    all_pairs,
    balanced_edge_partition,
    near_one_factorization,
    one_factorization,
    reference_matching,
    uniform_pairing_plan_odd,
)
from .messages import DeliverySchedule, MulticastMessage
from .placement import DemandClassification, Index, PlacementSpec, Subfile


class FallbackRequired(ValueError):
    """Raised when fewer than two users request high files (fallback required)."""


@dataclass
class CrossLevelSets:
    """Per-(high user i, low user j) bookkeeping behind steps 3-5.

    high_holds[(i, j)]     subfiles of j's file held (owned) by i; what step 3
                           delivers to j.
    low_holds[(i, j)]      subfiles of i's file whose index contains j.
    held_twice_high        ... of those, additionally held by another high
                           requester; candidates for withholding.
    held_by_zero           ... additionally held by a zero-level requester.
    low_exclusive[i]       subfiles of i's file held only by low requesters.
    low_exclusive_part     its balanced split across the low users.
    zero_carry             held_by_zero subfiles carried in the cross pool.
    overflow[(i, j)]       held_by_zero subfiles that spill to unicast.
    withheld[(i, j)]       held_twice_high subfiles kept out of the cross
                           pool and paired into step-4 messages instead.
    cross_pool[(i, j)]     what step 3 delivers to i; always the same size
                           as high_holds[(i, j)].
    """

    high_holds: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    low_holds: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    held_twice_high: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    held_by_zero: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    low_exclusive: dict[int, tuple[Subfile, ...]] = field(default_factory=dict)
    low_exclusive_part: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    zero_carry: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    overflow: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    withheld: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    cross_pool: dict[tuple[int, int], tuple[Subfile, ...]] = field(default_factory=dict)
    withhold_quota: dict[int, int] = field(default_factory=dict)
    pair_messages: tuple[MulticastMessage, ...] = ()
    leftover_unicast: MulticastMessage | None = None


def _withhold_quotas(classification: DemandClassification, K: int,
                     part_sizes: dict[int, int]) -> tuple[dict[int, int], dict[int, int]]:
    """Per-low-user withhold quota n_j and unicast overflow count."""
    kh, _, kr = classification.k
    h = (K - 1) // 2
    quotas: dict[int, int] = {}
    overflow: dict[int, int] = {}
    for j in classification.low_users:
        lam = part_sizes[j]
        overflow[j] = max(0, lam + kr - h)
        shortfall = max(0, h - lam - kr)
        quotas[j] = (kh - 1) - shortfall
    return quotas, overflow


def withheld_pairs_even(high_users: tuple[int, ...], quotas: dict[int, int],
                        classification: DemandClassification,
                        ) -> tuple[dict[tuple[int, int], list[Subfile]], list[MulticastMessage]]:
    """Withheld sets and step-4 messages for an even high-user count.

    For each low user ``j``, the union of the first ``n_j`` disjoint perfect
    matchings of the high users turns every pairing ``(i, k)`` into the
    message ``W(d_i, {k,j}) xor W(d_k, {i,j})``, putting exactly one subfile
    into each withheld set per matching.
    """
    if len(high_users) % 2:
        raise ValueError("even construction called with odd high-user count")
    rounds = one_factorization(high_users)
    withheld: dict[tuple[int, int], list[Subfile]] = {
        (i, j): [] for i in high_users for j in classification.low_users
    }
    msgs: list[MulticastMessage] = []
    for j in sorted(classification.low_users):
        n_j = quotas[j]
        if n_j > len(high_users) - 1:
            raise ValueError(f"quota {n_j} exceeds available disjoint matchings")
        for matching in rounds[:n_j]:
            for i, k in matching:
                sub_i = (classification.request(i), tuple(sorted((k, j))))
                sub_k = (classification.request(k), tuple(sorted((i, j))))
                withheld[(i, j)].append(sub_i)
                withheld[(k, j)].append(sub_k)
                msgs.append(MulticastMessage(parts=(sub_i, sub_k), step=4, targets=(i, k)))
    return withheld, msgs


def withheld_pairs_odd(high_users: tuple[int, ...], quotas: dict[int, int],
                       classification: DemandClassification,
                       ) -> tuple[dict[tuple[int, int], list[Subfile]],
                                  list[MulticastMessage], MulticastMessage | None]:
    """Withheld sets and step-4 messages for an odd high-user count.

    The high users admit no perfect matching, so even quotas come from the
    degree-two accumulation over the odd ground set, and the odd-quota low
    users each add one maximum matching plus a single direct subfile for the
    omitted high user.  Those direct subfiles are XORed across consecutive
    odd-quota users; with an odd number of them, the last one is unicast.
    """
    if len(high_users) % 2 == 0:
        raise ValueError("odd construction called with even high-user count")
    values = sorted(set(quotas.values()))
    if len(values) > 2 or (len(values) == 2 and values[1] - values[0] != 1):
        raise ValueError(f"quotas must take at most two consecutive values, got {values}")
    odd_group = tuple(sorted(j for j, n in quotas.items() if n % 2))
    even_group = tuple(sorted(j for j, n in quotas.items() if n % 2 == 0))
    n_odd = quotas[odd_group[0]] if odd_group else 0
    n_even = quotas[even_group[0]] if even_group else 0
    near = near_one_factorization(high_users)
    reference = reference_matching(high_users)

    plans: dict[int, list[Pair]] = {}
    for j in even_group:
        plans[j] = list(uniform_pairing_plan_odd(high_users, n_even))
    base_odd = list(uniform_pairing_plan_odd(high_users, n_odd - 1)) if odd_group else []
    withheld: dict[tuple[int, int], list[Subfile]] = {
        (i, j): [] for i in high_users for j in classification.low_users
    }
    cross_msgs: list[MulticastMessage] = []
    leftover: MulticastMessage | None = None
    pending: Subfile | None = None
    pending_target: int | None = None
    if odd_group:
        anchor = reference[ceil(n_odd / 2) - 1]
        i, k = anchor
        for ind, j in enumerate(odd_group, start=1):
            if ind % 2:
                plans[j] = base_odd + list(near[i])
                extra = (classification.request(i), tuple(sorted((k, j))))
                withheld[(i, j)].append(extra)
                pending, pending_target = extra, i
            else:
                plans[j] = base_odd + list(near[k])
                extra = (classification.request(k), tuple(sorted((i, j))))
                withheld[(k, j)].append(extra)
                cross_msgs.append(MulticastMessage(
                    parts=(pending, extra), step=4, targets=(pending_target, k)))
                pending = None
        if pending is not None:
            leftover = MulticastMessage(parts=(pending,), step=4, targets=(pending_target,))

    msgs: list[MulticastMessage] = []
    for j in sorted(classification.low_users):
        for i, k in sorted(plans[j]):
            sub_i = (classification.request(i), tuple(sorted((k, j))))
            sub_k = (classification.request(k), tuple(sorted((i, j))))
            withheld[(i, j)].append(sub_i)
            withheld[(k, j)].append(sub_k)
            msgs.append(MulticastMessage(parts=(sub_i, sub_k), step=4, targets=(i, k)))
    return withheld, msgs + cross_msgs, leftover


def derive_cross_sets(placement: PlacementSpec,
                      classification: DemandClassification) -> CrossLevelSets:
    """Build all per-(high, low) bookkeeping sets plus the step-4 pairings."""
    if placement.t != 2:
        raise ValueError("cross-level construction is defined for t == 2 placements")
    kh, kl, kr = classification.k
    if kh < 2:
        raise FallbackRequired("fallback required: fewer than two high-level requesters")
    K = placement.K
    h = (K - 1) // 2
    high = classification.high_users
    low = classification.low_users
    zero = set(classification.zero_users)
    cs = CrossLevelSets()

    parts = balanced_edge_partition(all_pairs(low), low) if low else {}
    part_sizes = {j: len(parts[j]) for j in low}
    quotas, overflow_counts = _withhold_quotas(classification, K, part_sizes)
    cs.withhold_quota = quotas

    for i in high:
        d_i = classification.request(i)
        cs.low_exclusive[i] = tuple(sorted(
            (d_i, tuple(sorted(p))) for p in all_pairs(low)))
        for j in low:
            d_j = classification.request(j)
            cs.high_holds[(i, j)] = tuple(
                (d_j, ix) for ix in placement.owned_indices(i))
            lows = [(d_i, tuple(sorted((x, j)))) for x in range(1, K + 1) if x not in (i, j)]
            cs.low_holds[(i, j)] = tuple(sorted(lows))
            cs.held_twice_high[(i, j)] = tuple(
                s for s in cs.low_holds[(i, j)]
                if any(x in high and x != i for x in s[1]))
            cs.held_by_zero[(i, j)] = tuple(
                s for s in cs.low_holds[(i, j)] if any(x in zero for x in s[1]))
            cs.low_exclusive_part[(i, j)] = tuple(sorted(
                (d_i, tuple(sorted(p))) for p in parts[j]))
            z = cs.held_by_zero[(i, j)]
            keep = len(z) - overflow_counts[j]
            cs.zero_carry[(i, j)] = z[:keep]
            cs.overflow[(i, j)] = z[keep:]

    if low:
        if kh % 2 == 0:
            withheld, msgs = withheld_pairs_even(high, quotas, classification)
            leftover = None
        else:
            withheld, msgs, leftover = withheld_pairs_odd(high, quotas, classification)
    else:
        withheld, msgs, leftover = {}, [], None
    cs.pair_messages = tuple(msgs)
    cs.leftover_unicast = leftover

    for i in high:
        for j in low:
            w = tuple(sorted(withheld[(i, j)]))
            cs.withheld[(i, j)] = w
            assert len(w) == quotas[j], f"withheld size mismatch at {(i, j)}"
            twice = set(cs.held_twice_high[(i, j)])
            assert set(w) <= twice, f"withheld subfile outside its candidate set at {(i, j)}"
            pool = sorted(set(cs.low_exclusive_part[(i, j)])
                          | set(cs.zero_carry[(i, j)])
                          | (twice - set(w)))
            cs.cross_pool[(i, j)] = tuple(pool)
            assert len(pool) == h, f"cross pool size {len(pool)} != {h} at {(i, j)}"
    return cs


def _step1_messages(classification: DemandClassification) -> list[MulticastMessage]:
    pool = sorted(set(classification.high_users) | set(classification.zero_users))
    zero = set(classification.zero_users)
    msgs = []
    for S in combinations(pool, 3):
        hs = [u for u in S if u not in zero]
        if not hs:
            continue
        parts = tuple((classification.request(u), tuple(sorted(set(S) - {u}))) for u in hs)
        msgs.append(MulticastMessage(parts=parts, step=1, targets=tuple(hs)))
    return msgs


def _owned_subfiles(placement: PlacementSpec, holder: int, file_id: int) -> list[Subfile]:
    return [(file_id, ix) for ix in placement.owned_indices(holder)]


def _pairwise_exchange(placement: PlacementSpec, classification: DemandClassification,
                       users: tuple[int, ...], step: int) -> list[MulticastMessage]:
    """One message per owned-subfile pair between every two requesters."""
    msgs = []
    for j, k in combinations(sorted(users), 2):
        of_k_at_j = _owned_subfiles(placement, j, classification.request(k))
        of_j_at_k = _owned_subfiles(placement, k, classification.request(j))
        for a, b in zip(of_k_at_j, of_j_at_k):
            msgs.append(MulticastMessage(parts=(a, b), step=step, targets=(j, k)))
    return msgs


def _zero_level_files(placement: PlacementSpec,
                      classification: DemandClassification) -> list[MulticastMessage]:
    from .placement import all_indices

    msgs = []
    for r in sorted(classification.zero_users):
        f = classification.request(r)
        for ix in all_indices(placement.K, placement.t):
            msgs.append(MulticastMessage(parts=((f, ix),), step=5, targets=(r,)))
    return msgs


def _fallback_schedule(placement: PlacementSpec,
                       classification: DemandClassification) -> DeliverySchedule:
    """All cached requests served pairwise, as if every file were low-level.

    Used when fewer than two users request high files; the lone high
    request (if any) is simply treated as low.  Rate with no zero-level
    requests is exactly (K-1)/2.
    """
    served = tuple(sorted(set(classification.high_users) | set(classification.low_users)))
    msgs = _pairwise_exchange(placement, classification, served, step=2)
    for u in served:
        f = classification.request(u)
        for r in sorted(classification.zero_users):
            for s in _owned_subfiles(placement, r, f):
                msgs.append(MulticastMessage(parts=(s,), step=5, targets=(u,)))
    return DeliverySchedule(
        K=placement.K, t=placement.t, messages=tuple(msgs),
        zero_level_messages=tuple(_zero_level_files(placement, classification)))


def build_schedule(placement: PlacementSpec,
                   classification: DemandClassification) -> DeliverySchedule:
    """Full cross-level delivery schedule for one demand vector."""
    if placement.t != 2:
        raise ValueError("this scheduler handles t == 2 placements")
    kh, kl, kr = classification.k
    if kh + kl + kr != placement.K:
        raise ValueError("classification does not match the placement's user count")
    if kh < 2:
        return _fallback_schedule(placement, classification)

    msgs: list[MulticastMessage] = []
    msgs.extend(_step1_messages(classification))
    msgs.extend(_pairwise_exchange(placement, classification, classification.low_users, step=2))

    cs = derive_cross_sets(placement, classification)
    for i in classification.high_users:
        for j in classification.low_users:
            for a, b in zip(cs.cross_pool[(i, j)], cs.high_holds[(i, j)]):
                msgs.append(MulticastMessage(parts=(a, b), step=3, targets=(i, j)))
    msgs.extend(cs.pair_messages)
    if cs.leftover_unicast is not None:
        msgs.append(cs.leftover_unicast)
    for j in sorted(classification.low_users):
        f = classification.request(j)
        for r in sorted(classification.zero_users):
            for s in _owned_subfiles(placement, r, f):
                msgs.append(MulticastMessage(parts=(s,), step=5, targets=(j,)))
    for i in classification.high_users:
        for j in classification.low_users:
            for s in cs.overflow[(i, j)]:
                msgs.append(MulticastMessage(parts=(s,), step=5, targets=(i,)))
    return DeliverySchedule(
        K=placement.K, t=placement.t, messages=tuple(msgs),
        zero_level_messages=tuple(_zero_level_files(placement, classification)))


def missing_subfile_count(k: tuple[int, int], K: int) -> int:
    """Total subfiles missing at their requesters, no zero-level requests."""
    kh, kl = k
    return (K - 1) * (K * K - 2 * kh - kl) // 2


def rate_formula_cl21(k: tuple[int, int], K: int) -> Fraction:
    """Closed-form delivery rate with no uncached tier.

    With at least two high requesters the conventional triples serve three
    subfiles per message and everything else is paired off at gain two, so
    the rate is (triples + ceil(rest / 2)) / C(K, 2); otherwise every
    request is served pairwise at rate (K-1)/2.
    """
    kh, kl = k
    if kh + kl != K:
        raise ValueError("k must sum to K")
    if kh < 2:
        return Fraction(K - 1, 2)
    triples = comb(kh, 3)
    rest = missing_subfile_count(k, K) - 3 * triples
    return Fraction(triples + ceil(Fraction(rest, 2)), comb(K, 2))


def count_messages_cl210(k: tuple[int, int, int], K: int) -> tuple[int, Fraction]:
    """Transmitted message count and rate with an uncached tier.

    Mirrors the constructed schedule exactly: conventional triples among
    high/zero requesters, pairwise low exchange, cross-level pairs, paired
    withheld subfiles (odd total rounded up), and the unicast spillover.
    Falls back to the pairwise count when fewer than two high requesters.
    """
    kh, kl, kr = k
    if kh + kl + kr != K:
        raise ValueError("k must sum to K")
    h = (K - 1) // 2
    if kh < 2:
        a = kh + kl
        n_t = (comb(a, 2) + a * kr) * h
        return n_t, Fraction(n_t, comb(K, 2)) + kr
    if kl:
        lam_lo = (kl - 1) // 2
        sizes = [lam_lo + 1] * (kl // 2) + [lam_lo] * (kl - kl // 2) if kl % 2 == 0 \
            else [lam_lo] * kl
    else:
        sizes = []
    total_quota = 0
    total_overflow = 0
    for lam in sizes:
        total_overflow += max(0, lam + kr - h)
        total_quota += (kh - 1) - max(0, h - lam - kr)
    step1 = comb(kh + kr, 3) - comb(kr, 3)
    step2 = h * comb(kl, 2)
    step3 = h * kh * kl
    step4 = ceil(Fraction(kh * total_quota, 2))
    step5 = kl * kr * h + kh * total_overflow
    n_t = step1 + step2 + step3 + step4 + step5
    return n_t, Fraction(n_t, comb(K, 2)) + kr
