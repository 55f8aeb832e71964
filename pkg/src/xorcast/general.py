"""General level-t delivery: decomposition selection and schedule assembly.

A conventional multicast for a (t+1)-subset that mixes high and low
requesters can be *decomposed*: each high requester's subfile is instead
XORed with a subfile wanted by a low requester in the same subset, saving
one transmission per decomposed subset.  Choosing which subsets to
decompose is a binary program: selecting subset S requires pairing every
high requester i in S with some low requester j in S, and the pair pool
(i, j) holds only C(K-1, t-1)/t subfiles in total.

The exact solver is a depth-first branch and bound over the subset
indicator variables; pairing feasibility is maintained incrementally with
augmenting paths, independently per high user.  A greedy variant trades
optimality for speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb

from .messages import DeliverySchedule, MulticastMessage
from .placement import DemandClassification, PlacementSpec, Subfile

Sub = tuple[int, ...]  # sorted (t+1)-subset of user ids

DEFAULT_NODE_BUDGET = 10 ** 6


def pool_capacity(K: int, t: int) -> int:
    if comb(K, t) % K:
        raise ValueError(f"C({K},{t}) is not divisible by {K}")
    return comb(K - 1, t - 1) // t


def enumerate_decomposable(classification: DemandClassification, K: int, t: int) -> tuple[Sub, ...]:
    """All (t+1)-subsets containing at least one high and one low requester."""
    high = set(classification.high_users)
    low = set(classification.low_users)
    out = [S for S in combinations(range(1, K + 1), t + 1)
           if high.intersection(S) and low.intersection(S)]
    return tuple(out)


@dataclass
class DecompositionPlan:
    """A feasible selection of decomposed subsets with its pairings."""

    selected: tuple[Sub, ...]
    assignment: dict[tuple[Sub, int], int]
    capacity: int
    optimal: bool
    nodes: int = 0

    @property
    def objective(self) -> int:
        return len(self.selected)


def audit_plan(plan: DecompositionPlan, decomposable: tuple[Sub, ...],
               high_users: tuple[int, ...], low_users: tuple[int, ...]) -> None:
    """Assert the selection constraints hold; raises on any violation."""
    selected = set(plan.selected)
    if not selected <= set(decomposable):
        raise AssertionError("selected subset is not decomposable")
    high = set(high_users)
    low = set(low_users)
    per_pool: dict[tuple[int, int], int] = {}
    for (S, i), j in plan.assignment.items():
        if S not in selected:
            raise AssertionError("assignment for an unselected subset")
        if i not in high or i not in S:
            raise AssertionError("assignment source is not a high requester in S")
        if j not in low or j not in S:
            raise AssertionError("assignment target is not a low requester in S")
        per_pool[(i, j)] = per_pool.get((i, j), 0) + 1
    for S in selected:
        mu = len(high.intersection(S))
        assigned = sum(1 for (S2, _i) in plan.assignment if S2 == S)
        if assigned != mu:
            raise AssertionError(f"subset {S} assigned {assigned} of {mu} pairings")
    if any(c > plan.capacity for c in per_pool.values()):
        raise AssertionError("pool capacity exceeded")


class _PairingState:
    """Per-high-user b-matching of selected subsets onto low-user pools."""

    def __init__(self, high_users: tuple[int, ...], low_users: tuple[int, ...], cap: int):
        self.cap = cap
        self.low = set(low_users)
        self.holders: dict[int, dict[int, list[Sub]]] = {
            i: {j: [] for j in low_users} for i in high_users}

    def snapshot(self, users: tuple[int, ...]) -> dict[int, dict[int, list[Sub]]]:
        return {i: {j: list(s) for j, s in self.holders[i].items()} for i in users}

    def restore(self, snap: dict[int, dict[int, list[Sub]]]) -> None:
        for i, pools in snap.items():
            self.holders[i] = pools

    def _augment(self, i: int, S: Sub, visited: set[int]) -> bool:
        options = sorted(self.low.intersection(S))
        for j in options:
            if j not in visited and len(self.holders[i][j]) < self.cap:
                visited.add(j)
                self.holders[i][j].append(S)
                return True
        for j in options:
            if j in visited:
                continue
            visited.add(j)
            for S2 in list(self.holders[i][j]):
                if self._augment(i, S2, visited):
                    self.holders[i][j].remove(S2)
                    self.holders[i][j].append(S)
                    return True
        return False

    def try_select(self, S: Sub, high_in_S: list[int]) -> bool:
        """Route one unit per high user of S; rolls back if any fails."""
        snap = self.snapshot(tuple(high_in_S))
        for i in high_in_S:
            if not self._augment(i, S, set()):
                self.restore(snap)
                return False
        return True

    def assignment(self) -> dict[tuple[Sub, int], int]:
        out = {}
        for i, pools in self.holders.items():
            for j, subs in pools.items():
                for S in subs:
                    out[(S, i)] = j
        return out


def solve_decompositions_greedy(decomposable: tuple[Sub, ...],
                                classification: DemandClassification,
                                capacity: int) -> DecompositionPlan:
    """Greedy selection in descending multicast-gain order.

    Each subset is taken if its high requesters fit the residual pools,
    pairing every high user with the low user offering the most residual
    capacity.  Never beats the exact selection.
    """
    high = set(classification.high_users)
    low = set(classification.low_users)
    used: dict[tuple[int, int], int] = {}
    selected: list[Sub] = []
    assignment: dict[tuple[Sub, int], int] = {}
    order = sorted(decomposable, key=lambda S: (-len(high.intersection(S)), S))
    for S in order:
        picks: list[tuple[int, int]] = []
        ok = True
        for i in sorted(high.intersection(S)):
            choices = sorted(low.intersection(S),
                             key=lambda j: (-(capacity - used.get((i, j), 0)), j))
            j = choices[0]
            if capacity - used.get((i, j), 0) <= 0:
                ok = False
                break
            used[(i, j)] = used.get((i, j), 0) + 1
            picks.append((i, j))
        if ok:
            selected.append(S)
            for i, j in picks:
                assignment[(S, i)] = j
        else:
            for i, j in picks:
                used[(i, j)] -= 1
    return DecompositionPlan(selected=tuple(sorted(selected)), assignment=assignment,
                             capacity=capacity, optimal=False)


def solve_decompositions_exact(decomposable: tuple[Sub, ...],
                               classification: DemandClassification,
                               capacity: int,
                               node_budget: int = DEFAULT_NODE_BUDGET,
                               trace: list[str] | None = None) -> DecompositionPlan:
    """Maximize the number of decomposed subsets, exactly.

    Depth-first branch and bound on the subsets in descending gain order,
    include-branch first, warm-started from the greedy incumbent.  The
    bound packs remaining subsets, cheapest gain first, into the residual
    pool capacity.  If the node budget runs out the best incumbent is
    returned flagged non-optimal.
    """
    high = tuple(classification.high_users)
    low = tuple(classification.low_users)
    high_set, low_set = set(high), set(low)
    order = sorted(decomposable, key=lambda S: (-len(high_set.intersection(S)), S))
    mu = [len(high_set.intersection(S)) for S in order]
    n = len(order)
    # suffix_mus[p]: gains of order[p:], ascending, prefix-summed for the bound
    suffix: list[list[int]] = [[] for _ in range(n + 1)]
    for p in range(n - 1, -1, -1):
        suffix[p] = sorted(suffix[p + 1] + [mu[p]])
    prefix_sums: list[list[int]] = []
    for p in range(n + 1):
        sums = [0]
        for g in suffix[p]:
            sums.append(sums[-1] + g)
        prefix_sums.append(sums)

    greedy = solve_decompositions_greedy(decomposable, classification, capacity)
    best_objective = greedy.objective
    best_selected = list(greedy.selected)
    best_assignment = dict(greedy.assignment)

    state = _PairingState(high, low, capacity)
    total_capacity = capacity * len(high) * len(low)
    nodes = 0
    exhausted = False
    chosen: list[Sub] = []

    def residual() -> int:
        placed = sum(len(s) for pools in state.holders.values() for s in pools.values())
        return total_capacity - placed

    def bound(pos: int) -> int:
        res = residual()
        sums = prefix_sums[pos]
        lo, hi = 0, len(sums) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if sums[mid] <= res:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def dfs(pos: int) -> None:
        nonlocal nodes, best_objective, best_selected, best_assignment, exhausted
        if exhausted:
            return
        nodes += 1
        if nodes > node_budget:
            exhausted = True
            return
        if len(chosen) > best_objective:
            best_objective = len(chosen)
            best_selected = list(chosen)
            best_assignment = state.assignment()
        if pos == n:
            return
        b = bound(pos)
        if trace is not None:
            trace.append(f"node={nodes} pos={pos} count={len(chosen)} "
                         f"bound={len(chosen) + b} best={best_objective}")
        if len(chosen) + b <= best_objective:
            return
        S = order[pos]
        high_in_S = sorted(high_set.intersection(S))
        snap = state.snapshot(tuple(high_in_S))
        if state.try_select(S, high_in_S):
            chosen.append(S)
            dfs(pos + 1)
            chosen.pop()
            state.restore(snap)
        dfs(pos + 1)

    dfs(0)
    plan = DecompositionPlan(selected=tuple(sorted(best_selected)),
                             assignment=best_assignment, capacity=capacity,
                             optimal=not exhausted, nodes=nodes)
    audit_plan(plan, decomposable, high, low)
    return plan


def assemble_schedule(placement: PlacementSpec, classification: DemandClassification,
                      plan: DecompositionPlan) -> DeliverySchedule:
    """Turn a decomposition selection into a complete delivery schedule.

    Unselected subsets with a high requester go out as conventional XOR
    messages; each selected pairing spends the next unused subfile from its
    (high, low) pool; low requesters exchange owned subfiles pairwise; what
    remains (pool leftovers, zero-held subfiles, uncached files) is unicast.
    """
    K, t = placement.K, placement.t
    high = set(classification.high_users)
    low = set(classification.low_users)
    selected = set(plan.selected)
    msgs: list[MulticastMessage] = []
    for S in combinations(range(1, K + 1), t + 1):
        hs = sorted(high.intersection(S))
        if not hs or S in selected:
            continue
        parts = tuple((classification.request(u), tuple(sorted(set(S) - {u}))) for u in hs)
        msgs.append(MulticastMessage(parts=parts, step=1, targets=tuple(hs)))

    pools: dict[tuple[int, int], list[Subfile]] = {}
    cursor: dict[tuple[int, int], int] = {}
    for i in sorted(high):
        for j in sorted(low):
            f = classification.request(j)
            pools[(i, j)] = [(f, ix) for ix in placement.owned_indices(i)]
            cursor[(i, j)] = 0
    for S in sorted(selected):
        for i in sorted(high.intersection(S)):
            j = plan.assignment[(S, i)]
            pool = pools[(i, j)]
            if cursor[(i, j)] >= len(pool):
                raise AssertionError(f"pool ({i},{j}) exhausted; infeasible plan")
            partner = pool[cursor[(i, j)]]
            cursor[(i, j)] += 1
            own = (classification.request(i), tuple(sorted(set(S) - {i})))
            msgs.append(MulticastMessage(parts=(own, partner), step=3, targets=(i, j)))

    for j, k in combinations(sorted(low), 2):
        of_k_at_j = [(classification.request(k), ix) for ix in placement.owned_indices(j)]
        of_j_at_k = [(classification.request(j), ix) for ix in placement.owned_indices(k)]
        for a, b in zip(of_k_at_j, of_j_at_k):
            msgs.append(MulticastMessage(parts=(a, b), step=2, targets=(j, k)))

    for (i, j), pool in sorted(pools.items()):
        for s in pool[cursor[(i, j)]:]:
            msgs.append(MulticastMessage(parts=(s,), step=5, targets=(j,)))
    for j in sorted(low):
        f = classification.request(j)
        for r in sorted(classification.zero_users):
            for ix in placement.owned_indices(r):
                msgs.append(MulticastMessage(parts=((f, ix),), step=5, targets=(j,)))

    zero_msgs: list[MulticastMessage] = []
    from .placement import all_indices

    for r in sorted(classification.zero_users):
        f = classification.request(r)
        for ix in all_indices(K, t):
            zero_msgs.append(MulticastMessage(parts=((f, ix),), step=5, targets=(r,)))
    return DeliverySchedule(K=K, t=t, messages=tuple(msgs),
                            zero_level_messages=tuple(zero_msgs))


def message_count_general(k: tuple[int, int, int], K: int, t: int, objective: int) -> int:
    kh, kl, kr = k
    cap = pool_capacity(K, t)
    return (comb(K, t + 1) - comb(kr + kl, t + 1) - objective
            + cap * (kh * kl + kr * kl + comb(kl, 2)))


def rate_general(k: tuple[int, int, int], K: int, t: int, objective: int) -> Fraction:
    """Delivery rate from a solver objective; zero-level files add whole units."""
    return Fraction(message_count_general(k, K, t, objective), comb(K, t)) + k[2]


def _canonical_classification(K: int, k: tuple[int, int, int]) -> DemandClassification:
    kh, kl, kr = k
    return DemandClassification(
        d=tuple(0 for _ in range(K)),
        high_users=tuple(range(1, kh + 1)),
        low_users=tuple(range(kh + 1, kh + kl + 1)),
        zero_users=tuple(range(kh + kl + 1, K + 1)),
    )


@lru_cache(maxsize=None)
def class_objective(K: int, t: int, k: tuple[int, int, int], method: str = "exact",
                    node_budget: int = DEFAULT_NODE_BUDGET) -> int:
    """Decomposition objective for a demand class; symmetric in user labels."""
    cls = _canonical_classification(K, k)
    decomposable = enumerate_decomposable(cls, K, t)
    cap = pool_capacity(K, t)
    if method == "greedy":
        return solve_decompositions_greedy(decomposable, cls, cap).objective
    if method == "exact":
        return solve_decompositions_exact(decomposable, cls, cap, node_budget).objective
    raise ValueError(f"unknown solver method {method!r}")


def class_rate_general(K: int, t: int, k: tuple[int, int, int],
                       method: str = "exact") -> Fraction:
    return rate_general(k, K, t, class_objective(K, t, k, method))
