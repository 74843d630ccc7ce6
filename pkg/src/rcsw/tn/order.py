"""Contraction-order search.

Several candidate generators feed a best-of selection: two deterministic
sweeps (time order, which can never do worse than a statevector pass over
the circuit, and wire-major order, which is the right shape for chain-like
circuits), randomized size-reduction greedy, recursive balanced bisection,
and simulated-annealing refinement by subtree rotations and leaf swaps.
Budgets are spent as independently seeded trials, so a larger budget only
ever improves the returned tree.
"""
from __future__ import annotations

import heapq
import math
from collections import defaultdict

import numpy as np

from ..graphs import partition_nodes
from .network import TensorNetwork
from .tree import ContractionTree, analyze_merges, leg_sets

_PARTITION_CAP = 150  # above this, bisect by leaf order instead of hill-climbing


def _chain(order: list[int], n_leaves: int) -> list[tuple[int, int]]:
    merges = []
    cur = order[0]
    nxt = n_leaves
    for t in order[1:]:
        merges.append((cur, t))
        cur = nxt
        nxt += 1
    return merges


def _time_order(tn: TensorNetwork) -> list[int]:
    return list(range(tn.n_tensors))


def _wire_major_order(tn: TensorNetwork) -> list[int]:
    def key(t):
        pos, (qa, qb), half = tn.provenance[t]
        wire = qa if half == "a" else qb if half == "b" else min(qa, qb)
        return (wire, pos, half)

    return sorted(range(tn.n_tensors), key=key)


def _greedy_merges(legs, dims, rng, noise: float) -> list[tuple[int, int]]:
    """Pick the shared-index pair minimizing the merged size, repeatedly."""
    n_leaves = len(legs)
    log_dim = {i: math.log2(d) for i, d in dims.items()}

    def lsize(ls):
        return sum(log_dim[i] for i in ls)

    node = dict(enumerate(legs))
    nbrs: dict[int, set[int]] = defaultdict(set)
    owner: dict[int, list[int]] = defaultdict(list)
    for t, ls in enumerate(legs):
        for i in ls:
            owner[i].append(t)
    for pair in owner.values():
        if len(pair) == 2:
            a, b = pair
            nbrs[a].add(b)
            nbrs[b].add(a)

    def score(a, b):
        s = lsize(node[a] ^ node[b]) - lsize(node[a]) - lsize(node[b])
        return s + (noise * rng.standard_normal() if noise else 0.0)

    heap = []
    for a in node:
        for b in nbrs[a]:
            if a < b:
                heapq.heappush(heap, (score(a, b), rng.random(), a, b))

    merges = []
    nxt = n_leaves
    while len(node) > 1:
        pick = None
        while heap:
            _, _, a, b = heapq.heappop(heap)
            if a in node and b in node:
                pick = (a, b)
                break
        if pick is None:
            # disconnected parts: outer-product the survivors in id order
            rest = sorted(node)
            a, b = rest[0], rest[1]
            pick = (a, b)
        a, b = pick
        la, lb = node.pop(a), node.pop(b)
        w = nxt
        nxt += 1
        merges.append((a, b))
        node[w] = la ^ lb
        nbrs_w = (nbrs.pop(a, set()) | nbrs.pop(b, set())) - {a, b}
        nbrs[w] = set()
        for x in nbrs_w:
            if x in node:
                nbrs[x].discard(a)
                nbrs[x].discard(b)
                nbrs[x].add(w)
                nbrs[w].add(x)
                heapq.heappush(heap, (score(w, x), rng.random(), w, x))
    return merges


def _partition_merges(tn: TensorNetwork, dims, rng) -> list[tuple[int, int]]:
    """Recursive balanced bisection of the tensor graph."""
    owner: dict[int, list[int]] = defaultdict(list)
    for t, ids in enumerate(tn.indices):
        for i in ids:
            owner[i].append(t)

    merges: list[tuple[int, int]] = []
    nxt = tn.n_tensors

    def emit(a, b):
        nonlocal nxt
        merges.append((a, b))
        nxt += 1
        return nxt - 1

    def solve(group: list[int]) -> int:
        if len(group) == 1:
            return group[0]
        if len(group) <= 3:
            cur = group[0]
            for t in group[1:]:
                cur = emit(cur, t)
            return cur
        local = {t: j for j, t in enumerate(group)}
        if len(group) > _PARTITION_CAP:
            half = len(group) // 2
            blocks = [group[:half], group[half:]]
        else:
            edges = []
            for i, pair in owner.items():
                if len(pair) == 2 and pair[0] in local and pair[1] in local:
                    edges.append((local[pair[0]], local[pair[1]]))
            assign = partition_nodes(len(group), edges, 2,
                                     seed=int(rng.integers(2 ** 31)))
            blocks = [[group[j] for j in blk] for blk in assign]
            if not blocks[0] or not blocks[1]:
                half = len(group) // 2
                blocks = [group[:half], group[half:]]
        return emit(solve(blocks[0]), solve(blocks[1]))

    solve(list(range(tn.n_tensors)))
    return merges


class _TreeState:
    """Mutable rooted tree with incremental leg and cost bookkeeping."""

    def __init__(self, n_leaves, merges, legs, dims):
        self.n_leaves = n_leaves
        self.log_dim = {i: math.log2(d) for i, d in dims.items()}
        self.children: dict[int, tuple[int, int]] = {}
        self.legs: dict[int, frozenset] = {t: legs[t] for t in range(n_leaves)}
        self.cost: dict[int, float] = {}
        nxt = n_leaves
        for a, b in merges:
            self.children[nxt] = (a, b)
            self._refresh(nxt)
            nxt += 1
        self.root = nxt - 1
        self.total = sum(self.cost.values())

    def _lsize(self, ls):
        return sum(self.log_dim[i] for i in ls)

    def _refresh(self, p):
        a, b = self.children[p]
        la, lb = self.legs[a], self.legs[b]
        self.legs[p] = la ^ lb
        self.cost[p] = 8.0 * (2.0 ** (self._lsize(la ^ lb) + self._lsize(la & lb)))

    def rotate(self, p, rng, temperature) -> bool:
        a, b = self.children[p]
        inner = [c for c in (a, b) if c in self.children]
        if not inner:
            return False
        x = inner[rng.integers(len(inner))]
        other = b if x == a else a
        c, d = self.children[x]
        keep, move = (c, d) if rng.random() < 0.5 else (d, c)
        # (keep . move) . other  ->  keep . (move . other)
        old = self.cost[p] + self.cost[x]
        old_legs = self.legs[x]
        self.children[x] = (move, other)
        self.children[p] = (keep, x)
        self._refresh(x)
        self._refresh(p)
        delta = self.cost[p] + self.cost[x] - old
        if delta <= 0 or rng.random() < math.exp(-delta / (temperature * old + 1e-300)):
            self.total += delta
            return True
        self.children[x] = (c, d)
        self.children[p] = (a, b)
        self.legs[x] = old_legs
        self._refresh(x)
        self._refresh(p)
        self.total += self.cost[p] + self.cost[x] - old
        return False

    def merge_list(self) -> list[tuple[int, int]]:
        merges = []
        out_id: dict[int, int] = {}
        stack = [(self.root, False)]
        while stack:
            nodeid, ready = stack.pop()
            if nodeid < self.n_leaves:
                continue
            if ready:
                a, b = self.children[nodeid]
                ia = a if a < self.n_leaves else out_id[a]
                ib = b if b < self.n_leaves else out_id[b]
                merges.append((ia, ib))
                out_id[nodeid] = self.n_leaves + len(merges) - 1
            else:
                stack.append((nodeid, True))
                for ch in self.children[nodeid]:
                    stack.append((ch, False))
        return merges


def _anneal_merges(n_leaves, merges, legs, dims, rng,
                   sweeps: int = 24) -> list[tuple[int, int]]:
    state = _TreeState(n_leaves, merges, legs, dims)
    internal = [p for p in state.children]
    best = state.merge_list()
    best_total = state.total
    temperature = 1.0
    for _ in range(sweeps):
        for _ in range(len(internal)):
            p = internal[rng.integers(len(internal))]
            state.rotate(p, rng, temperature)
        if state.total < best_total:
            best_total = state.total
            best = state.merge_list()
        temperature *= 0.98
    return best


def _quotient(tn: TensorNetwork):
    """Gate-level view of a split network: halves pre-merged per gate.

    Returns (group leaf lists in time order, quotient legs) or None when
    every gate already is a single tensor.
    """
    if all(half == "ab" for _, _, half in tn.provenance):
        return None
    groups: dict[tuple, list[int]] = defaultdict(list)
    for t, (pos, pair, _half) in enumerate(tn.provenance):
        groups[(pos, pair)].append(t)
    keys = sorted(groups)
    legs = leg_sets(tn.indices)
    qlegs = []
    for k in keys:
        ls = frozenset()
        for t in groups[k]:
            ls = ls ^ legs[t]
        qlegs.append(ls)
    return [groups[k] for k in keys], qlegs


def _expand_quotient(qmerges, qgroups, n_leaves) -> list[tuple[int, int]]:
    """Lift a merge list over gate groups back to the full leaf set."""
    merges: list[tuple[int, int]] = []
    nxt = n_leaves

    def emit(a, b):
        nonlocal nxt
        merges.append((a, b))
        nxt += 1
        return nxt - 1

    node = []
    for members in qgroups:
        cur = members[0]
        for t in members[1:]:
            cur = emit(cur, t)
        node.append(cur)
    for a, b in qmerges:
        node.append(emit(node[a], node[b]))
    return merges


def optimize_order(tn: TensorNetwork, budget: int = 8, method: str = "greedy",
                   seed=0, sliced: tuple[int, ...] = ()) -> ContractionTree:
    """Search for a cheap contraction order.

    budget counts randomized trials; the deterministic sweep orders are
    always evaluated as well, so the result never costs more than a
    statevector-style pass.  Split networks also search gate-level orders
    with halves pre-merged, so splitting gates cannot hurt beyond the
    pre-merge cost itself.  With sliced indices given, the search prices
    them at dimension 1 and the returned stats describe one slice task.
    """
    if method not in ("greedy", "partition", "annealed"):
        raise ValueError(f"unknown method {method!r}")
    t_count = tn.n_tensors
    legs = leg_sets(tn.indices)
    if t_count == 0:
        tree = ContractionTree(0, [], sliced=tuple(sliced))
        return tree.attach_stats(legs, tn.dims)
    search_dims = {i: (1 if i in set(sliced) else d) for i, d in tn.dims.items()}

    def priced(merges):
        return analyze_merges(merges, legs, search_dims).total_flops

    candidates: list[list[tuple[int, int]]] = []
    if t_count == 1:
        candidates.append([])
    else:
        candidates.append(_chain(_time_order(tn), t_count))
        candidates.append(_chain(_wire_major_order(tn), t_count))
        quot = _quotient(tn)
        if quot is not None:
            qgroups, qlegs = quot
            if len(qgroups) == 1:
                candidates.append(_expand_quotient([], qgroups, t_count))
            else:
                for order in (list(range(len(qgroups))),):
                    candidates.append(_expand_quotient(
                        _chain(order, len(qgroups)), qgroups, t_count))
        ss = seed if isinstance(seed, np.random.SeedSequence) \
            else np.random.SeedSequence(seed)
        seeds = ss.spawn(max(budget, 0))
        for t, child in enumerate(seeds):
            rng = np.random.default_rng(child)
            if method == "partition":
                candidates.append(_partition_merges(tn, search_dims, rng))
                continue
            noise = 0.0 if t == 0 else float(rng.choice([0.2, 0.5, 1.0]))
            merges = _greedy_merges(legs, search_dims, rng, noise)
            if method == "annealed":
                merges = _anneal_merges(t_count, merges, legs,
                                        search_dims, rng)
            candidates.append(merges)
            if quot is not None and len(qgroups) > 1:
                qrng = np.random.default_rng(child)
                qmerges = _greedy_merges(qlegs, search_dims, qrng, noise)
                candidates.append(_expand_quotient(qmerges, qgroups, t_count))

    best = min(candidates, key=priced)
    tree = ContractionTree(t_count, best, sliced=tuple(sliced))
    return tree.attach_stats(legs, tn.dims)


def _gate_groups(tn: TensorNetwork):
    groups: dict[tuple, list[int]] = defaultdict(list)
    for t, (pos, pair, _half) in enumerate(tn.provenance):
        groups[(pos, pair)].append(t)
    return groups


def light_cone_order(tn: TensorNetwork,
                     final_pairing: list[tuple[int, int]] | None = None) -> ContractionTree:
    """Constructive order with a proven cap on the largest intermediate.

    Output pairs from the last two-qubit layer are retired one at a time;
    for each, the not-yet-contracted part of its backward cone is merged in
    time order.  Each cone touches at most 2^depth wires, and a retired
    pair closes both its wires, so the open wire count never exceeds
    n(1 - 2^{1-depth}) + 2, inside the n(1 - 2^{-depth}) + 2 budget.
    Split-gate halves are pre-merged so transients stay within the bound.
    """
    if tn.n_tensors == 0:
        return ContractionTree(0, []).attach_stats([], tn.dims)
    depth = tn.meta.get("depth", 0)
    groups = _gate_groups(tn)

    # wire -> its gates in time order
    wire_gates: dict[int, list[tuple]] = defaultdict(list)
    for pos, pair in sorted(groups):
        for q in pair:
            wire_gates[q].append((pos, pair))

    def predecessors(key):
        pos, pair = key
        preds = []
        for q in pair:
            seq = wire_gates[q]
            j = seq.index(key)
            if j > 0:
                preds.append(seq[j - 1])
        return preds

    def cone(key):
        out = set()
        stack = [key]
        while stack:
            k = stack.pop()
            if k in out:
                continue
            out.add(k)
            stack.extend(predecessors(k))
        return out

    if final_pairing is not None:
        finals = [(depth - 1, tuple(sorted(p))) for p in final_pairing]
        for f in finals:
            if f not in groups:
                raise ValueError(f"pair {f[1]} is not in the final layer")
    else:
        finals = [k for k in sorted(groups) if k[0] == depth - 1]

    merges: list[tuple[int, int]] = []
    nxt = tn.n_tensors

    def emit(a, b):
        nonlocal nxt
        merges.append((a, b))
        nxt += 1
        return nxt - 1

    gate_node: dict[tuple, int] = {}

    def node_for(key):
        if key not in gate_node:
            ts = groups[key]
            cur = ts[0]
            for t in ts[1:]:
                cur = emit(cur, t)
            gate_node[key] = cur
        return gate_node[key]

    done: set[tuple] = set()
    touched: set[int] = set()
    acc = None
    remaining = set(finals)
    while remaining:
        if acc is None:
            pick = min(remaining)
        else:
            pick = max(remaining,
                       key=lambda k: (len({q for g in cone(k) for q in g[1]}
                                          & touched), (-k[0], k[1])))
        remaining.discard(pick)
        new = sorted(cone(pick) - done)
        for key in new:
            node = node_for(key)
            acc = node if acc is None else emit(acc, node)
            done.add(key)
            touched.update(key[1])
    for key in sorted(set(groups) - done):
        node = node_for(key)
        acc = node if acc is None else emit(acc, node)
        done.add(key)

    tree = ContractionTree(tn.n_tensors, merges)
    return tree.attach_stats(leg_sets(tn.indices), tn.dims)
