"""Contraction trees and their cost accounting.

A tree over a closed network is a list of pairwise merges in static
single-assignment form: leaves are numbered 0..T-1 and merge step s
produces node T+s.  Because every index appears in exactly two tensors,
the legs of a merged node are the symmetric difference of its children's
legs.  Costs use 8*S*K real FLOPs for a complex contraction producing S
entries from a contracted dimension K.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


@dataclass
class TreeStats:
    flops: float
    width: float               # largest node size, leaves included
    max_rank: float            # log2 of the largest node size
    log2_flops: float
    sliced_multiplier: float   # product of sliced index dimensions
    total_flops: float         # sliced_multiplier * flops

    @property
    def log2_total(self) -> float:
        return math.log2(self.total_flops) if self.total_flops > 0 else 0.0

    @property
    def log2_width(self) -> float:
        return math.log2(self.width) if self.width > 0 else 0.0


def leg_sets(indices: list[tuple[int, ...]]) -> list[frozenset[int]]:
    return [frozenset(ids) for ids in indices]


def analyze_merges(merges, legs: list[frozenset[int]], dims: dict[int, int],
                   sliced: tuple[int, ...] = ()) -> TreeStats:
    """Walk a merge list and price it.

    Sliced indices are priced at dimension 1 (one fixed value per task);
    the stats then describe a single task and the total carries the
    task-count multiplier.
    """
    sliced_set = frozenset(sliced)

    def dim(i: int) -> int:
        return 1 if i in sliced_set else dims[i]

    def size(ls: frozenset[int]) -> float:
        s = 1.0
        for i in ls:
            s *= dim(i)
        return s

    if not legs and not merges:
        return TreeStats(flops=0.0, width=1.0, max_rank=0.0, log2_flops=0.0,
                         sliced_multiplier=1.0, total_flops=0.0)
    node: dict[int, frozenset[int]] = {t: ls for t, ls in enumerate(legs)}
    width = max((size(ls) for ls in legs), default=1.0)
    flops = 0.0
    nxt = len(legs)
    for a, b in merges:
        la, lb = node.pop(a), node.pop(b)
        parent = la ^ lb
        s = size(parent)
        k = size(la & lb)
        flops += 8.0 * s * k
        width = max(width, s)
        node[nxt] = parent
        nxt += 1
    if len(node) != 1 or next(iter(node.values())):
        raise ValueError("merge list does not contract the network to a scalar")
    mult = 1.0
    for i in sliced_set:
        mult *= dims[i]
    return TreeStats(
        flops=flops,
        width=width,
        max_rank=math.log2(width) if width > 0 else 0.0,
        log2_flops=math.log2(flops) if flops > 0 else 0.0,
        sliced_multiplier=mult,
        total_flops=mult * flops,
    )


@dataclass
class ContractionTree:
    """Merge order over a fixed network, with cached cost totals."""

    n_leaves: int
    merges: list[tuple[int, int]]
    sliced: tuple[int, ...] = ()
    stats: TreeStats | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_leaves >= 1 and len(self.merges) != self.n_leaves - 1:
            raise ValueError("a binary tree over T leaves has T-1 merges")
        seen = set()
        for s, (a, b) in enumerate(self.merges):
            top = self.n_leaves + s
            for x in (a, b):
                if not 0 <= x < top or x in seen:
                    raise ValueError(f"merge {s} reuses or forward-references {x}")
                seen.add(x)

    def analyze(self, legs, dims, sliced=None) -> TreeStats:
        use = self.sliced if sliced is None else tuple(sliced)
        return analyze_merges(self.merges, legs, dims, use)

    def attach_stats(self, legs, dims) -> "ContractionTree":
        self.stats = self.analyze(legs, dims)
        return self

    def to_json(self) -> str:
        doc = {"n_leaves": self.n_leaves,
               "merges": [list(m) for m in self.merges],
               "sliced": list(self.sliced)}
        if self.stats is not None:
            doc["log2_flops"] = self.stats.log2_flops
            doc["log2_width"] = self.stats.log2_width
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ContractionTree":
        doc = json.loads(text)
        return cls(n_leaves=int(doc["n_leaves"]),
                   merges=[tuple(m) for m in doc["merges"]],
                   sliced=tuple(doc.get("sliced", [])))


def analyze_tree(tree: ContractionTree, tn) -> TreeStats:
    """Recompute a tree's stats directly from its network."""
    return tree.analyze(leg_sets(tn.indices), tn.dims)
