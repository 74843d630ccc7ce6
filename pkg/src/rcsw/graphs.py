"""Random regular graphs, edge colorings, grid patches, and partition helpers.

A degree-d regular graph with a proper d-edge-coloring fixes the two-qubit
layer structure of a random-geometry circuit: each color class is a set of
disjoint edges and becomes one layer of parallel two-qubit gates.  Grid
patches play the same role for planar circuits, with four direction classes
standing in for the coloring.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import DegreeError, ParityError, ParseError, RejectSignal

Edge = tuple[int, int]


def _canonical_edges(edges) -> tuple[Edge, ...]:
    out = sorted((min(u, v), max(u, v)) for u, v in edges)
    return tuple((int(u), int(v)) for u, v in out)


@dataclass(frozen=True)
class RegularGraph:
    """Simple d-regular graph on nodes 0..n-1 with canonically sorted edges."""

    n: int
    degree: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", _canonical_edges(self.edges))
        counts = [0] * self.n
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            counts[u] += 1
            counts[v] += 1
        if any(c != self.degree for c in counts):
            raise DegreeError("node degrees do not all equal the stated degree")

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj


@dataclass(frozen=True)
class ColoredGraph:
    """Regular graph plus a proper edge coloring with exactly `degree` colors."""

    graph: RegularGraph
    colors: tuple[int, ...]  # aligned with graph.edges

    def __post_init__(self):
        g = self.graph
        if len(self.colors) != len(g.edges):
            raise ValueError("colors must align one-to-one with edges")
        touched: set[tuple[int, int]] = set()
        for (u, v), c in zip(g.edges, self.colors):
            if not 0 <= c < g.degree:
                raise ValueError(f"color {c} out of range")
            for node in (u, v):
                if (c, node) in touched:
                    raise ValueError("coloring is not proper")
                touched.add((c, node))

    def layers(self) -> list[list[Edge]]:
        """Edges grouped by color; each group is a disjoint edge set."""
        out: list[list[Edge]] = [[] for _ in range(self.graph.degree)]
        for e, c in zip(self.graph.edges, self.colors):
            out[c].append(e)
        return out


@dataclass(frozen=True)
class GridSample:
    """Patch of the unit square lattice selected around the origin.

    The lattice is shifted so the origin sits at a plaquette center before
    the random offset and rotation are applied, then the n transformed sites
    closest to the origin are kept.  Edge colors 0..3 are the four direction
    classes: horizontal edges split by the parity of the left endpoint's
    column, vertical edges by the parity of the lower endpoint's row.
    """

    n: int
    offset: tuple[float, float]
    rotation: float
    lattice_points: tuple[tuple[int, int], ...]
    vertices: tuple[tuple[float, float], ...]
    edges: tuple[Edge, ...]
    edge_colors: tuple[int, ...]

    def layers(self) -> list[list[Edge]]:
        out: list[list[Edge]] = [[] for _ in range(4)]
        for e, c in zip(self.edges, self.edge_colors):
            out[c].append(e)
        return out


@dataclass(frozen=True)
class ExpansionBound:
    """Spectral-expansion quantities for random degree-d regular graphs."""

    n: int
    degree: int
    eta: float
    iso_lower: float
    rank_lower: float


def sample_regular_graph(n: int, d: int, seed) -> RegularGraph:
    """Sample a uniform-ish simple d-regular graph via stub pairing.

    Stubs are shuffled and paired; pairs that would form loops or parallel
    edges are thrown back and re-paired against the remaining pool.  If the
    pool reaches a dead end the whole attempt restarts.  Deterministic for a
    fixed seed.
    """
    if d < 1 or d >= n:
        raise DegreeError(f"degree {d} invalid for {n} nodes")
    if (n * d) % 2:
        raise ParityError(f"n*d = {n * d} is odd")
    rng = np.random.default_rng(seed)
    while True:
        edges = _pairing_attempt(n, d, rng)
        if edges is not None:
            return RegularGraph(n, d, tuple(edges))


def _pairing_attempt(n: int, d: int, rng: np.random.Generator):
    edges: set[Edge] = set()
    stubs = list(range(n)) * d
    while stubs:
        rng.shuffle(stubs)
        leftover = []
        for i in range(0, len(stubs) - 1, 2):
            u, v = stubs[i], stubs[i + 1]
            if u > v:
                u, v = v, u
            if u == v or (u, v) in edges:
                leftover.extend((u, v))
            else:
                edges.add((u, v))
        if len(leftover) == len(stubs):
            # no pair was placed this round; check whether any placement is possible
            if not _has_suitable_pair(leftover, edges):
                return None
        stubs = leftover
    return edges


def _has_suitable_pair(stubs, edges) -> bool:
    nodes = sorted(set(stubs))
    for i, u in enumerate(nodes):
        for v in nodes[i + 1:]:
            if (u, v) not in edges:
                return True
    return False


def edge_color(g: RegularGraph, max_attempts: int = 64, seed=0) -> ColoredGraph:
    """Properly color g's edges with exactly g.degree colors.

    Peels one perfect matching per color.  Random edge weights steer the
    matching search so retries explore different decompositions; if every
    attempt stalls (the graph may have chromatic index d+1) RejectSignal is
    raised and the caller should resample the graph.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        colors = _try_peel_matchings(g, rng)
        if colors is not None:
            return ColoredGraph(g, tuple(colors))
    raise RejectSignal(
        f"no proper {g.degree}-edge-coloring found in {max_attempts} attempts"
    )


def _try_peel_matchings(g: RegularGraph, rng: np.random.Generator):
    edge_index = {e: i for i, e in enumerate(g.edges)}
    remaining = list(g.edges)
    colors = [-1] * len(g.edges)
    for color in range(g.degree):
        if not remaining:
            return None
        target = len({u for e in remaining for u in e}) // 2
        gg = nx.Graph()
        gg.add_nodes_from(range(g.n))
        for u, v in remaining:
            gg.add_edge(u, v, weight=float(rng.random()))
        matching = nx.max_weight_matching(gg, maxcardinality=True)
        if len(matching) < target:
            return None  # stalled; remaining graph has no perfect matching
        matched = {(min(u, v), max(u, v)) for u, v in matching}
        for e in matched:
            colors[edge_index[e]] = color
        remaining = [e for e in remaining if e not in matched]
    if remaining:
        return None
    return colors


def sample_colored_graph(n: int, d: int, seed) -> ColoredGraph:
    """Sample graphs until one admits a proper d-coloring; returns the coloring."""
    base = np.random.SeedSequence(seed)
    for child in base.spawn(256):
        g_seed, c_seed = child.spawn(2)
        g = sample_regular_graph(n, d, g_seed)
        try:
            return edge_color(g, seed=c_seed)
        except RejectSignal:
            continue
    raise RejectSignal(f"no colorable {d}-regular graph on {n} nodes after many tries")


def make_grid(n: int, offset: tuple[float, float], rotation: float) -> GridSample:
    """Deterministic grid patch for a given offset and rotation."""
    if n < 1:
        raise ValueError("need at least one vertex")
    ox, oy = float(offset[0]), float(offset[1])
    c, s = math.cos(rotation), math.sin(rotation)
    radius = int(math.ceil(math.sqrt(n / math.pi))) + 3
    candidates = []
    for ix in range(-radius, radius + 1):
        for iy in range(-radius, radius + 1):
            # plaquette-centered anchor: generic offsets make ties measure-zero
            px = ix - 0.5 + ox
            py = iy - 0.5 + oy
            tx = c * px - s * py
            ty = s * px + c * py
            candidates.append((tx * tx + ty * ty, ix, iy, tx, ty))
    candidates.sort()
    chosen = candidates[:n]
    lattice_points = tuple((ix, iy) for _, ix, iy, _, _ in chosen)
    vertices = tuple((tx, ty) for _, _, _, tx, ty in chosen)
    index = {p: i for i, p in enumerate(lattice_points)}
    edges = []
    edge_colors = []
    for (ix, iy), i in index.items():
        right = index.get((ix + 1, iy))
        if right is not None:
            edges.append((min(i, right), max(i, right)))
            edge_colors.append(0 if ix % 2 == 0 else 1)
        up = index.get((ix, iy + 1))
        if up is not None:
            edges.append((min(i, up), max(i, up)))
            edge_colors.append(2 if iy % 2 == 0 else 3)
    return GridSample(
        n=n,
        offset=(ox, oy),
        rotation=float(rotation),
        lattice_points=lattice_points,
        vertices=vertices,
        edges=tuple(edges),
        edge_colors=tuple(edge_colors),
    )


def sample_grid(n: int, seed) -> GridSample:
    """Random offset in the unit cell and rotation in [0, pi/2)."""
    rng = np.random.default_rng(seed)
    offset = (float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0)))
    rotation = float(rng.uniform(0.0, math.pi / 2.0))
    return make_grid(n, offset, rotation)


def expansion_bound(n: int, d: int) -> ExpansionBound:
    """Edge-expansion and contraction-rank lower bounds for random d-regular graphs.

    eta(d) = 2*sqrt(ln(2)/d); with high probability every balanced cut of a
    random d-regular graph has at least (d/2)(1-eta) boundary edges per node,
    which forces any contraction order to hit rank at least n(1-eta)/9.
    """
    if d < 1:
        raise DegreeError("degree must be positive")
    eta = 2.0 * math.sqrt(math.log(2.0) / d)
    return ExpansionBound(
        n=n,
        degree=d,
        eta=eta,
        iso_lower=(d / 2.0) * (1.0 - eta),
        rank_lower=n * (1.0 - eta) / 9.0,
    )


def edge_boundary(g: RegularGraph, subset) -> int:
    """Number of edges with exactly one endpoint in subset."""
    sub = set(int(v) for v in subset)
    if not sub <= set(range(g.n)):
        raise ValueError("subset contains nodes outside the graph")
    return sum(1 for u, v in g.edges if (u in sub) != (v in sub))


def partition_blocks(g: RegularGraph, b: int, seed=0) -> list[list[int]]:
    """Split nodes into b near-balanced blocks with few crossing edges."""
    return partition_nodes(g.n, list(g.edges), b, seed)


def partition_nodes(n: int, edges, b: int, seed=0) -> list[list[int]]:
    """Greedy balanced partition of nodes 0..n-1 minimizing crossing edge count.

    Edges may repeat; multiplicity acts as weight.  Starts from sequential
    chunks and hill-climbs with pairwise swaps, so the result never cuts more
    than the sequential chunking does.
    """
    if not 1 <= b <= n:
        raise ValueError(f"block count {b} invalid for {n} nodes")
    rng = np.random.default_rng(seed)
    base, rem = divmod(n, b)
    assign = np.empty(n, dtype=np.int64)
    pos = 0
    for j in range(b):
        size = base + (1 if j < rem else 0)
        assign[pos:pos + size] = j
        pos += size

    weight: dict[Edge, float] = {}
    for u, v in edges:
        key = (min(u, v), max(u, v))
        weight[key] = weight.get(key, 0.0) + 1.0
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for (u, v), w in weight.items():
        adj[u].append((v, w))
        adj[v].append((u, w))

    def gain(u: int, target: int) -> float:
        # cut reduction if u alone moved to block `target`
        g_same = sum(w for v, w in adj[u] if assign[v] == assign[u])
        g_tgt = sum(w for v, w in adj[u] if assign[v] == target)
        return g_tgt - g_same

    improved = True
    sweeps = 0
    while improved and sweeps < 60:
        improved = False
        sweeps += 1
        order = rng.permutation(n)
        for u in order:
            bu = assign[u]
            for v in rng.permutation(n):
                bv = assign[v]
                if bv == bu:
                    continue
                delta = gain(u, bv) + gain(v, bu)
                uv_w = weight.get((min(u, v), max(u, v)), 0.0)
                # swapping u and v keeps them adjacent across the new cut
                delta -= 2.0 * uv_w
                if delta > 1e-12:
                    assign[u], assign[v] = bv, bu
                    improved = True
                    break
    return [sorted(np.flatnonzero(assign == j).tolist()) for j in range(b)]


def graph_to_json(obj) -> dict:
    """Serialize a RegularGraph or ColoredGraph to a plain dict."""
    if isinstance(obj, ColoredGraph):
        g = obj.graph
        return {
            "n": g.n,
            "d": g.degree,
            "edges": [[u, v] for u, v in g.edges],
            "colors": list(obj.colors),
        }
    if isinstance(obj, RegularGraph):
        return {"n": obj.n, "d": obj.degree, "edges": [[u, v] for u, v in obj.edges]}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def graph_from_json(doc: dict):
    """Inverse of graph_to_json; returns ColoredGraph iff colors are present."""
    try:
        g = RegularGraph(int(doc["n"]), int(doc["d"]),
                         tuple((int(u), int(v)) for u, v in doc["edges"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad graph document: {exc}") from exc
    if "colors" in doc:
        try:
            return ColoredGraph(g, tuple(int(c) for c in doc["colors"]))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad graph colors: {exc}") from exc
    return g
