"""Graphs with port numbering, neighborhood models, heaviness oracles and generators.

Vertices carry integer IDs from ``[0, n_prime - 1]``. The neighbor list stored
for each vertex *is* its local port numbering: port ``p`` of ``v`` leads to
``graph.ports[v][p]``.
"""

from __future__ import annotations

import enum
import math
import random
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import GraphError, InstanceError

FAMILIES = ("clique", "random-min-degree", "double-star", "glued-cliques", "distance2-pair")

# Rejection cap for the random-min-degree family.
MAX_GENERATION_ATTEMPTS = 64


class NeighborhoodModel(enum.Enum):
    """What an agent learns from the port view of its current vertex."""

    KT1 = "kt1"
    PORT_ONLY = "portonly"

    def port_view(self, graph: "Graph", v: int) -> tuple:
        if self is NeighborhoodModel.KT1:
            return graph.ports[v]
        return tuple(range(graph.degree(v)))


class Graph:
    """Immutable undirected simple graph with a port numbering per vertex."""

    def __init__(self, n_prime: int, ports: Mapping[int, Sequence[int]]):
        self.n = len(ports)
        self.n_prime = n_prime
        self.vertices = tuple(sorted(ports))
        self.ports = {v: tuple(ports[v]) for v in self.vertices}
        self._nbrs = {v: frozenset(p) for v, p in self.ports.items()}
        self._validate()

    def _validate(self):
        if self.n_prime < self.n:
            raise GraphError(f"n_prime={self.n_prime} is smaller than n={self.n}")
        for v, plist in self.ports.items():
            if not (0 <= v < self.n_prime):
                raise GraphError(f"vertex {v} outside ID range [0, {self.n_prime - 1}]")
            if len(self._nbrs[v]) != len(plist):
                raise GraphError(f"vertex {v} lists a neighbor twice")
            for u in plist:
                if u == v:
                    raise GraphError(f"self-loop at vertex {v}")
                if u not in self._nbrs:
                    raise GraphError(f"vertex {v} lists unknown neighbor {u}")
                if v not in self._nbrs[u]:
                    raise GraphError(f"edge ({v}, {u}) is not symmetric")

    def __repr__(self):
        return f"Graph(n={self.n}, n_prime={self.n_prime}, m={self.num_edges})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_prime == other.n_prime and self.ports == other.ports

    def __hash__(self):
        return hash((self.n_prime, self.vertices, self.num_edges))

    def __contains__(self, v):
        return v in self._nbrs

    def neighbors(self, v: int) -> frozenset:
        return self._nbrs[v]

    def closed_neighborhood(self, v: int) -> frozenset:
        return self._nbrs[v] | {v}

    def closed_neighborhood_of(self, vertices: Iterable[int]) -> set:
        out = set()
        for v in vertices:
            out.add(v)
            out.update(self._nbrs[v])
        return out

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def port_of(self, v: int, u: int) -> int:
        """Port index at ``v`` of the edge towards ``u``."""
        return self.ports[v].index(u)

    def edges(self):
        for v in self.vertices:
            for u in self.ports[v]:
                if v < u:
                    yield (v, u)

    @cached_property
    def num_edges(self) -> int:
        return sum(len(p) for p in self.ports.values()) // 2

    @cached_property
    def delta(self) -> int:
        return min((len(p) for p in self.ports.values()), default=0)

    @cached_property
    def Delta(self) -> int:
        return max((len(p) for p in self.ports.values()), default=0)

    def distances_from(self, src: int, limit: int | None = None) -> dict[int, int]:
        """BFS hop distances from ``src``, optionally truncated at ``limit`` hops."""
        dist = {src: 0}
        frontier = deque([src])
        while frontier:
            v = frontier.popleft()
            d = dist[v]
            if limit is not None and d >= limit:
                continue
            for u in self.ports[v]:
                if u not in dist:
                    dist[u] = d + 1
                    frontier.append(u)
        return dist

    def distance(self, u: int, v: int) -> float:
        return self.distances_from(u).get(v, math.inf)


def build_graph(
    n: int,
    n_prime: int,
    edges: Iterable[tuple[int, int]],
    port_order: Mapping[int, Sequence[int]] | None = None,
    vertices: Iterable[int] | None = None,
) -> Graph:
    """Build a graph from an edge list.

    Ports default to ascending neighbor ID. ``port_order`` overrides the order
    for any subset of vertices; each override must be a permutation of the
    vertex's neighbors. Without ``vertices`` the vertex set is inferred from
    the edges and ``port_order``, falling back to ``range(n)`` for isolated IDs.
    """
    adj: dict[int, set[int]] = {}
    seen = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        for x in (u, v):
            if not 0 <= x < n_prime:
                raise GraphError(f"vertex {x} outside ID range [0, {n_prime - 1}]")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphError(f"duplicate edge {key}")
        seen.add(key)
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    if vertices is None:
        vset = set(adj) | set(port_order or ())
        if len(vset) < n and all(x < n for x in vset):
            vset = set(range(n))
    else:
        vset = {int(x) for x in vertices}
        stray = set(adj) - vset
        if stray:
            raise GraphError(f"edge endpoint {min(stray)} is not a listed vertex")
    if len(vset) != n:
        raise GraphError(f"expected {n} vertices, found {len(vset)}")

    ports = {v: sorted(adj.get(v, ())) for v in vset}
    for v, order in (port_order or {}).items():
        if v not in ports:
            raise GraphError(f"port order given for unknown vertex {v}")
        order = [int(u) for u in order]
        if sorted(order) != ports[v]:
            raise GraphError(f"port order at vertex {v} is not a permutation of its neighbors")
        ports[v] = order
    return Graph(n_prime, ports)


def from_ports(n_prime: int, ports: Mapping[int, Sequence[int]]) -> Graph:
    return Graph(n_prime, ports)


def heavy_set(graph: Graph, T: Iterable[int], alpha: float) -> set[int]:
    """Vertices ``v`` with ``|T ∩ N+(v)| >= alpha``."""
    counts = overlap_counts(graph, T)
    return {v for v in graph.vertices if counts.get(v, 0) >= alpha}


def light_set(graph: Graph, T: Iterable[int], alpha: float) -> set[int]:
    counts = overlap_counts(graph, T)
    return {v for v in graph.vertices if counts.get(v, 0) < alpha}


def overlap_counts(graph: Graph, T: Iterable[int]) -> dict[int, int]:
    """``|T ∩ N+(v)|`` for every ``v`` with a nonzero count."""
    counts: dict[int, int] = {}
    for t in set(T):
        if t not in graph:
            raise GraphError(f"vertex {t} is not in the graph")
        counts[t] = counts.get(t, 0) + 1
        for v in graph.ports[t]:
            counts[v] = counts.get(v, 0) + 1
    return counts


@dataclass(frozen=True)
class DenseReport:
    ok: bool
    failed: str | None = None  # "start", "radius" or "heaviness"
    witness: int | None = None

    def __bool__(self):
        return self.ok


def is_dense(graph: Graph, z_start: int, T: Iterable[int], alpha: float, beta: float) -> DenseReport:
    """Check the three conditions of a (z, alpha, beta)-dense set rooted at ``z_start``."""
    if z_start not in graph:
        raise GraphError(f"vertex {z_start} is not in the graph")
    T = set(T)
    if z_start not in T:
        return DenseReport(False, "start", z_start)
    dist = graph.distances_from(z_start, limit=math.floor(beta))
    for w in sorted(T):
        if dist.get(w, math.inf) > beta:
            return DenseReport(False, "radius", w)
    heavy = heavy_set(graph, T, alpha)
    for u in graph.ports[z_start] + (z_start,):
        if u not in heavy:
            return DenseReport(False, "heaviness", u)
    return DenseReport(True)


def shortest_paths_within(graph: Graph, src: int, radius: int) -> dict[int, tuple[int, ...]]:
    """BFS paths of at most ``radius`` hops from ``src``, explored in port order."""
    parent = {src: None}
    depth = {src: 0}
    frontier = deque([src])
    while frontier:
        v = frontier.popleft()
        if depth[v] >= radius:
            continue
        for u in graph.ports[v]:
            if u not in parent:
                parent[u] = v
                depth[u] = depth[v] + 1
                frontier.append(u)
    paths = {}
    for v in parent:
        path = [v]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        paths[v] = tuple(reversed(path))
    return paths


# -- instance generators ----------------------------------------------------


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    n: int
    n_prime: int | None = None
    target_delta: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InstanceError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        n = self.n
        if self.n_prime is not None and self.n_prime < n:
            raise InstanceError(f"n_prime={self.n_prime} is smaller than n={n}")
        if self.family == "clique" and n < 2:
            raise InstanceError("clique needs n >= 2")
        if self.family == "random-min-degree":
            if self.target_delta is None or not 1 <= self.target_delta <= n - 1:
                raise InstanceError("random-min-degree needs 1 <= target_delta <= n - 1")
        if self.family == "double-star" and (n % 2 or n < 4):
            raise InstanceError("double-star needs an even n >= 4")
        if self.family == "glued-cliques" and (n % 2 or n < 6):
            raise InstanceError("glued-cliques needs an even n >= 6")
        if self.family == "distance2-pair" and (n % 2 == 0 or n < 5):
            raise InstanceError("distance2-pair needs an odd n >= 5")

    @property
    def id_bound(self) -> int:
        return self.n if self.n_prime is None else self.n_prime


def gen_family(spec: InstanceSpec) -> tuple[Graph, tuple[int, int]]:
    """Generate the instance described by ``spec`` with its designated start pair."""
    rng = random.Random(spec.seed)
    build = {
        "clique": _gen_clique,
        "random-min-degree": _gen_random_min_degree,
        "double-star": _gen_double_star,
        "glued-cliques": _gen_glued_cliques,
        "distance2-pair": _gen_distance2_pair,
    }[spec.family]
    return build(spec, rng)


def _labels(spec, rng):
    """Vertex IDs: 0..n-1 unless a wider ID space was requested."""
    if spec.id_bound == spec.n:
        return list(range(spec.n))
    return sorted(rng.sample(range(spec.id_bound), spec.n))


def _gen_clique(spec, rng):
    ids = _labels(spec, rng)
    edges = [(u, v) for i, u in enumerate(ids) for v in ids[i + 1:]]
    g = build_graph(spec.n, spec.id_bound, edges, vertices=ids)
    a, b = rng.sample(ids, 2)
    return g, (a, b)


def edge_probability_for_min_degree(n: int, target: int, slack: float = 0.25) -> float:
    """Smallest p for which G(n, p) has min degree >= target with probability about 1 - slack.

    Uses the union bound ``n * P[Bin(n-1, p) < target] <= slack``.
    """
    if target <= 0:
        return 0.0

    def excess(p):
        return n * stats.binom.cdf(target - 1, n - 1, p) - slack

    lo, hi = target / (n - 1), 1.0
    if excess(lo) <= 0:
        return lo
    for _ in range(60):
        mid = (lo + hi) / 2
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def _gen_random_min_degree(spec, rng):
    n, target = spec.n, spec.target_delta
    p = edge_probability_for_min_degree(n, target)
    np_rng = np.random.default_rng(rng.getrandbits(64))
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(MAX_GENERATION_ATTEMPTS):
        keep = np_rng.random(iu.size) < p
        deg = np.bincount(iu[keep], minlength=n) + np.bincount(ju[keep], minlength=n)
        if deg.min() >= target:
            break
    else:
        raise InstanceError(
            f"no graph with min degree >= {target} after {MAX_GENERATION_ATTEMPTS} attempts"
        )
    ids = _labels(spec, rng)
    edges = [(ids[i], ids[j]) for i, j in zip(iu[keep].tolist(), ju[keep].tolist())]
    g = build_graph(n, spec.id_bound, edges, vertices=ids)
    a = rng.choice(ids)
    b = rng.choice(g.ports[a])
    return g, (a, b)


def _gen_double_star(spec, rng):
    half = spec.n // 2
    lower, upper = list(range(half)), list(range(half, spec.n))
    j, k = rng.choice(upper), rng.choice(lower)
    edges = [(j, k)]
    edges += [(j, x) for x in lower if x != k]
    edges += [(k, x) for x in upper if x != j]
    return build_graph(spec.n, spec.id_bound, edges), (j, k)


def _gen_glued_cliques(spec, rng):
    half = spec.n // 2
    c1, c2 = list(range(half)), list(range(half, spec.n))
    va, x1 = rng.sample(c1, 2)
    vb, x2 = rng.sample(c2, 2)
    ports = {}
    for clique in (c1, c2):
        for v in clique:
            ports[v] = [u for u in clique if u != v]
    # Swap the far endpoint of each rewired edge in place so port indices survive.
    for v, old, new in ((va, x1, vb), (x1, va, x2), (vb, x2, va), (x2, vb, x1)):
        ports[v][ports[v].index(old)] = new
    edges = {(min(v, u), max(v, u)) for v, plist in ports.items() for u in plist}
    return build_graph(spec.n, spec.id_bound, sorted(edges), port_order=ports), (va, vb)


def _gen_distance2_pair(spec, rng):
    h = (spec.n + 1) // 2
    ids = list(range(spec.n))
    rng.shuffle(ids)
    c_prime, c_k = ids[:h], ids[h - 1:]
    x = ids[h - 1]
    edges = set()
    for clique in (c_prime, c_k):
        for i, u in enumerate(clique):
            for v in clique[i + 1:]:
                edges.add((min(u, v), max(u, v)))
    g = build_graph(spec.n, spec.id_bound, sorted(edges))
    a = rng.choice([v for v in c_k if v != x])
    b = rng.choice([v for v in c_prime if v != x])
    return g, (a, b)


def planted_pocket(n: int, d: int, pocket_size: int, seed: int = 0) -> tuple[Graph, int]:
    """Random graph with min degree exactly ``d`` plus ``pocket_size`` extra vertices of degree ``ceil(d/4)``.

    Each pocket vertex hangs off ``ceil(d/4)`` neighbors of the returned start
    vertex, which has degree ``d``, so the pocket lies two hops from the start.
    Base graphs are redrawn until their min degree is exactly ``d``.
    """
    if pocket_size < 0 or d < 4:
        raise InstanceError("need d >= 4 and a nonnegative pocket size")
    rng = random.Random(seed)
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        base, _ = gen_family(InstanceSpec("random-min-degree", n, target_delta=d, seed=rng.getrandbits(32)))
        if base.delta == d:
            break
    else:
        raise InstanceError(f"no base graph with min degree exactly {d}")
    v0 = min(v for v in base.vertices if base.degree(v) == d)
    edges = set(base.edges())
    nbrs = sorted(base.neighbors(v0))
    k = math.ceil(d / 4)
    for i in range(pocket_size):
        edges.update((y, n + i) for y in rng.sample(nbrs, k))
    return build_graph(n + pocket_size, n + pocket_size, sorted(edges)), v0


# -- text format ------------------------------------------------------------


def format_graph(graph: Graph, starts: tuple[int, int] | None = None) -> str:
    lines = [f"{graph.n} {graph.n_prime}"]
    for v in graph.vertices:
        lines.append(f"{v}:" + "".join(f" {u}" for u in graph.ports[v]))
    if starts is not None:
        lines.append(f"starts: {starts[0]} {starts[1]}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> tuple[Graph, tuple[int, int] | None]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GraphError("empty graph file")
    for i, line in enumerate(lines, 1):
        if not line.strip():
            raise GraphError(f"blank line {i}")
    try:
        n, n_prime = (int(x) for x in lines[0].split())
    except ValueError:
        raise GraphError(f"bad header line {lines[0]!r}") from None
    starts = None
    body = lines[1:]
    if body and body[-1].startswith("starts:"):
        parts = body.pop()[len("starts:"):].split()
        if len(parts) != 2:
            raise GraphError("starts line needs exactly two vertices")
        starts = (int(parts[0]), int(parts[1]))
    if len(body) != n:
        raise GraphError(f"header announces {n} vertices but {len(body)} vertex lines follow")
    ports = {}
    for line in body:
        head, sep, rest = line.partition(":")
        if not sep:
            raise GraphError(f"vertex line without ':' {line!r}")
        try:
            v = int(head)
            nbrs = [int(x) for x in rest.split()]
        except ValueError:
            raise GraphError(f"non-decimal token in line {line!r}") from None
        if v in ports:
            raise GraphError(f"vertex {v} listed twice")
        ports[v] = nbrs
    g = Graph(n_prime, ports)
    if starts is not None:
        for s in starts:
            if s not in g:
                raise GraphError(f"start vertex {s} is not in the graph")
    return g, starts


def write_graph(path, graph: Graph, starts=None):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_graph(graph, starts))


def read_graph(path):
    with open(path, encoding="ascii") as fh:
        return parse_graph(fh.read())
