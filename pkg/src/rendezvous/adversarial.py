"""Lower-bound instances: structure audits for the fixed hard families and the
adaptive adversary that keeps a deterministic agent away from a large set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import InstanceError, NondeterministicProgramError, RendezvousError
from .graphcore import Graph, NeighborhoodModel, build_graph
from .sim import AgentProgram, _check_model, _Runner, agent_rng, run_execution, run_solo


class _GrowingGraph:
    """Just enough of the Graph interface for a runner; ports stay in ascending ID order."""

    def __init__(self, vertices: Iterable[int]):
        self.adj: dict[int, set] = {v: set() for v in vertices}
        self.ports: dict[int, tuple] = {}
        self._nbrs: dict[int, frozenset] = {}

    def add_edges(self, pairs):
        touched = set()
        for u, v in pairs:
            self.adj[u].add(v)
            self.adj[v].add(u)
            touched.update((u, v))
        for v in touched or self.adj:
            self.ports[v] = tuple(sorted(self.adj[v]))
            self._nbrs[v] = frozenset(self.adj[v])

    def freeze(self, n_prime: int) -> Graph:
        return Graph(n_prime, {v: self.ports.get(v, ()) for v in self.adj})


@dataclass
class AdversaryResult:
    graph: Graph
    W: frozenset
    visited: tuple  # positions at rounds 0..t
    v0: int
    P: frozenset
    P_bar: frozenset
    budget: int

    @property
    def S_t(self) -> tuple:
        return self.visited


def _adversary_run(prog: AgentProgram, ids: list, v0: int, t: int, n_prime: int, seed: int, model):
    others = [u for u in ids if u != v0]
    n = 2 * (len(ids) - 1)
    P = others[: 7 * n // 16]
    P_bar = others[7 * n // 16:]
    pset = set(P)
    _check_model(prog, model)
    g = _GrowingGraph(ids)
    g.add_edges([(v0, u) for u in others] + [(u, v) for i, u in enumerate(P_bar) for v in P_bar[i + 1:]])
    runner = _Runner(prog.identity, prog, g, model, v0, agent_rng(seed, prog.identity))
    wb: dict = {}
    Q = {v0}
    seq = [v0]
    for r in range(t):
        if runner.left == 0:
            runner.next_hop(r, wb)
        if runner.write is not None:
            wb[runner.pos] = runner.write
            runner.write = None
        if runner.target != runner.pos:
            runner.pos = runner.target
            runner.moves += 1
        runner.left -= 1
        x = runner.pos
        if x in pset and x not in Q:
            g.add_edges((x, y) for y in P_bar if y not in Q)
        Q.add(x)
        seq.append(x)
    return g, tuple(seq), Q, P, P_bar


def adaptive_adversary(
    det_prog: AgentProgram,
    id_space: Iterable[int],
    v0: int,
    t: int,
    *,
    n_prime: int | None = None,
    model: NeighborhoodModel = NeighborhoodModel.KT1,
) -> AdversaryResult:
    """Grow a graph around ``det_prog`` so that ``W = P \\ Q_t`` stays unvisited and isolated behind ``v0``."""
    ids = sorted(set(id_space))
    if v0 not in ids:
        raise InstanceError(f"start {v0} is not in the ID space")
    n = 2 * (len(ids) - 1)
    if n <= 0 or n % 16:
        raise InstanceError(f"ID space of size {len(ids)} does not give n divisible by 16")
    if t < 0 or 32 * t > n:
        raise InstanceError(f"budget {t} exceeds n/32 = {n / 32}")
    n_prime = n_prime or (max(ids) + 1)

    g, seq, Q, P, P_bar = _adversary_run(det_prog, ids, v0, t, n_prime, 0, model)
    _, seq2, _, _, _ = _adversary_run(det_prog, ids, v0, t, n_prime, 1, model)
    if seq != seq2:
        raise NondeterministicProgramError(f"{det_prog.name} moved differently under different random words")

    graph = g.freeze(n_prime)
    W = frozenset(P) - Q
    result = AdversaryResult(graph, W, seq, v0, frozenset(P), frozenset(P_bar), t)
    problems = adversary_guarantees(result)
    if problems:
        raise RendezvousError("adversary guarantees violated: " + "; ".join(problems))
    replay = _replay(graph, det_prog, v0, t, model)
    if replay != seq:
        raise RendezvousError("replay on the final graph diverged from the adaptive run")
    return result


def _replay(graph, prog, v0, t, model) -> tuple:
    solo = run_solo(graph, model, prog, v0, max_rounds=t, trace=True)
    seq = [row[1] for row in solo.trace]
    seq += [solo.final_position] * (t + 1 - len(seq))
    return tuple(seq)


def adversary_guarantees(res: AdversaryResult) -> list[str]:
    """Re-check the size bound and both structural conditions by inspection; returns violations."""
    g, W, v0 = res.graph, res.W, res.v0
    n = 2 * (g.n - 1)
    out = []
    if 32 * len(W) < 13 * n:
        out.append(f"|W| = {len(W)} < 13n/32")
    closed_w = g.closed_neighborhood_of(W)
    hit = (set(res.visited) - {v0}) & closed_w
    if hit:
        out.append(f"visited vertex {min(hit)} lies in N+(W)")
    for v in g.vertices:
        if v in closed_w and v != v0:
            continue
        if 32 * g.degree(v) < n:
            out.append(f"vertex {v} has degree {g.degree(v)} < n/32")
            break
    return out


class ComposedInstance(NamedTuple):
    graph: Graph
    start_a: int
    start_b: int
    W_a: frozenset
    W_b: frozenset


def compose_hard_instance(
    det_prog_a: AgentProgram,
    det_prog_b: AgentProgram,
    n: int,
    *,
    model: NeighborhoodModel = NeighborhoodModel.KT1,
) -> ComposedInstance:
    """Glue two adversary graphs so that neither deterministic program meets the other within n/32 rounds."""
    if n < 32 or n % 32:
        raise InstanceError("n must be a positive multiple of 32")
    half = n // 2
    lower, upper = list(range(half)), list(range(half, n))
    t = n // 32
    runs_a = {j: adaptive_adversary(det_prog_a, lower + [j], j, t, n_prime=n, model=model) for j in upper}
    runs_b = {k: adaptive_adversary(det_prog_b, upper + [k], k, t, n_prime=n, model=model) for k in lower}
    pair = None
    for j in upper:
        for k in sorted(runs_a[j].W):
            if j in runs_b[k].W:
                pair = (j, k)
                break
        if pair:
            break
    if pair is None:
        raise RendezvousError("no pair (j, k) with both directions present; the counting argument failed")
    j, k = pair
    wa, wb = runs_a[j].W, runs_b[k].W
    edges = set(runs_a[j].graph.edges()) | set(runs_b[k].graph.edges())
    edges.add((min(j, k), max(j, k)))
    for x in wa - {k}:
        for y in wb - {j}:
            edges.add((min(x, y), max(x, y)))
    graph = build_graph(n, n, sorted(edges))
    if 32 * graph.delta < n:
        raise RendezvousError(f"composed instance has min degree {graph.delta} < n/32")
    res = run_execution(graph, model, det_prog_a, det_prog_b, j, k, t, 0, trace=True)
    if res.met:
        raise RendezvousError(f"programs met at round {res.meeting_round} on the composed instance")
    for _, pa, pb, _ in res.trace + [(t, *res.final_positions, [])]:
        if pa == k or pb == j:
            raise RendezvousError("an agent crossed the glued edge within the budget")
    return ComposedInstance(graph, j, k, wa, wb)


@dataclass
class LBReport:
    family: str
    checks: list = field(default_factory=list)  # (name, passed, detail)

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(p for _, p, _ in self.checks)

    def add(self, name, passed, detail=""):
        self.checks.append((name, bool(passed), detail))

    def format(self) -> str:
        lines = [f"family: {self.family}", f"ok: {str(self.ok).lower()}"]
        for name, passed, detail in self.checks:
            lines.append(f"{name}: {'pass' if passed else 'fail'}" + (f" ({detail})" if detail else ""))
        return "\n".join(lines) + "\n"


def lb_structure_check(G: Graph, family: str, starts: tuple[int, int] | None = None) -> LBReport:
    rep = LBReport(family)
    check = _CHECKS.get(family)
    if check is None:
        rep.add("family", False, f"unknown family {family!r}")
        return rep
    check(G, starts, rep)
    if starts is not None and family != "distance2-pair":
        a, b = starts
        rep.add("start_distance", G.distance(a, b) == 1, f"dist={G.distance(a, b)}")
    return rep


def _halves(G):
    vs = sorted(G.vertices)
    return vs[: len(vs) // 2], vs[len(vs) // 2:]


def _check_clique(G, starts, rep):
    bad = [v for v in G.vertices if G.degree(v) != G.n - 1]
    rep.add("degrees", not bad, f"witness {bad[0]}" if bad else f"all {G.n - 1}")


def _check_double_star(G, starts, rep):
    n = G.n
    if n % 2:
        rep.add("parity", False, f"n={n} is odd")
        return
    centers = sorted(v for v in G.vertices if G.degree(v) == n // 2)
    rep.add("edge_count", G.num_edges == n - 1, f"m={G.num_edges}")
    rep.add("Delta", G.Delta == n // 2, f"Delta={G.Delta}")
    rep.add("delta", G.delta == 1, f"delta={G.delta}")
    if len(centers) != 2:
        rep.add("centers", False, f"{len(centers)} vertices of degree n/2")
        return
    k, j = centers
    lower, upper = _halves(G)
    rep.add("center_halves", j in upper and k in lower, f"j={j} k={k}")
    rep.add("center_edge", j in G.neighbors(k), f"dist={G.distance(j, k)}")
    leaves_ok = all(G.neighbors(x) == {j} for x in lower if x != k) and all(
        G.neighbors(x) == {k} for x in upper if x != j
    )
    rep.add("leaves", leaves_ok)


def _check_glued_cliques(G, starts, rep):
    n = G.n
    bad = [v for v in G.vertices if G.degree(v) != n // 2 - 1]
    rep.add("degrees", not bad, f"witness {bad[0]}" if bad else f"all {n // 2 - 1}")
    lower, upper = _halves(G)
    side = {v: (lower if v in set(lower) else upper) for v in G.vertices}
    cross = sorted((u, v) for u, v in G.edges() if side[u] is not side[v])
    rep.add("cross_edges", len(cross) == 2, f"{len(cross)} edges between halves")
    ports_ok, witness = True, None
    for v in G.vertices:
        own = [u for u in side[v] if u != v]
        missing = set(own) - G.neighbors(v)
        plist = list(G.ports[v])
        for i, u in enumerate(plist):
            if side[u] is not side[v] and len(missing) == 1:
                plist[i] = next(iter(missing))
        if plist != own:
            ports_ok, witness = False, v
            break
    rep.add("rewired_ports", ports_ok, f"witness {witness}" if witness is not None else "")


def _check_distance2_pair(G, starts, rep):
    n = G.n
    if n % 2 == 0:
        rep.add("parity", False, f"n={n} is even")
        return
    hubs = [v for v in G.vertices if G.degree(v) == n - 1]
    rep.add("shared_vertex", len(hubs) == 1, f"{len(hubs)} vertices of degree n-1")
    rest = [v for v in G.vertices if G.degree(v) != n - 1]
    bad = [v for v in rest if G.degree(v) != (n - 1) // 2]
    rep.add("degrees", not bad, f"witness {bad[0]}" if bad else "")
    if starts is not None:
        a, b = starts
        rep.add("start_distance", G.distance(a, b) == 2, f"dist={G.distance(a, b)}")


def _check_composed(G, starts, rep):
    rep.add("min_degree", 32 * G.delta >= G.n, f"delta={G.delta} n/32={G.n / 32}")
    rep.add("tight_naming", G.n_prime == G.n, f"n'={G.n_prime}")


_CHECKS = {
    "clique": _check_clique,
    "double-star": _check_double_star,
    "glued-cliques": _check_glued_cliques,
    "distance2-pair": _check_distance2_pair,
    "composed": _check_composed,
}


def format_adversary_report(res: AdversaryResult, composed: ComposedInstance | None = None) -> str:
    n = 2 * (res.graph.n - 1)
    lines = [
        f"n: {n}",
        f"v0: {res.v0}",
        f"budget: {res.budget}",
        f"visited: {' '.join(map(str, res.visited))}",
        f"W_size: {len(res.W)}",
        f"W_bound: {13 * n / 32}",
        f"guarantees: {'pass' if not adversary_guarantees(res) else 'fail'}",
    ]
    if composed is not None:
        lines += [
            f"composed_n: {composed.graph.n}",
            f"start_a: {composed.start_a}",
            f"start_b: {composed.start_b}",
            f"composed_min_degree: {composed.graph.delta}",
            "composed_met_within_budget: false",
        ]
    return "\n".join(lines) + "\n"
