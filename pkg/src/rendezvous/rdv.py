"""Neighborhood rendezvous programs: Sample, Construct, the main two-agent
algorithm, the min-degree doubling wrapper and the whiteboard-free variant.

Agent ``a`` only ever learns the graph through the views it is handed, so all
routing below is planned from what it has seen: the neighbor IDs of its start
vertex, of every vertex it added to ``S`` and of the vertex it currently
stands on.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import ExecutionError
from .graphcore import Graph, NeighborhoodModel, shortest_paths_within
from .sim import FOREVER, Abort, AgentProgram, Halt, Move, Route, run_solo

SAMPLE_FACTOR = 96
THRESHOLD_FACTOR = 150
PROBE_FACTOR = 4
DEFAULT_C1 = 64
DEFAULT_C2 = 18
B_CHUNK = 512  # b's loop iterations planned per resume


@dataclass(frozen=True)
class LogParams:
    """The logarithmic constants every program derives from ``n``."""

    n: int

    @property
    def ln(self) -> float:
        return math.log(self.n) if self.n > 1 else 0.0

    @property
    def threshold(self) -> int:
        return math.ceil(THRESHOLD_FACTOR * self.ln)

    @property
    def probes(self) -> int:
        return max(1, math.ceil(PROBE_FACTOR * math.log2(self.n))) if self.n > 1 else 1

    def sample_count(self, size: int, alpha: float) -> int:
        return SAMPLE_FACTOR * math.ceil(size * self.ln / alpha)


@dataclass(frozen=True)
class AuditEntry:
    vertex: int
    via_strict: bool
    overlap: int  # |NS ∩ N+(vertex)| just before the vertex joined S
    light: bool  # overlap < delta_est / 2


@dataclass
class DenseSetResult:
    T: frozenset
    paths: dict
    rounds_used: int
    iterations_used: int
    strict_runs_used: int
    audit: list
    degenerate: bool = False
    snapshots: list | None = None

    @property
    def T_a(self) -> frozenset:
        return self.T

    @property
    def all_light(self) -> bool:
        return all(e.light for e in self.audit)


@dataclass
class SampleResult:
    heavy: frozenset
    counts: dict
    samples: int
    rounds: int


class _BelowEstimate(Exception):
    pass


class _Walker:
    """Agent ``a``'s position, stored paths and remembered neighborhoods."""

    __slots__ = ("view", "v0", "paths", "known")

    def __init__(self, view):
        self.view = view
        self.v0 = view.vertex
        self.paths = {self.v0: (self.v0,)}
        self.known = {self.v0: view.neighbors}

    def plan(self, v) -> tuple:
        """Hops from the current vertex to ``v``, shortcut through known adjacencies."""
        cur = self.view.vertex
        if v == cur:
            return ()
        nb = self.view.neighbors
        if v in nb:
            return ((v, 1, None),)
        seq = self.paths[cur][::-1] + self.paths[v][1:]
        known = self.known
        hops = []
        i, last = 0, len(seq) - 1
        while i < last:
            here = seq[i]
            adj = nb if i == 0 else known.get(here)
            nxt = i + 1
            for j in range(last, i, -1):
                if seq[j] == here:
                    nxt = -j
                    break
                if adj is not None and seq[j] in adj:
                    nxt = j
                    break
            if nxt < 0:
                i = -nxt
                continue
            hops.append((seq[nxt], 1, None))
            i = nxt
        return tuple(hops)

    def go(self, v):
        hops = self.plan(v)
        if hops:
            self.view = yield Route(hops)

    def follow(self, targets: Iterable[int]):
        hops = tuple((u, 1, None) for u in targets)
        if hops:
            self.view = yield Route(hops)


def _sample(w: _Walker, gamma: list, alpha: float, prm: LogParams, rng, index: dict):
    """Visit ``gamma`` uniformly with replacement and return the set judged heavy."""
    m = prm.sample_count(len(gamma), alpha)
    mult: dict[int, int] = {}
    seen: dict[int, frozenset] = {}
    plan = w.plan
    for i in rng.integers(0, len(gamma), size=m).tolist():
        v = gamma[i]
        hops = plan(v)
        if hops:
            w.view = yield Route(hops)
        if v in mult:
            mult[v] += 1
        else:
            mult[v] = 1
            seen[v] = w.view.neighbors
    # Counting is order-free, so it is done once per distinct visited vertex.
    counts = [0] * len(index)
    for v, k in mult.items():
        for u in seen[v]:
            pos = index.get(u)
            if pos is not None:
                counts[pos] += k
        pos = index.get(v)
        if pos is not None:
            counts[pos] += k
    thr = prm.threshold
    heavy = {u for u, pos in index.items() if counts[pos] >= thr}
    return heavy, {u: counts[pos] for u, pos in index.items()}, m


def _construct(w: _Walker, delta_est: float, prm: LogParams, rng, snapshots: list | None = None):
    v0 = w.v0
    closed0 = frozenset(w.view.neighbors | {v0})
    if len(closed0) == 1:
        return DenseSetResult(closed0, {v0: (v0,)}, 0, 0, 0, [], degenerate=True, snapshots=snapshots)
    base = sorted(closed0)
    index = {u: i for i, u in enumerate(base)}
    for u in base:
        if u != v0:
            w.paths[u] = (v0, u)
    S = [v0]
    NS = set(closed0)
    fresh = list(base)
    H: set = set()
    R = set(closed0)
    alpha = delta_est / 8
    light_bound = delta_est / 2
    strict = iterations = 0
    audit = []

    def add(x, nbrs):
        S.append(x)
        H.add(x)  # x is heavy for NS from now on; keeps R and H a partition
        R.discard(x)
        w.known[x] = nbrs
        px = w.paths[x]
        for u in nbrs:
            if u not in NS:
                NS.add(u)
                fresh.append(u)
                w.paths[u] = px + (u,)

    while R:
        iterations += 1
        if fresh:
            heavy, _, _ = yield from _sample(w, sorted(fresh), alpha, prm, rng, index)
            fresh.clear()
            H |= heavy
            R = set(closed0 - H)
        if R:
            rlist = sorted(R)
            found = False
            for _ in range(prm.probes):
                u = rlist[int(rng.integers(len(rlist)))]
                yield from w.go(u)
                nbrs = w.view.neighbors
                ov = len(NS & nbrs) + (u in NS)
                if ov < light_bound:
                    audit.append(AuditEntry(u, False, ov, True))
                    add(u, nbrs)
                    found = True
                    break
            if not found:
                strict += 1
                heavy, _, _ = yield from _sample(w, sorted(NS), alpha, prm, rng, index)
                H |= heavy
                R = set(closed0 - H)
                if R:
                    x = min(R)
                    yield from w.go(x)
                    nbrs = w.view.neighbors
                    ov = len(NS & nbrs) + (x in NS)
                    audit.append(AuditEntry(x, True, ov, ov < light_bound))
                    add(x, nbrs)
        if snapshots is not None:
            snapshots.append({"S": tuple(S), "R": frozenset(R), "H": frozenset(H), "NS": frozenset(NS)})
    T = frozenset(NS)
    paths = {u: w.paths[u] for u in T}
    return DenseSetResult(T, paths, 0, iterations, strict, audit, snapshots=snapshots)


class ConstructProgram(AgentProgram):
    """Run Construct from the start vertex and return its :class:`DenseSetResult`."""

    identity = "a"
    requires_kt1 = True
    name = "construct"

    def __init__(self, delta_est: float, n: int, keep_snapshots: bool = False):
        if delta_est <= 0:
            raise ValueError("delta_est must be positive")
        self.delta_est = delta_est
        self.n = n
        self.keep_snapshots = keep_snapshots

    def run(self, view, rng, stats):
        w = _Walker(view)
        snaps = [] if self.keep_snapshots else None
        res = yield from _construct(w, self.delta_est, LogParams(self.n), rng, snaps)
        res.rounds_used = w.view.round - view.round
        stats.update(construct_rounds=w.view.round, strict_runs=res.strict_runs_used)
        return res


class SampleProgram(AgentProgram):
    identity = "a"
    requires_kt1 = True
    name = "sample"

    def __init__(self, gamma, alpha, paths, n):
        self.gamma = sorted(gamma)
        self.alpha = alpha
        self.paths = paths
        self.n = n

    def run(self, view, rng, stats):
        w = _Walker(view)
        w.paths.update(self.paths)
        closed0 = view.neighbors | {view.vertex}
        index = {u: i for i, u in enumerate(sorted(closed0))}
        heavy, counts, m = yield from _sample(w, self.gamma, self.alpha, LogParams(self.n), rng, index)
        return SampleResult(frozenset(heavy), counts, m, w.view.round - view.round)


def sample_subroutine(
    graph: Graph,
    start: int,
    gamma: Iterable[int],
    alpha: float,
    *,
    n: int | None = None,
    seed: int = 0,
    model: NeighborhoodModel = NeighborhoodModel.KT1,
) -> SampleResult:
    """Run Sample once for an agent standing at ``start``.

    Every member of ``gamma`` must lie within two hops of ``start``; the agent
    is handed BFS paths to them, as Construct would have stored.
    """
    gamma = set(gamma)
    if not gamma:
        raise ValueError("gamma must be nonempty")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    paths = shortest_paths_within(graph, start, 2)
    far = gamma - paths.keys()
    if far:
        raise ValueError(f"vertex {min(far)} is not within two hops of {start}")
    prog = SampleProgram(gamma, alpha, {v: paths[v] for v in gamma}, n or graph.n)
    return run_solo(graph, model, prog, start, seed=seed).value


def construct(
    graph: Graph,
    start: int,
    delta_est: float,
    *,
    n: int | None = None,
    seed: int = 0,
    model: NeighborhoodModel = NeighborhoodModel.KT1,
    keep_snapshots: bool = False,
) -> DenseSetResult:
    """Build a dense set around ``start`` and account for the rounds it took."""
    prog = ConstructProgram(delta_est, n or graph.n, keep_snapshots)
    return run_solo(graph, model, prog, start, seed=seed).value


def construct_with_doubling(
    graph: Graph, start: int, *, n: int | None = None, seed: int = 0
) -> tuple[DenseSetResult, int, dict]:
    """Construct without knowing the min degree; returns (result, total rounds, stats)."""
    nn = n or graph.n
    prog = delta_doubling_wrapper(lambda d: ConstructProgram(d, nn))
    solo = run_solo(graph, NeighborhoodModel.KT1, prog, start, seed=seed)
    return solo.value, solo.rounds, solo.stats


class MainAgentA(AgentProgram):
    identity = "a"
    requires_kt1 = True
    name = "main"

    def __init__(self, n_prime: int, delta_est: float, n: int | None = None):
        if delta_est <= 0:
            raise ValueError("delta_est must be positive")
        self.n_prime = n_prime
        self.delta_est = delta_est
        self.n = n or n_prime

    def run(self, view, rng, stats):
        w = _Walker(view)
        v0 = w.v0
        res = yield from _construct(w, self.delta_est, LogParams(self.n), rng)
        stats.update(
            construct_rounds=w.view.round,
            last_construct_rounds=w.view.round - view.round,
            strict_runs=res.strict_runs_used,
            iterations=res.iterations_used,
            T_size=len(res.T),
        )
        yield from w.go(v0)
        T = sorted(res.T)
        probes = 0
        while True:
            v = T[int(rng.integers(len(T)))]
            path = w.paths[v]
            probes += 1
            if len(path) > 1:
                view = yield Route(tuple((u, 1, None) for u in path[1:]))
                q = view.whiteboard
                w.view = yield Route(tuple((u, 1, None) for u in path[-2::-1]))
            else:
                q = w.view.whiteboard
                w.view = yield Route(((v0, 1, None),))
            if q is not None:
                break
        stats["probes"] = probes
        if q not in w.known[v0]:
            raise ExecutionError(f"whiteboard word {q} is not a neighbor of {v0}", "a", w.view.round)
        yield Route(((q, 1, None),))
        yield Halt()


class MainAgentB(AgentProgram):
    identity = "b"
    requires_kt1 = True
    name = "main"

    def run(self, view, rng, stats):
        v0 = view.vertex
        choices = (v0,) + tuple(view.ports)
        while True:
            hops = []
            for i in rng.integers(0, len(choices), size=B_CHUNK).tolist():
                v = choices[i]
                if v == v0:
                    hops.append((v0, 1, v0))
                else:
                    hops.append((v, 1, None))
                    hops.append((v0, 1, v0))
            yield Route(tuple(hops))


class DoublingProgram(AgentProgram):
    """Run ``factory(d)`` with a guessed min degree ``d`` and halve it on evidence.

    The guess starts at half the start degree. Whenever the inner program is
    handed a view of a vertex with degree below the guess, the guess is halved
    (never below 1), the agent walks back to its start over edges it has
    already used, and a fresh inner program is started there.
    """

    identity = "a"
    requires_kt1 = True

    def __init__(self, factory: Callable[[float], AgentProgram], name: str = "doubling"):
        self.factory = factory
        self.name = name

    def run(self, view, rng, stats):
        v0 = view.vertex
        n0 = view.neighbors
        guess = max(len(view.ports) / 2, 1.0)
        trail: dict[int, set] = {}
        stats["restarts"] = 0
        while True:
            stats["delta_est"] = guess
            gen = self.factory(guess).run(view, rng, stats)
            try:
                action = next(gen)
            except StopIteration as stop:
                return stop.value
            while True:
                low = False
                if type(action) is Route:
                    # one hop at a time, so every vertex on the way is inspected
                    for hop in action.hops:
                        prev = view.vertex
                        view = yield Route((hop,))
                        if view.vertex != prev:
                            trail.setdefault(prev, set()).add(view.vertex)
                            trail.setdefault(view.vertex, set()).add(prev)
                        if len(view.ports) < guess:
                            low = True
                            break
                else:
                    prev = view.vertex
                    view = yield action
                    if view.vertex != prev:
                        trail.setdefault(prev, set()).add(view.vertex)
                        trail.setdefault(view.vertex, set()).add(prev)
                    low = len(view.ports) < guess
                if low:
                    break
                try:
                    action = gen.send(view)
                except StopIteration as stop:
                    return stop.value
            gen.close()
            stats["restarts"] += 1
            guess = max(guess / 2, 1.0)
            home = _way_home(view, v0, n0, trail)
            if home:
                view = yield Route(tuple((u, 1, None) for u in home))


def _way_home(view, v0, n0, trail) -> list:
    cur = view.vertex
    if cur == v0:
        return []
    if v0 in view.neighbors:
        return [v0]
    common = view.neighbors & n0
    if common:
        return [min(common), v0]
    prev = {cur: None}
    queue = deque([cur])
    while queue:
        x = queue.popleft()
        if x == v0:
            break
        for y in sorted(trail.get(x, ())):
            if y not in prev:
                prev[y] = x
                queue.append(y)
    out = []
    x = v0
    while x != cur:
        out.append(x)
        x = prev[x]
    return out[::-1]


def delta_doubling_wrapper(factory: Callable[[float], AgentProgram]) -> DoublingProgram:
    return DoublingProgram(factory)


def main_rendezvous_programs(
    n_prime: int, delta_est: float | None = None, n: int | None = None, doubling: bool = False
) -> tuple[AgentProgram, AgentProgram]:
    """Programs for the whiteboard algorithm; ``doubling`` (or no estimate) drops the min-degree input."""
    if doubling or delta_est is None:
        a = DoublingProgram(lambda d: MainAgentA(n_prime, d, n), name="main-doubling")
    else:
        a = MainAgentA(n_prime, delta_est, n)
    return a, MainAgentB()


# Whiteboard-free variant


def phi_probability(n: int, delta: float) -> tuple[float, bool]:
    """Inclusion probability ``4 ln n / sqrt(delta)`` clamped to 1; the flag says whether it was."""
    p = 4 * math.log(n) / math.sqrt(delta)
    return (1.0, True) if p >= 1 else (p, False)


def build_phi(base: Iterable[int], n: int, delta: float, rng: np.random.Generator) -> frozenset:
    p, _ = phi_probability(n, delta)
    members = sorted(base)
    if not members:
        return frozenset()
    keep = rng.random(len(members)) < p
    return frozenset(v for v, k in zip(members, keep) if k)


@dataclass(frozen=True)
class PhasePlan:
    n_prime: int
    n: int
    delta: float
    c1: float
    c2: float
    beta: int
    t_prime: int
    window: int  # rounds a parks on a probe vertex, and b's pass count
    phase_len: int
    n_phases: int

    def block_bounds(self, i: int) -> tuple[int, int]:
        """Block ``i`` over 1-based IDs, both ends inclusive."""
        return (i - 1) * self.beta + 1, i * self.beta

    def block_ids(self, i: int) -> range:
        """0-based vertex IDs whose 1-based ID falls in block ``i``."""
        return range((i - 1) * self.beta, i * self.beta)

    def block_of(self, v: int) -> int:
        return v // self.beta + 1

    def phase_start(self, i: int) -> int:
        return self.t_prime + (i - 1) * self.phase_len + 1

    def phase_end(self, i: int) -> int:
        return self.t_prime + i * self.phase_len

    @property
    def end(self) -> int:
        return self.phase_end(self.n_phases)


def phase_schedule(
    n_prime: int,
    n: int,
    delta: float,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    t_log_base: float = 2.0,
) -> PhasePlan:
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    if delta < 1:
        raise ValueError("delta must be >= 1")
    beta = math.ceil(math.sqrt(delta))
    lg = math.log(n, t_log_base) if n > 1 else 0.0
    t_prime = math.ceil(c1 * n_prime * lg * lg / delta)
    window = max(1, math.ceil(4 * c2 * math.log(n))) if n > 1 else 1
    return PhasePlan(
        n_prime, n, delta, c1, c2, beta, t_prime, window, window * window,
        math.ceil(n_prime / beta),
    )


def _by_block(plan: PhasePlan, phi: Iterable[int]) -> dict[int, list]:
    out: dict[int, list] = {}
    for v in sorted(phi):
        out.setdefault(plan.block_of(v), []).append(v)
    return out


class NowbAgentA(AgentProgram):
    identity = "a"
    requires_kt1 = True
    name = "nowb"

    def __init__(self, plan: PhasePlan, phi_override: Iterable[int] | None = None):
        self.plan = plan
        self.phi_override = None if phi_override is None else frozenset(phi_override)

    def run(self, view, rng, stats):
        plan = self.plan
        w = _Walker(view)
        v0 = w.v0
        res = yield from _construct(w, plan.delta, LogParams(plan.n), rng)
        stats.update(construct_rounds=w.view.round, strict_runs=res.strict_runs_used)
        yield from w.go(v0)
        if w.view.round > plan.t_prime + 1:
            yield Abort(f"construct ended at round {w.view.round}, after the schedule start {plan.t_prime + 1}")
        phi = build_phi(res.T, plan.n, plan.delta, rng) if self.phi_override is None else self.phi_override
        stats["phi"] = phi
        stats["phi_clamped"] = phi_probability(plan.n, plan.delta)[1]
        stats["truncated"] = 0
        blocks = _by_block(plan, phi)
        W, L = plan.window, plan.phase_len
        for i in range(1, plan.n_phases + 1):
            wait = plan.phase_start(i) - w.view.round
            if wait > 0:
                w.view = yield Route(((v0, wait, None),))
            hops, used = [], 0
            for u in blocks.get(i, ()):
                path = res.paths[u]
                cost = W + len(path) - 1
                if used + cost > L or len(path) - 1 > W:
                    stats["truncated"] += 1
                    continue
                for x in path[1:-1]:
                    hops.append((x, 1, None))
                hops.append((u, W - (len(path) - 2) if len(path) > 1 else W, None))
                for x in path[-2::-1]:
                    hops.append((x, 1, None))
                used += cost
            if hops:
                w.view = yield Route(tuple(hops))
        yield Halt()


class NowbAgentB(AgentProgram):
    identity = "b"
    requires_kt1 = True
    name = "nowb"

    def __init__(self, plan: PhasePlan, phi_override: Iterable[int] | None = None):
        self.plan = plan
        self.phi_override = None if phi_override is None else frozenset(phi_override)

    def run(self, view, rng, stats):
        plan = self.plan
        v0 = view.vertex
        closed = view.neighbors | {v0}
        phi = build_phi(closed, plan.n, plan.delta, rng) if self.phi_override is None else self.phi_override
        stats["phi"] = phi
        stats["truncated"] = 0
        blocks = _by_block(plan, phi)
        W, L = plan.window, plan.phase_len
        for i in range(1, plan.n_phases + 1):
            wait = plan.phase_start(i) - view.round
            if wait > 0:
                view = yield Route(((v0, wait, None),))
            members = blocks.get(i, [])
            if not members:
                continue
            one_pass = []
            for u in members:
                one_pass.append((u, 3, None))
                one_pass.append((v0, 1, None))
            passes = min(W, L // (4 * len(members)))
            if passes < W:
                stats["truncated"] += W - passes
            if passes:
                view = yield Route(tuple(one_pass) * passes)
        yield Halt()


def nowb_programs(
    n_prime: int,
    n: int,
    delta: float,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    t_log_base: float = 2.0,
) -> tuple[AgentProgram, AgentProgram]:
    plan = phase_schedule(n_prime, n, delta, c1, c2, t_log_base)
    return NowbAgentA(plan), NowbAgentB(plan)
