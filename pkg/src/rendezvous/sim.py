"""Synchronous two-agent executor with whiteboards and meeting detection.

An agent program is a generator. It is started with the view of its start
vertex, a private random stream and a ``stats`` dict it may fill with
accounting, and it yields one action per decision::

    def run(self, view, rng, stats):
        while True:
            view = yield Move(0)

Whatever the generator keeps in local variables is the agent's memory. The
executor resumes it with a fresh :class:`View` whenever its previous action
has been fully carried out, so a :class:`Route` (a multi-round plan expressed
as neighbor IDs) costs a single resume. Co-location at the start of a round
is a meeting and preempts every action of that round.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .errors import CapabilityError, ExecutionError
from .graphcore import Graph, NeighborhoodModel

FOREVER = 1 << 62
IDENTITIES = ("a", "b")


class View(NamedTuple):
    """What a program sees at the start of a round."""

    round: int
    vertex: int
    ports: tuple  # neighbor IDs in port order (KT1) or range(deg) (PortOnly)
    whiteboard: int | None
    neighbors: frozenset | None  # set form of ``ports`` under KT1, else None


class Hop(NamedTuple):
    """Write ``write`` at the current vertex, go to ``target`` and stay for ``rounds`` rounds total."""

    target: int
    rounds: int = 1
    write: int | None = None


class Stay(NamedTuple):
    write: int | None = None


class Move(NamedTuple):
    port: int
    write: int | None = None


class Halt(NamedTuple):
    write: int | None = None


class Route(NamedTuple):
    hops: tuple


class Abort(NamedTuple):
    reason: str


class AgentProgram:
    """Base class for agent programs; subclasses implement :meth:`run`."""

    identity = "a"
    requires_kt1 = False
    name = "program"

    def run(self, view: View, rng: np.random.Generator, stats: dict):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(identity={self.identity!r})"


class StepProgram(AgentProgram):
    """Adapter for the pure-function form ``step(memory, view, rng) -> (memory, action)``.

    ``action`` is any single-round action (:class:`Stay`, :class:`Move`,
    :class:`Halt`); the whiteboard word travels inside it.
    """

    def __init__(self, identity, step, memory=None, requires_kt1=False, name="step"):
        self.identity = identity
        self.step = step
        self.memory = memory
        self.requires_kt1 = requires_kt1
        self.name = name

    def run(self, view, rng, stats):
        memory = self.memory
        while True:
            memory, action = self.step(memory, view, rng)
            view = yield action


def agent_rng(seed: int, identity: str) -> np.random.Generator:
    """Independent counter-based stream for one agent of one execution."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(IDENTITIES.index(identity),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class ExecutionResult:
    met: bool
    meeting_round: int | None
    rounds_executed: int
    moves_a: int
    moves_b: int
    restarts: int = 0
    stats_a: dict = field(default_factory=dict)
    stats_b: dict = field(default_factory=dict)
    failure: str | None = None
    final_positions: tuple = ()
    trace: list | None = None

    def to_json_dict(self) -> dict:
        return {
            "met": self.met,
            "meeting_round": self.meeting_round,
            "rounds_executed": self.rounds_executed,
            "moves_a": self.moves_a,
            "moves_b": self.moves_b,
            "restarts": self.restarts,
            "construct_rounds": self.stats_a.get("construct_rounds"),
            "strict_runs": self.stats_a.get("strict_runs"),
        }


@dataclass
class SoloResult:
    """Outcome of running one agent alone; ``value`` is what its generator returned."""

    value: Any
    finished: bool
    rounds: int
    moves: int
    stats: dict
    final_position: int
    failure: str | None = None
    trace: list | None = None


class _Aborted(Exception):
    pass


class _Runner:
    __slots__ = (
        "identity", "program", "graph", "model", "pos", "rng", "stats", "gen",
        "queue", "target", "left", "write", "halted", "finished", "value", "moves",
    )

    def __init__(self, identity, program, graph, model, start, rng):
        self.identity = identity
        self.program = program
        self.graph = graph
        self.model = model
        self.pos = start
        self.rng = rng
        self.stats = {}
        self.gen = None
        self.queue = deque()
        self.target = start
        self.left = 0
        self.write = None
        self.halted = False
        self.finished = False
        self.value = None
        self.moves = 0

    def view(self, t, wb):
        g, v = self.graph, self.pos
        if self.model is NeighborhoodModel.KT1:
            return View(t, v, g.ports[v], wb.get(v), g._nbrs[v])
        return View(t, v, tuple(range(len(g.ports[v]))), wb.get(v), None)

    def next_hop(self, t, wb):
        guard = 0
        while not self.queue:
            if self.halted:
                self.queue.append((self.pos, FOREVER, None))
                break
            view = self.view(t, wb)
            try:
                if self.gen is None:
                    self.gen = self.program.run(view, self.rng, self.stats)
                    action = next(self.gen)
                else:
                    action = self.gen.send(view)
            except StopIteration as stop:
                self.value = stop.value
                self.finished = self.halted = True
                continue
            self.accept(action, t)
            guard += 1
            if guard > 100_000:
                raise ExecutionError("program yields empty plans forever", self.identity, t)
        self.target, self.left, self.write = self.queue.popleft()

    def accept(self, action, t):
        kind = type(action)
        if kind is Route:
            prev = self.pos
            nbrs = self.graph._nbrs
            kt1 = self.model is NeighborhoodModel.KT1
            for i, hop in enumerate(action.hops):
                target, rounds, write = hop
                if rounds < 1:
                    raise ExecutionError(f"hop with {rounds} rounds", self.identity, t)
                if target != prev:
                    if not kt1:
                        raise CapabilityError(
                            f"agent {self.identity} routes by neighbor ID, which needs the KT1 model"
                        )
                    if target not in nbrs[prev]:
                        raise ExecutionError(
                            f"agent {self.identity}: {target} is not a neighbor of {prev} (hop {i})",
                            self.identity, t,
                        )
                    prev = target
                self.queue.append(hop)
        elif kind is Move:
            ports = self.graph.ports[self.pos]
            if not 0 <= action.port < len(ports):
                raise ExecutionError(
                    f"agent {self.identity} at vertex {self.pos} used port {action.port} "
                    f"(degree {len(ports)}) in round {t}",
                    self.identity, t,
                )
            self.queue.append((ports[action.port], 1, action.write))
        elif kind is Stay:
            self.queue.append((self.pos, 1, action.write))
        elif kind is Halt:
            self.halted = True
            self.queue.append((self.pos, FOREVER, action.write))
        elif kind is Abort:
            self.stats["failure"] = action.reason
            raise _Aborted(action.reason)
        else:
            raise ExecutionError(f"agent {self.identity} produced unknown action {action!r}", self.identity, t)


def _check_model(program, model):
    if program.requires_kt1 and model is not NeighborhoodModel.KT1:
        raise CapabilityError(f"{program.name} needs neighbor IDs (KT1); model is {model.value}")


def _execute(graph, model, runners, max_rounds, trace):
    """Drive one or two runners; returns (meeting_round, rounds_executed, failure, trace)."""
    a = runners[0]
    b = runners[1] if len(runners) > 1 else None
    wb: dict[int, int] = {}
    rows = [] if trace else None
    t = 0
    failure = None
    try:
        while True:
            if b is not None and a.pos == b.pos:
                return t, t, None, rows
            if t >= max_rounds:
                break
            if a.left == 0:
                a.next_hop(t, wb)
                if b is None and a.halted:
                    break
            if b is not None and b.left == 0:
                b.next_hop(t, wb)

            a_still = a.target == a.pos
            b_still = b is None or b.target == b.pos
            if a_still and b_still:
                k = min(a.left, FOREVER if b is None else b.left, max_rounds - t)
                writes = []
                for r in runners:
                    if r.write is not None:
                        wb[r.pos] = r.write
                        writes.append((r.pos, r.write))
                        r.write = None
                    r.left -= k
                if rows is not None:
                    pb = None if b is None else b.pos
                    rows.append((t, a.pos, pb, writes))
                    rows.extend((t + i, a.pos, pb, []) for i in range(1, k))
                t += k
                continue

            writes = []
            for r in runners:
                if r.write is not None:
                    wb[r.pos] = r.write
                    writes.append((r.pos, r.write))
                    r.write = None
            if rows is not None:
                rows.append((t, a.pos, None if b is None else b.pos, writes))
            for r in runners:
                if r.target != r.pos:
                    r.pos = r.target
                    r.moves += 1
                r.left -= 1
            t += 1
    except _Aborted as exc:
        failure = str(exc)
    if b is not None and failure is None and a.pos == b.pos:
        return t, t, None, rows
    return None, t, failure, rows


def run_execution(
    graph: Graph,
    model: NeighborhoodModel,
    prog_a: AgentProgram,
    prog_b: AgentProgram,
    start_a: int,
    start_b: int,
    max_rounds: int,
    seed: int,
    trace: bool = False,
) -> ExecutionResult:
    """Run both programs in lockstep until they meet or ``max_rounds`` rounds have run."""
    for s in (start_a, start_b):
        if s not in graph:
            raise ExecutionError(f"start vertex {s} is not in the graph")
    if max_rounds < 0:
        raise ValueError("max_rounds must be >= 0")
    _check_model(prog_a, model)
    _check_model(prog_b, model)
    ra = _Runner("a", prog_a, graph, model, start_a, agent_rng(seed, "a"))
    rb = _Runner("b", prog_b, graph, model, start_b, agent_rng(seed, "b"))
    meeting, executed, failure, rows = _execute(graph, model, (ra, rb), max_rounds, trace)
    return ExecutionResult(
        met=meeting is not None,
        meeting_round=meeting,
        rounds_executed=executed,
        moves_a=ra.moves,
        moves_b=rb.moves,
        restarts=ra.stats.get("restarts", 0),
        stats_a=ra.stats,
        stats_b=rb.stats,
        failure=failure,
        final_positions=(ra.pos, rb.pos),
        trace=rows,
    )


def run_solo(
    graph: Graph,
    model: NeighborhoodModel,
    program: AgentProgram,
    start: int,
    max_rounds: int = FOREVER,
    seed: int = 0,
    trace: bool = False,
) -> SoloResult:
    """Run one program alone until its generator returns or ``max_rounds`` elapse."""
    if start not in graph:
        raise ExecutionError(f"start vertex {start} is not in the graph")
    _check_model(program, model)
    r = _Runner(program.identity, program, graph, model, start, agent_rng(seed, program.identity))
    _, executed, failure, rows = _execute(graph, model, (r,), max_rounds, trace)
    return SoloResult(r.value, r.finished, executed, r.moves, r.stats, r.pos, failure, rows)


def run_batch(
    graph: Graph,
    model: NeighborhoodModel,
    programs: tuple[AgentProgram, AgentProgram] | Callable[[int], tuple[AgentProgram, AgentProgram]],
    starts: tuple[int, int] | Callable[[int], tuple[int, int]],
    trials: int,
    seed_base: int,
    max_rounds: int,
) -> list[ExecutionResult]:
    """Trial ``i`` runs with seed ``seed_base + i``; results come back in trial order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    for i in range(trials):
        pa, pb = programs(i) if callable(programs) else programs
        sa, sb = starts(i) if callable(starts) else starts
        results.append(run_execution(graph, model, pa, pb, sa, sb, max_rounds, seed_base + i))
    return results


def format_trace(rows: Sequence) -> str:
    """Render trace rows as ``round,pos_a,pos_b,wb_writes`` CSV."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["round", "pos_a", "pos_b", "wb_writes"])
    for t, pa, pb, writes in rows:
        w.writerow([t, pa, "" if pb is None else pb, ";".join(f"{v}={word}" for v, word in writes)])
    return out.getvalue()


def write_trace(path, rows):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(format_trace(rows))
