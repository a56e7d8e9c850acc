"""Reference programs: neighbor sweep, random walks and trivial idlers."""

from __future__ import annotations

import numpy as np

from .sim import AgentProgram, Halt, Move, Route, Stay


class SweepA(AgentProgram):
    """Probe the start vertex's neighbors in port order, returning between probes."""

    identity = "a"
    requires_kt1 = True
    name = "sweep"

    def run(self, view, rng, stats):
        v0 = view.vertex
        nbrs = view.ports
        while True:
            for u in nbrs:
                yield Route(((u, 1, None), (v0, 1, None)))
            if not nbrs:
                yield Halt()


class Idle(AgentProgram):
    """Stay at the start vertex forever."""

    name = "idle"
    requires_kt1 = False

    def __init__(self, identity: str = "b"):
        self.identity = identity

    def run(self, view, rng, stats):
        yield Halt()


class RandomWalk(AgentProgram):
    """Lazy walk: each round stay with probability 1/2, else take a uniform port."""

    name = "randomwalk"
    requires_kt1 = False

    def __init__(self, identity: str):
        self.identity = identity

    def run(self, view, rng, stats):
        while True:
            deg = len(view.ports)
            if deg == 0 or rng.random() < 0.5:
                view = yield Stay()
            else:
                view = yield Move(int(rng.integers(deg)))


class SeededWalker(AgentProgram):
    """Deterministic lazy walk: its coins come from a fixed internal seed, never from ``rng``."""

    name = "walker"
    requires_kt1 = False

    def __init__(self, seed: int, identity: str = "a"):
        self.seed = seed
        self.identity = identity

    def run(self, view, rng, stats):
        own = np.random.default_rng(self.seed)
        while True:
            deg = len(view.ports)
            if deg == 0 or own.random() < 0.5:
                view = yield Stay()
            else:
                view = yield Move(int(own.integers(deg)))


def sweep_programs() -> tuple[AgentProgram, AgentProgram]:
    return SweepA(), Idle("b")


def randomwalk_programs() -> tuple[AgentProgram, AgentProgram]:
    return RandomWalk("a"), RandomWalk("b")
