"""Experiment orchestration: trial records, CSV I/O, round bounds and scaling fits."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .baselines import randomwalk_programs, sweep_programs
from .graphcore import Graph, InstanceSpec, NeighborhoodModel, gen_family
from .rdv import DEFAULT_C1, DEFAULT_C2, main_rendezvous_programs, nowb_programs, phase_schedule
from .sim import run_execution

ALGOS = ("main", "main-doubling", "nowb", "sweep", "randomwalk")
MAX_ROUNDS_CAP = 10**7
CSV_HEADER = (
    "family", "n", "n_prime", "delta", "Delta", "algo", "model", "seed", "trial",
    "met", "meeting_round", "construct_rounds", "strict_runs", "restarts",
)


@dataclass(frozen=True)
class TrialRecord:
    family: str
    n: int
    n_prime: int
    delta: int
    Delta: int
    algo: str
    model: str
    seed: int
    trial: int
    met: bool
    meeting_round: int | None
    construct_rounds: int | None
    strict_runs: int | None
    restarts: int

    def __post_init__(self):
        if not self.met and self.meeting_round is not None:
            raise ValueError("a trial that did not meet has no meeting round")

    def to_row(self) -> list[str]:
        out = []
        for name in CSV_HEADER:
            v = getattr(self, name)
            out.append("" if v is None else ("true" if v is True else "false" if v is False else str(v)))
        return out

    @classmethod
    def from_row(cls, row: dict) -> "TrialRecord":
        def opt(key):
            return None if row[key] == "" else int(row[key])

        return cls(
            family=row["family"], n=int(row["n"]), n_prime=int(row["n_prime"]),
            delta=int(row["delta"]), Delta=int(row["Delta"]), algo=row["algo"], model=row["model"],
            seed=int(row["seed"]), trial=int(row["trial"]), met=row["met"] == "true",
            meeting_round=opt("meeting_round"), construct_rounds=opt("construct_rounds"),
            strict_runs=opt("strict_runs"), restarts=int(row["restarts"]),
        )


def format_records(records: Iterable[TrialRecord]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: (r.n, r.trial, r.algo)):
        w.writerow(r.to_row())
    return out.getvalue()


def parse_records(text: str) -> list[TrialRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
        raise ValueError("CSV header does not match the trial record layout")
    return [TrialRecord.from_row(row) for row in reader]


def write_records(path, records):
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(format_records(records))


def read_records(path) -> list[TrialRecord]:
    with open(path, encoding="ascii") as fh:
        return parse_records(fh.read())


# Bounds, without their hidden constants.


def bound_main(n, delta, Delta, **_):
    ln = math.log(n)
    return n / delta * ln * ln + math.sqrt(n * Delta / delta) * ln


def bound_nowb(n, delta, Delta, n_prime=None, c1=DEFAULT_C1, c2=DEFAULT_C2, **_):
    t_prime = phase_schedule(n_prime or n, n, delta, c1, c2).t_prime
    ln = math.log(n)
    return t_prime + n / math.sqrt(delta) * ln * ln


def bound_sweep(n, delta, Delta, **_):
    return float(Delta)


BOUNDS = {"main": bound_main, "main-doubling": bound_main, "nowb": bound_nowb, "sweep": bound_sweep}


def default_max_rounds(algo: str, graph: Graph, **kw) -> int:
    f = BOUNDS.get(algo)
    if f is None:
        return MAX_ROUNDS_CAP
    return min(MAX_ROUNDS_CAP, math.ceil(50 * f(graph.n, graph.delta, graph.Delta, n_prime=graph.n_prime, **kw)))


def make_programs(algo: str, graph: Graph, *, delta: float | None = None, c1=DEFAULT_C1, c2=DEFAULT_C2):
    d = graph.delta if delta is None else delta
    if algo == "main":
        return main_rendezvous_programs(graph.n_prime, d, n=graph.n)
    if algo == "main-doubling":
        return main_rendezvous_programs(graph.n_prime, n=graph.n, doubling=True)
    if algo == "nowb":
        return nowb_programs(graph.n_prime, graph.n, d, c1, c2)
    if algo == "sweep":
        return sweep_programs()
    if algo == "randomwalk":
        return randomwalk_programs()
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {', '.join(ALGOS)}")


def record_for(spec: InstanceSpec, graph: Graph, algo: str, model: NeighborhoodModel, seed: int, trial: int, res):
    return TrialRecord(
        family=spec.family, n=graph.n, n_prime=graph.n_prime, delta=graph.delta, Delta=graph.Delta,
        algo=algo, model=model.value, seed=seed, trial=trial, met=res.met,
        meeting_round=res.meeting_round, construct_rounds=res.stats_a.get("construct_rounds"),
        strict_runs=res.stats_a.get("strict_runs"), restarts=res.restarts,
    )


@dataclass(frozen=True)
class SweepConfig:
    family: str
    algo: str
    n_list: tuple
    trials: int
    seed_base: int = 0
    model: str = "kt1"
    delta_exp: float | None = 0.75  # random-min-degree target is ceil(n ** delta_exp) ...
    target_delta: int | None = None  # ... unless a fixed target is given
    max_rounds: int | None = None
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2


def instance_for(cfg: SweepConfig, n: int, trial: int):
    target = None
    if cfg.family == "random-min-degree":
        target = cfg.target_delta if cfg.target_delta is not None else math.ceil(n ** cfg.delta_exp)
    spec = InstanceSpec(cfg.family, n, target_delta=target, seed=cfg.seed_base + trial)
    return spec, *gen_family(spec)


def run_trials(cfg: SweepConfig) -> list[TrialRecord]:
    """Trial ``i`` at each n uses instance seed and execution seed ``seed_base + i``."""
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    model = NeighborhoodModel(cfg.model)
    records = []
    for n in cfg.n_list:
        for i in range(cfg.trials):
            spec, graph, (a, b) = instance_for(cfg, n, i)
            pa, pb = make_programs(cfg.algo, graph, c1=cfg.c1, c2=cfg.c2)
            cap = cfg.max_rounds or default_max_rounds(cfg.algo, graph, c1=cfg.c1, c2=cfg.c2)
            seed = cfg.seed_base + i
            res = run_execution(graph, model, pa, pb, a, b, cap, seed)
            records.append(record_for(spec, graph, cfg.algo, model, seed, i, res))
    return sorted(records, key=lambda r: (r.n, r.trial))


@dataclass
class ScalingReport:
    bound: str | None
    per_n: dict  # n -> {"median", "p95", "trials", "unmet", "bound", "C"}
    exponent: float
    intercept: float
    residuals: list

    def format(self) -> str:
        lines = [f"exponent: {self.exponent:.4f}", f"intercept: {self.intercept:.4f}"]
        for n, row in sorted(self.per_n.items()):
            c = "" if row.get("C") is None else f" C={row['C']:.4g}"
            lines.append(
                f"n={n} median={row['median']:.6g} p95={row['p95']:.6g} trials={row['trials']} unmet={row['unmet']}{c}"
            )
        return "\n".join(lines) + "\n"


def fit_scaling(records: Sequence[TrialRecord] | str, bound: str | None = None, algo: str | None = None) -> ScalingReport:
    """Fit log(median meeting round) against log(n); ``records`` may be CSV text."""
    if isinstance(records, str):
        records = parse_records(records)
    if algo is not None:
        records = [r for r in records if r.algo == algo]
    if not records:
        raise ValueError("no trial records to fit")
    f = None if bound is None else BOUNDS[bound]
    groups: dict[int, list] = {}
    for r in records:
        groups.setdefault(r.n, []).append(r)
    if len(groups) < 2:
        raise ValueError("fitting needs at least two distinct n values")
    per_n = {}
    for n, rs in sorted(groups.items()):
        rounds = np.array([r.meeting_round for r in rs if r.met], dtype=float)
        row = {
            "median": float(np.median(rounds)) if rounds.size else math.nan,
            "p95": float(np.percentile(rounds, 95)) if rounds.size else math.nan,
            "trials": len(rs),
            "unmet": sum(not r.met for r in rs),
        }
        if f is not None:
            b = float(np.median([f(r.n, r.delta, r.Delta, n_prime=r.n_prime) for r in rs]))
            row["bound"] = b
            row["C"] = row["median"] / b
        per_n[n] = row
    ns = np.array(sorted(per_n), dtype=float)
    meds = np.array([per_n[int(n)]["median"] for n in ns])
    if not np.all(np.isfinite(meds)):
        raise ValueError("some n has no meeting trials; the exponent is undefined")
    x, y = np.log(ns), np.log(np.maximum(meds, 1.0))
    slope, intercept = np.polyfit(x, y, 1)
    residuals = (y - (slope * x + intercept)).tolist()
    return ScalingReport(bound, per_n, float(slope), float(intercept), residuals)


def summarize(records: Sequence[TrialRecord]) -> dict:
    met = [r for r in records if r.met]
    rounds = [r.meeting_round for r in met]
    return {
        "trials": len(records),
        "met": len(met),
        "median": float(np.median(rounds)) if rounds else None,
        "p95": float(np.percentile(rounds, 95)) if rounds else None,
    }

