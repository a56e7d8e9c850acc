"""Command-line entry point: ``rendezvous {gen,run,sweep,adversary,verify}``.

Exit codes: 0 success, 2 usage or unreadable input, 3 capability mismatch,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .adversarial import adaptive_adversary, compose_hard_instance, format_adversary_report, lb_structure_check
from .baselines import Idle, SeededWalker, SweepA
from .bench import ALGOS, SweepConfig, default_max_rounds, fit_scaling, make_programs, run_trials, write_records
from .errors import CapabilityError, GraphError, InstanceError, RendezvousError
from .graphcore import FAMILIES, InstanceSpec, NeighborhoodModel, gen_family, is_dense, read_graph, write_graph
from .rdv import DEFAULT_C1, DEFAULT_C2, construct
from .sim import run_execution, write_trace

EXIT_OK, EXIT_USAGE, EXIT_CAPABILITY, EXIT_VERIFY = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rendezvous", description="Two-agent neighborhood rendezvous simulator.")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--n-prime", type=int)
    g.add_argument("--target-delta", type=int)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("-o", "--out", required=True)

    r = sub.add_parser("run", help="run one execution")
    r.add_argument("--graph", required=True)
    r.add_argument("--algo", required=True, choices=ALGOS)
    r.add_argument("--model", required=True, choices=[m.value for m in NeighborhoodModel])
    r.add_argument("--start-a", type=int)
    r.add_argument("--start-b", type=int)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--max-rounds", type=int, required=True)
    r.add_argument("--trace")
    r.add_argument("--json", action="store_true")
    r.add_argument("--delta", type=float, help="min-degree estimate handed to the programs")
    r.add_argument("--c1", type=float, default=DEFAULT_C1)
    r.add_argument("--c2", type=float, default=DEFAULT_C2)

    s = sub.add_parser("sweep", help="run trials over several n and write a CSV")
    s.add_argument("--family", required=True, choices=FAMILIES)
    s.add_argument("--algo", required=True, choices=ALGOS)
    s.add_argument("--n-list", required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed-base", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--model", default="kt1", choices=[m.value for m in NeighborhoodModel])
    s.add_argument("--delta-exp", type=float, default=0.75)
    s.add_argument("--target-delta", type=int)
    s.add_argument("--max-rounds", type=int)
    s.add_argument("--c1", type=float, default=DEFAULT_C1)
    s.add_argument("--c2", type=float, default=DEFAULT_C2)

    a = sub.add_parser("adversary", help="build a hard instance against a deterministic program")
    a.add_argument("--prog", required=True, help="sweep, stay or walker:SEED")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--out", required=True)
    a.add_argument("--report", required=True)

    v = sub.add_parser("verify", help="check an instance file")
    v.add_argument("--graph", required=True)
    v.add_argument("--check", required=True, help="graph, dense:A,ALPHA,BETA or lb:FAMILY")
    return p


def _det_program(spec: str, identity: str):
    if spec == "sweep":
        prog = SweepA()
        prog.identity = identity
        return prog
    if spec == "stay":
        return Idle(identity)
    if spec.startswith("walker:"):
        try:
            return SeededWalker(int(spec.split(":", 1)[1]), identity)
        except ValueError:
            pass
    raise UsageError(f"unknown program {spec!r}; expected sweep, stay or walker:SEED")


def _cmd_gen(args):
    spec = InstanceSpec(args.family, args.n, args.n_prime, args.target_delta, args.seed)
    graph, starts = gen_family(spec)
    write_graph(args.out, graph, starts)
    print(f"wrote {args.out}: n={graph.n} m={graph.num_edges} delta={graph.delta} Delta={graph.Delta}")
    return EXIT_OK


def _cmd_run(args):
    graph, starts = read_graph(args.graph)
    a = args.start_a if args.start_a is not None else (starts[0] if starts else None)
    b = args.start_b if args.start_b is not None else (starts[1] if starts else None)
    if a is None or b is None:
        raise UsageError("no start vertices: pass --start-a/--start-b or use a file with a starts line")
    model = NeighborhoodModel(args.model)
    pa, pb = make_programs(args.algo, graph, delta=args.delta, c1=args.c1, c2=args.c2)
    res = run_execution(graph, model, pa, pb, a, b, args.max_rounds, args.seed, trace=bool(args.trace))
    if args.trace:
        write_trace(args.trace, res.trace)
    if args.json:
        print(json.dumps(res.to_json_dict()))
    else:
        when = f"round {res.meeting_round}" if res.met else f"no meeting in {res.rounds_executed} rounds"
        print(f"{args.algo}: {when}; moves a={res.moves_a} b={res.moves_b}; restarts={res.restarts}")
        if res.failure:
            print(f"failure: {res.failure}")
    return EXIT_OK


def _cmd_sweep(args):
    try:
        n_list = tuple(int(x) for x in args.n_list.split(","))
    except ValueError:
        raise UsageError(f"bad --n-list {args.n_list!r}") from None
    cfg = SweepConfig(
        args.family, args.algo, n_list, args.trials, args.seed_base, args.model,
        args.delta_exp, args.target_delta, args.max_rounds, args.c1, args.c2,
    )
    records = run_trials(cfg)
    write_records(args.out, records)
    met = sum(r.met for r in records)
    print(f"wrote {args.out}: {len(records)} trials, {met} met")
    if len(set(n_list)) >= 2 and met:
        try:
            print(fit_scaling(records, args.algo if args.algo in ("main", "nowb", "sweep") else None).format(), end="")
        except ValueError as exc:
            print(f"no fit: {exc}")
    return EXIT_OK


def _cmd_adversary(args):
    pa, pb = _det_program(args.prog, "a"), _det_program(args.prog, "b")
    inst = compose_hard_instance(pa, pb, args.n)
    half = args.n // 2
    branch = adaptive_adversary(pa, list(range(half)) + [inst.start_a], inst.start_a, args.n // 32, n_prime=args.n)
    write_graph(args.out, inst.graph, (inst.start_a, inst.start_b))
    with open(args.report, "w", encoding="ascii") as fh:
        fh.write(format_adversary_report(branch, inst))
    print(f"wrote {args.out} (starts {inst.start_a} {inst.start_b}) and {args.report}")
    return EXIT_OK


def _cmd_verify(args):
    graph, starts = read_graph(args.graph)
    check = args.check
    if check == "graph":
        print(f"graph: pass (n={graph.n} m={graph.num_edges} delta={graph.delta} Delta={graph.Delta})")
        return EXIT_OK
    if check.startswith("dense:"):
        try:
            a, alpha, beta = check[6:].split(",")
            a, alpha, beta = int(a), float(alpha), float(beta)
        except ValueError:
            raise UsageError(f"bad dense check {check!r}; expected dense:A,ALPHA,BETA") from None
        if a not in graph:
            raise UsageError(f"vertex {a} is not in the graph")
        res = construct(graph, a, graph.delta)
        rep = is_dense(graph, a, res.T, alpha, beta)
        if rep.ok:
            print(f"dense: pass (|T|={len(res.T)})")
            return EXIT_OK
        print(f"dense: fail (condition {rep.failed}, witness {rep.witness})")
        return EXIT_VERIFY
    if check.startswith("lb:"):
        rep = lb_structure_check(graph, check[3:], starts)
        print(rep.format(), end="")
        return EXIT_OK if rep.ok else EXIT_VERIFY
    raise UsageError(f"unknown check {check!r}")


_COMMANDS = {
    "gen": _cmd_gen, "run": _cmd_run, "sweep": _cmd_sweep, "adversary": _cmd_adversary, "verify": _cmd_verify,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.cmd](args)
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (UsageError, GraphError, InstanceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RendezvousError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
