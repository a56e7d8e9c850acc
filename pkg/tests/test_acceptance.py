"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Statistical thresholds are taken as stated; the oracles are the exact
combinatorial checks in ``graphcore`` (or networkx where noted).
"""

import math
from functools import lru_cache

import numpy as np

from rendezvous.adversarial import adaptive_adversary, adversary_guarantees, compose_hard_instance
from rendezvous.baselines import Idle, SweepA
from rendezvous.bench import SweepConfig, fit_scaling, run_trials
from rendezvous.graphcore import (
    InstanceSpec,
    NeighborhoodModel,
    gen_family,
    heavy_set,
    is_dense,
    light_set,
    planted_pocket,
    shortest_paths_within,
)
from rendezvous.rdv import (
    build_phi,
    construct,
    construct_with_doubling,
    main_rendezvous_programs,
    nowb_programs,
    phase_schedule,
    sample_subroutine,
)
from rendezvous.sim import run_execution

KT1 = NeighborhoodModel.KT1
RUNS = 100


@lru_cache(maxsize=None)
def dense_runs(n):
    out = []
    for seed in range(RUNS):
        g, (a, _) = gen_family(InstanceSpec("random-min-degree", n, target_delta=math.ceil(n ** 0.6), seed=seed))
        res = construct(g, a, g.delta, seed=seed)
        out.append((g, a, res))
    return out


def test_criterion_1_dense_set(report):
    ok = True
    detail = []
    for n in (256, 512, 1024):
        good = sum(bool(is_dense(g, a, res.T, g.delta / 8, 2)) for g, a, res in dense_runs(n))
        detail.append(f"n={n}:{good}/{RUNS}")
        ok &= good >= 99
    report("criterion 1 (dense set)", ok, " ".join(detail))
    assert ok


def test_criterion_2_sample_one_sided(report):
    n = 512
    upper = lower = 0
    calls = 200
    for seed in range(calls):
        g, (a, _) = gen_family(
            InstanceSpec("random-min-degree", n, target_delta=math.ceil(n ** 0.6), seed=10_000 + seed)
        )
        rng = np.random.default_rng(seed)
        ball = sorted(shortest_paths_within(g, a, 2))
        size = int(rng.integers(g.delta // 2, 2 * g.delta + 1))
        gamma = rng.choice(ball, size=min(size, len(ball)), replace=False).tolist()
        alpha = g.delta / 8
        h = sample_subroutine(g, a, gamma, alpha, seed=seed).heavy
        upper += h <= heavy_set(g, gamma, alpha)
        lower += (g.closed_neighborhood(a) - h) <= light_set(g, gamma, 4 * alpha)
    ok = upper == calls and lower >= 199
    report("criterion 2 (sample one-sided)", ok, f"H' in H_alpha {upper}/{calls}, rest in L_4alpha {lower}/{calls}")
    assert ok


def test_criterion_3_budgets(report):
    iter_ok = strict_ok = total = 0
    for n in (256, 512, 1024):
        for g, a, res in dense_runs(n):
            total += 1
            iter_ok += (not res.all_light) or res.iterations_used <= 2 * n / g.delta
            strict_ok += res.strict_runs_used <= 4 * math.log2(n)
    ok = iter_ok == strict_ok == total
    report("criterion 3 (construct budgets)", ok, f"iterations {iter_ok}/{total}, strict runs {strict_ok}/{total}")
    assert ok


def test_criterion_4_end_to_end(report):
    g, (a, b) = gen_family(InstanceSpec("clique", 512, seed=0))
    cap = 50 * math.sqrt(512) * math.log(512)
    clique_met = 0
    for seed in range(RUNS):
        pa, pb = main_rendezvous_programs(g.n_prime, g.delta)
        res = run_execution(g, KT1, pa, pb, a, b, math.floor(cap), seed)
        clique_met += res.met
    rand_met = 0
    n = 1024
    for seed in range(RUNS):
        h, (a, b) = gen_family(InstanceSpec("random-min-degree", n, target_delta=33, seed=seed))
        ln = math.log(n)
        cap = 50 * (n / h.delta * ln * ln + math.sqrt(n * h.Delta / h.delta) * ln)
        pa, pb = main_rendezvous_programs(h.n_prime, h.delta)
        res = run_execution(h, KT1, pa, pb, a, b, math.floor(cap), seed)
        rand_met += res.met
    ok = clique_met >= 95 and rand_met >= 95
    report("criterion 4 (end-to-end)", ok, f"K_512 {clique_met}/{RUNS}, random n=1024 {rand_met}/{RUNS}")
    assert ok


def test_criterion_5_whiteboard_free(report):
    n = 512
    g, (a, b) = gen_family(InstanceSpec("clique", n, seed=0))
    plan = phase_schedule(n, n, g.delta, 64, 18)
    deadline = plan.t_prime + plan.n_phases * plan.phase_len
    assert plan.n_phases == math.ceil(n / plan.beta)
    met = 0
    for seed in range(RUNS):
        pa, pb = nowb_programs(n, n, g.delta, 64, 18)
        res = run_execution(g, KT1, pa, pb, a, b, deadline - 1, seed)
        met += res.met
    cap = 18 * math.log(n)
    inter = sparse = 0
    for seed in range(RUNS):
        rng = np.random.default_rng(seed)
        T = construct(g, a, g.delta, seed=seed).T
        phi_a = build_phi(T, n, g.delta, rng)
        phi_b = build_phi(g.closed_neighborhood(b), n, g.delta, rng)
        inter += bool(phi_a & phi_b)
        sparse += all(
            sum(lo <= v + 1 <= hi for v in phi) <= cap
            for phi in (phi_a, phi_b)
            for lo, hi in map(plan.block_bounds, range(1, plan.n_phases + 1))
        )
    ok = met >= 95 and inter >= 98 and sparse >= 98
    report("criterion 5 (whiteboard-free)", ok, f"met {met}/{RUNS}, intersect {inter}/{RUNS}, sparse {sparse}/{RUNS}")
    assert ok


def test_criterion_6_doubling(report):
    regular = []
    for seed in range(10):
        for fam, n in (("clique", 128), ("glued-cliques", 128)):
            g, (a, _) = gen_family(InstanceSpec(fam, n, seed=seed))
            regular.append(construct_with_doubling(g, a, seed=seed)[2]["restarts"])
    zero = sum(r == 0 for r in regular)
    within = 0
    restarted = 0
    for gseed in range(10):
        g, v0 = planted_pocket(1024, 64, 8, seed=gseed)
        for run in range(10):
            seed = 10 * gseed + run
            _, total, stats = construct_with_doubling(g, v0, seed=seed)
            ref = construct(g, v0, g.delta, seed=seed + 1000).rounds_used
            within += total <= 2 * ref
            restarted += stats["restarts"] > 0
    ok = zero == len(regular) and within >= 95
    report(
        "criterion 6 (doubling)", ok,
        f"regular zero-restart {zero}/{len(regular)}, pocket within 2x {within}/100 ({restarted} restarted)",
    )
    assert ok


def _sweep(identity):
    p = SweepA()
    p.identity = identity
    return p


def test_criterion_7_adversary(report):
    runs = good = 0
    composed = 0
    for n in (64, 128):
        t = n // 32
        for make in (_sweep, Idle):
            for v0 in (0, n // 4, n // 2):
                res = adaptive_adversary(make("a"), range(n // 2 + 1), v0, t)
                runs += 1
                good += 32 * len(res.W) >= 13 * n and not adversary_guarantees(res)
            inst = compose_hard_instance(make("a"), make("b"), n)
            res = run_execution(inst.graph, KT1, make("a"), make("b"), inst.start_a, inst.start_b, t, seed=0)
            composed += not res.met
    ok = good == runs and composed == 4
    report("criterion 7 (adversary)", ok, f"guarantees {good}/{runs}, composed unmet {composed}/4")
    assert ok


def test_criterion_8_scaling(report):
    ns = (256, 512, 1024, 2048)
    trials = 15
    exps = {}
    for algo in ("main", "sweep"):
        recs = run_trials(SweepConfig("random-min-degree", algo, ns, trials, seed_base=0, delta_exp=0.75))
        exps[algo] = fit_scaling(recs).exponent
    ok = exps["main"] <= exps["sweep"] - 0.15
    report("criterion 8 (scaling)", ok, f"exponent main={exps['main']:.3f} sweep={exps['sweep']:.3f}")
    assert ok
