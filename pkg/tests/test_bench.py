import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rendezvous.bench import (
    CSV_HEADER,
    SweepConfig,
    TrialRecord,
    bound_main,
    bound_sweep,
    default_max_rounds,
    fit_scaling,
    format_records,
    make_programs,
    parse_records,
    run_trials,
    summarize,
)
from rendezvous.graphcore import InstanceSpec, gen_family


def rec(n, met=True, rounds=10, trial=0, algo="main", **kw):
    base = dict(
        family="clique", n=n, n_prime=n, delta=n - 1, Delta=n - 1, algo=algo, model="kt1",
        seed=trial, trial=trial, met=met, meeting_round=rounds if met else None,
        construct_rounds=None, strict_runs=None, restarts=0,
    )
    base.update(kw)
    return TrialRecord(**base)


records_st = st.lists(
    st.builds(
        lambda n, met, r, t, c, s, rs: rec(n, met, r, t, construct_rounds=c, strict_runs=s, restarts=rs),
        st.integers(2, 5000), st.booleans(), st.integers(0, 10**9), st.integers(0, 99),
        st.none() | st.integers(0, 10**6), st.none() | st.integers(0, 50), st.integers(0, 20),
    ),
    max_size=20,
)


@settings(max_examples=60, deadline=None)
@given(records_st)
def test_csv_round_trip(records):
    text = format_records(records)
    back = parse_records(text)
    assert sorted(back, key=repr) == sorted(records, key=repr)
    assert format_records(back) == text


def test_csv_header_and_empty_fields():
    text = format_records([rec(8, met=False)])
    head, row = text.splitlines()
    assert head == ",".join(CSV_HEADER)
    assert row == "clique,8,8,7,7,main,kt1,0,0,false,,,,0"


def test_csv_wrong_header_rejected():
    with pytest.raises(ValueError):
        parse_records("n,met\n4,true\n")


def test_unmet_record_cannot_carry_round():
    with pytest.raises(ValueError):
        TrialRecord("clique", 4, 4, 3, 3, "main", "kt1", 0, 0, False, 5, None, None, 0)


def test_fit_constant_rounds_has_zero_exponent():
    rs = [rec(n, rounds=40, trial=i) for n in (64, 128, 256, 512) for i in range(3)]
    rep = fit_scaling(rs)
    assert rep.exponent == pytest.approx(0.0, abs=1e-12)
    assert rep.intercept == pytest.approx(math.log(40))


def test_fit_linear_rounds():
    rs = [rec(n, rounds=3 * n + i, trial=i) for n in (100, 200, 400, 800) for i in range(-1, 2)]
    rep = fit_scaling(rs)
    assert abs(rep.exponent - 1.0) <= 0.01
    assert all(abs(r) < 1e-3 for r in rep.residuals)


def test_fit_matches_numpy_polyfit():
    ns, meds = [50, 90, 400], [7, 30, 111]
    rs = [rec(n, rounds=m) for n, m in zip(ns, meds)]
    ref = np.polyfit(np.log(ns), np.log(meds), 1)
    rep = fit_scaling(rs)
    assert rep.exponent == pytest.approx(ref[0]) and rep.intercept == pytest.approx(ref[1])


def test_fit_reads_csv_text_and_filters_algo():
    rs = [rec(n, rounds=n, algo="main") for n in (10, 20)] + [rec(n, rounds=5, algo="sweep") for n in (10, 20)]
    assert fit_scaling(format_records(rs), algo="sweep").exponent == pytest.approx(0.0, abs=1e-12)


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_scaling([])
    with pytest.raises(ValueError):
        fit_scaling([rec(8), rec(8, trial=1)])
    with pytest.raises(ValueError):
        fit_scaling([rec(8), rec(16, met=False)])


def test_fit_ratio_to_bound():
    rs = [rec(n, rounds=n - 1) for n in (16, 32)]
    rep = fit_scaling(rs, bound="sweep")
    for n, row in rep.per_n.items():
        assert row["bound"] == bound_sweep(n, n - 1, n - 1)
        assert row["C"] == pytest.approx(1.0)


def test_unmet_trials_counted_not_fitted():
    rs = [rec(16, rounds=4), rec(16, met=False, trial=1), rec(32, rounds=8)]
    rep = fit_scaling(rs)
    assert rep.per_n[16]["unmet"] == 1 and rep.per_n[16]["median"] == 4
    assert rep.exponent == pytest.approx(1.0)


def test_bound_main_value():
    n, d, D = 1024, 32, 64
    ln = math.log(n)
    assert bound_main(n, d, D) == pytest.approx(n / d * ln * ln + math.sqrt(n * D / d) * ln)


def test_default_cap():
    g, _ = gen_family(InstanceSpec("clique", 16, seed=0))
    assert default_max_rounds("sweep", g) == 50 * 15
    assert default_max_rounds("randomwalk", g) == 10**7


def test_make_programs_unknown():
    g, _ = gen_family(InstanceSpec("clique", 4, seed=0))
    with pytest.raises(ValueError):
        make_programs("teleport", g)


def test_run_trials_reproducible():
    cfg = SweepConfig("random-min-degree", "main", (64, 128), 3, seed_base=5)
    a, b = run_trials(cfg), run_trials(cfg)
    assert format_records(a) == format_records(b)
    assert [r.seed for r in a if r.n == 64] == [5, 6, 7]
    assert all(r.delta >= math.ceil(r.n ** 0.75) for r in a)


def test_run_trials_sweep_on_clique_meets_first_probe():
    cfg = SweepConfig("clique", "sweep", (8, 16), 2)
    assert all(r.met and r.meeting_round % 2 == 1 for r in run_trials(cfg))


def test_summarize():
    s = summarize([rec(8, rounds=2), rec(8, rounds=4, trial=1), rec(8, met=False, trial=2)])
    assert s == {"trials": 3, "met": 2, "median": 3.0, "p95": pytest.approx(3.9)}
