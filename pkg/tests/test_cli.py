import json
import subprocess
import sys

import pytest

from rendezvous.bench import read_records
from rendezvous.cli import main
from rendezvous.graphcore import read_graph


def gen(tmp_path, family, n, seed=0, *extra):
    out = tmp_path / f"{family}-{n}.txt"
    assert main(["gen", "--family", family, "--n", str(n), "--seed", str(seed), "-o", str(out), *extra]) == 0
    return out


def test_gen_writes_readable_file(tmp_path):
    out = gen(tmp_path, "random-min-degree", 100, 3, "--target-delta", "8")
    g, starts = read_graph(out)
    assert g.n == 100 and g.delta >= 8 and starts is not None


def test_gen_is_byte_identical(tmp_path):
    a = gen(tmp_path, "double-star", 16, 4).read_bytes()
    b = gen(tmp_path, "double-star", 16, 4).read_bytes()
    assert a == b


def test_gen_invalid_instance_exit_2(tmp_path, capsys):
    assert main(["gen", "--family", "double-star", "--n", "15", "--seed", "0", "-o", str(tmp_path / "x")]) == 2
    assert "error" in capsys.readouterr().err


def test_run_json(tmp_path, capsys):
    g = gen(tmp_path, "clique", 16)
    capsys.readouterr()
    code = main(["run", "--graph", str(g), "--algo", "sweep", "--model", "kt1", "--seed", "1",
                 "--max-rounds", "100", "--json"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert out["met"] is True and out["meeting_round"] % 2 == 1


def test_run_trace_file(tmp_path):
    g = gen(tmp_path, "clique", 8)
    trace = tmp_path / "t.csv"
    main(["run", "--graph", str(g), "--algo", "main", "--model", "kt1", "--seed", "2",
          "--max-rounds", "1000", "--trace", str(trace)])
    lines = trace.read_text().splitlines()
    assert lines[0] == "round,pos_a,pos_b,wb_writes"
    assert [int(x.split(",")[0]) for x in lines[1:]] == list(range(len(lines) - 1))


def test_run_kt1_algo_under_port_only_exit_3(tmp_path):
    g = gen(tmp_path, "clique", 8)
    code = main(["run", "--graph", str(g), "--algo", "main", "--model", "portonly", "--seed", "0",
                 "--max-rounds", "10"])
    assert code == 3


def test_run_missing_file_exit_2(tmp_path):
    code = main(["run", "--graph", str(tmp_path / "nope"), "--algo", "sweep", "--model", "kt1", "--seed", "0",
                 "--max-rounds", "10"])
    assert code == 2


def test_run_needs_starts(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("2 2\n0: 1\n1: 0\n")
    code = main(["run", "--graph", str(p), "--algo", "sweep", "--model", "kt1", "--seed", "0", "--max-rounds", "5"])
    assert code == 2
    code = main(["run", "--graph", str(p), "--algo", "sweep", "--model", "kt1", "--seed", "0", "--max-rounds", "5",
                 "--start-a", "0", "--start-b", "1"])
    assert code == 0


def test_bad_subcommand_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["fly"])
    assert info.value.code == 2


def test_sweep_csv_and_fit(tmp_path, capsys):
    out = tmp_path / "s.csv"
    args = ["sweep", "--family", "clique", "--algo", "sweep", "--n-list", "8,16,32", "--trials", "2",
            "--seed-base", "0", "--out", str(out)]
    assert main(args) == 0
    text = capsys.readouterr().out
    assert "exponent:" in text
    recs = read_records(out)
    assert len(recs) == 6 and all(r.met for r in recs)
    first = out.read_bytes()
    main(args)
    assert out.read_bytes() == first


def test_sweep_bad_n_list(tmp_path):
    assert main(["sweep", "--family", "clique", "--algo", "sweep", "--n-list", "8,x", "--trials", "1",
                 "--seed-base", "0", "--out", str(tmp_path / "s.csv")]) == 2


def test_adversary_and_verify(tmp_path, capsys):
    inst, rep = tmp_path / "hard.txt", tmp_path / "hard.rep"
    assert main(["adversary", "--prog", "sweep", "--n", "64", "--out", str(inst), "--report", str(rep)]) == 0
    text = rep.read_text()
    assert "guarantees: pass" in text and "composed_met_within_budget: false" in text
    assert main(["verify", "--graph", str(inst), "--check", "lb:composed"]) == 0
    assert main(["verify", "--graph", str(inst), "--check", "graph"]) == 0


def test_adversary_unknown_program(tmp_path):
    assert main(["adversary", "--prog", "magic", "--n", "64", "--out", str(tmp_path / "a"),
                 "--report", str(tmp_path / "b")]) == 2


def test_verify_dense(tmp_path, capsys):
    g = gen(tmp_path, "random-min-degree", 200, 1, "--target-delta", "20")
    assert main(["verify", "--graph", str(g), "--check", "dense:0,2.5,2"]) == 0
    assert "dense: pass" in capsys.readouterr().out
    # no set can reach the whole closed neighborhood count at radius 0
    assert main(["verify", "--graph", str(g), "--check", "dense:0,2.5,0"]) == 4


def test_verify_lb_failure_exit_4(tmp_path):
    g = gen(tmp_path, "clique", 16)
    assert main(["verify", "--graph", str(g), "--check", "lb:double-star"]) == 4


def test_verify_bad_check(tmp_path):
    g = gen(tmp_path, "clique", 4)
    assert main(["verify", "--graph", str(g), "--check", "dense:1"]) == 2
    assert main(["verify", "--graph", str(g), "--check", "shape"]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "c.txt"
    proc = subprocess.run(
        [sys.executable, "-m", "rendezvous", "gen", "--family", "clique", "--n", "6", "--seed", "0", "-o", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and out.exists()
