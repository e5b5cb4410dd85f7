import csv
import io
import json

from enginespace.cli import main

RELU128 = "(workload (input x (128)) (output (relu x)))\n"
RELU4 = "(workload (input x (4)) (output (relu x)))\n"


def _wl(tmp_path, text, name="work.wl"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _explore(tmp_path, text, *flags):
    wl = _wl(tmp_path, text)
    out = tmp_path / "report.json"
    code = main(["explore", wl, "--out", str(out), *flags])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_explore_report_schema(tmp_path):
    code, report = _explore(tmp_path, RELU128, "--iters", "10", "--samples", "20", "--seed", "7")
    assert code == 0
    assert set(report) == {
        "workload",
        "run",
        "space",
        "samples",
        "diversity",
        "extremes",
        "config",
    }
    assert report["workload"]["name"] == "work"
    assert report["workload"]["ops"] == ["relu"]
    assert report["workload"]["inputs"] == {"x": [128]}
    assert report["run"]["saturated"] is True
    assert report["space"]["root_count"] >= 8
    assert report["space"]["root_count"] == 3**7  # frozen from the enumerator
    assert len(report["samples"]) == 20
    for s in report["samples"]:
        assert set(s) == {"term", "inventory", "area_proxy", "latency_proxy", "engine_count"}
    assert set(report["extremes"]) == {"min_area", "min_latency"}
    assert report["extremes"]["min_area"]["area_proxy"] == 1
    assert report["config"]["seed"] == 7
    assert report["config"]["flags"]["rules"] == ["r1", "r2", "r3", "r4", "r5"]


def test_explore_is_byte_identical_across_runs(tmp_path):
    wl = _wl(tmp_path, RELU128)
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["explore", wl, "--seed", "9", "--out", str(out1)]) == 0
    assert main(["explore", wl, "--seed", "9", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_explore_writes_to_stdout_by_default(tmp_path, capsys):
    wl = _wl(tmp_path, RELU4)
    assert main(["explore", wl, "--samples", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["space"]["root_count"] == 9


def test_explore_seq_only_rules(tmp_path):
    code, report = _explore(tmp_path, RELU4, "--rules", "r1")
    assert code == 0
    assert report["space"]["root_count"] == 4


def test_explore_parse_error_exits_1(tmp_path, capsys):
    wl = _wl(tmp_path, "(workload (input x (8)) (output (foo x)))")
    assert main(["explore", wl]) == 1
    err = capsys.readouterr().err
    assert "line" in err and "col" in err


def test_explore_shape_error_exits_1(tmp_path, capsys):
    wl = _wl(tmp_path, "(workload (input a (8)) (input b (4)) (output (add a b)))")
    assert main(["explore", wl]) == 1
    assert "add" in capsys.readouterr().err


def test_explore_missing_file_exits_2(tmp_path, capsys):
    assert main(["explore", str(tmp_path / "nope.wl")]) == 2
    assert "error" in capsys.readouterr().err


def test_explore_limit_stop_still_exits_0(tmp_path):
    code, report = _explore(tmp_path, f"(workload (input x ({2**20})) (output (relu x)))", "--max-nodes", "100")
    assert code == 0
    assert report["run"]["saturated"] is False
    assert report["run"]["stop_reason"] == "max_nodes"


def test_verify_default_rules_pass(tmp_path, capsys):
    wl = _wl(tmp_path, RELU128)
    assert main(["verify", wl, "--samples", "20", "--seed", "3"]) == 0
    assert "all equal" in capsys.readouterr().out


def test_verify_broken_rule_exits_3_with_counterexample(tmp_path, capsys):
    wl = _wl(tmp_path, RELU128)
    code = main(["verify", wl, "--rules", "r1,r1-broken", "--samples", "40", "--seed", "3"])
    captured = capsys.readouterr()
    assert code == 3
    assert "COUNTEREXAMPLE" in captured.err
    assert "(engine add" in captured.err  # the offending design is printed
    assert "input seed" in captured.err


def test_verify_zero_samples_is_trivially_ok(tmp_path, capsys):
    wl = _wl(tmp_path, RELU128)
    assert main(["verify", wl, "--samples", "0"]) == 0
    assert "zero designs" in capsys.readouterr().out


def test_verify_writes_report_when_asked(tmp_path, capsys):
    wl = _wl(tmp_path, RELU128)
    out = tmp_path / "verify.json"
    assert main(["verify", wl, "--samples", "5", "--out", str(out)]) == 0
    capsys.readouterr()
    assert json.loads(out.read_text())["space"]["root_count"] == 3**7


def test_stats_csv(tmp_path):
    wl = _wl(tmp_path, RELU4)
    out = tmp_path / "stats.csv"
    assert main(["stats", wl, "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert rows[0]["iteration"] == "0"
    assert rows[0]["count_terms"] == "1"  # the seed design
    counts = [int(r["count_terms"]) for r in rows]
    assert counts == sorted(counts)
    assert counts[-1] == 9


def test_stats_binary_seq_only_width_64(tmp_path):
    wl = _wl(tmp_path, "(workload (input x (64)) (output (relu x)))")
    out = tmp_path / "stats.csv"
    assert main(["stats", wl, "--rules", "r1", "--binary-splits", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert int(rows[-1]["count_terms"]) == 7


def test_stats_full_rules_width_1024_under_node_cap(tmp_path):
    wl = _wl(tmp_path, f"(workload (input x ({2**10})) (output (relu x)))")
    out = tmp_path / "stats.csv"
    assert main(["stats", wl, "--max-nodes", str(10**5), "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert int(rows[-1]["count_terms"]) >= 2**10


def test_stats_pow2_policy_recorded_and_applied(tmp_path):
    code, report = _explore(tmp_path, "(workload (input x (12)) (output (relu x)))", "--pow2-only")
    assert code == 0
    assert report["config"]["flags"]["factor_policy"] == "pow2"
    # width 12 with pow2 factors: {2,4} chains only
    from oracles import enumerate_relu_schedules

    assert report["space"]["root_count"] == len(enumerate_relu_schedules(12, policy="pow2"))


def test_unknown_rule_name_exits_1(tmp_path, capsys):
    wl = _wl(tmp_path, RELU4)
    assert main(["explore", wl, "--rules", "r9"]) == 1
    assert "unknown rule" in capsys.readouterr().err
