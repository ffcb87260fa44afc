import pytest

import graphscan.cli as cli
from graphscan import EquivalenceReport, RunConfig, save_graph, build_graph, EdgeList
from conftest import TWO_COMMUNITIES


@pytest.fixture
def fixture_file(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text(
        "# two communities\n"
        + "\n".join(f"{u} {v}" for u, v in TWO_COMMUNITIES)
        + "\n"
    )
    return str(path)


def test_basic_run_writes_result(fixture_file, tmp_path):
    out = tmp_path / "out.txt"
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
         "--output", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 14
    assert lines[8] == "8\tH\t-1"
    assert lines[3] == "3\tO\t-1"
    roles = {ln.split("\t")[1] for ln in lines}
    assert roles == {"C", "M", "H", "O"}


def test_stdout_when_no_output(fixture_file, capsys):
    assert cli.main(["--input", fixture_file, "--epsilon", "0.6", "--mu", "3"]) == 0
    out = capsys.readouterr().out
    assert "8\tH\t-1" in out


def test_verify_passes(fixture_file):
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3", "--verify"]
    )
    assert code == 0


def test_verify_mismatch_exits_2(fixture_file, monkeypatch, capsys):
    monkeypatch.setattr(
        cli, "results_equivalent",
        lambda r, o: EquivalenceReport(False, "forced mismatch for testing"),
    )
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3", "--verify"]
    )
    assert code == 2
    assert "forced mismatch" in capsys.readouterr().err


def test_malformed_input_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\nx y\n")
    code = cli.main(["--input", str(bad), "--epsilon", "0.6", "--mu", "3"])
    assert code == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_file_exits_1(tmp_path):
    code = cli.main(
        ["--input", str(tmp_path / "nope.txt"), "--epsilon", "0.6", "--mu", "3"]
    )
    assert code == 1


def test_bad_epsilon_exits_1(fixture_file):
    assert cli.main(["--input", fixture_file, "--epsilon", "1.5", "--mu", "3"]) == 1
    assert cli.main(["--input", fixture_file, "--epsilon", "0", "--mu", "3"]) == 1


def test_bad_mu_exits_1(fixture_file):
    assert cli.main(["--input", fixture_file, "--epsilon", "0.5", "--mu", "1"]) == 1


def test_missing_required_flag_exits_1(fixture_file):
    with pytest.raises(SystemExit) as ei:
        cli.main(["--input", fixture_file, "--epsilon", "0.6"])
    assert ei.value.code == 1


def test_outofcore_requires_budget(fixture_file, capsys):
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
         "--mode", "outofcore"]
    )
    assert code == 1
    assert "--budget" in capsys.readouterr().err


def test_outofcore_runs_and_verifies(fixture_file, tmp_path):
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
         "--mode", "outofcore", "--budget", "650",
         "--spill-dir", str(tmp_path / "sp"), "--verify",
         "--output", str(tmp_path / "out.txt")]
    )
    assert code == 0


def test_infeasible_budget_exits_3(fixture_file, tmp_path, capsys):
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
         "--mode", "outofcore", "--budget", "250",
         "--spill-dir", str(tmp_path / "sp")]
    )
    assert code == 3
    assert "bytes" in capsys.readouterr().err


def test_stats_file(fixture_file, tmp_path):
    st = tmp_path / "stats.txt"
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
         "--stats", str(st), "--output", str(tmp_path / "o.txt")]
    )
    assert code == 0
    text = st.read_text()
    assert "sim_evals=" in text and "m=23" in text


def test_deterministic_byte_identical(fixture_file, tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.txt"
        code = cli.main(
            ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
             "--deterministic", "--workers", "8", "--output", str(out)]
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_binary_cache_input(tmp_path):
    g = build_graph(EdgeList(n_hint=14, edges=sorted(TWO_COMMUNITIES)))
    cache = tmp_path / "g.bin"
    save_graph(g, str(cache))
    out = tmp_path / "out.txt"
    code = cli.main(
        ["--input", str(cache), "--epsilon", "0.6", "--mu", "3",
         "--verify", "--output", str(out)]
    )
    assert code == 0
    assert "8\tH\t-1" in out.read_text()


def test_workers_flag(fixture_file, tmp_path):
    code = cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3",
         "--workers", "4", "--verify", "--output", str(tmp_path / "o.txt")]
    )
    assert code == 0
    assert cli.main(
        ["--input", fixture_file, "--epsilon", "0.6", "--mu", "3", "--workers", "0"]
    ) == 1


def test_run_config_direct(fixture_file, tmp_path):
    cfg = RunConfig(
        input_path=fixture_file, epsilon="0.6", mu=3,
        output_path=str(tmp_path / "o.txt"),
    )
    assert cli.run(cfg) == 0
