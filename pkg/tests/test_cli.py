import json
import shutil
import subprocess

import pytest

from fedwalk.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main, parse_config_file, resolve_config, build_parser
from fedwalk.graph import stochastic_block_model, write_edge_list
from fedwalk.privacy import random_source

SMALL_FLAGS = ["--l", "8", "--gamma", "2", "--d", "8", "--w", "2", "--train-ratios", "0.5", "--seed", "3"]


def theory_rows(out):
    rows = {}
    for line in out.splitlines()[1:]:
        l, p, e, *_ = line.split()
        rows[(int(l), float(p))] = float(e)
    return rows


def test_theory_default_table(capsys):
    assert main(["theory"]) == EXIT_OK
    rows = theory_rows(capsys.readouterr().out)
    assert rows[(40, 0.0)] == 39.0
    assert abs(rows[(40, 0.2)] - 32.30) < 0.01
    assert set(p for _, p in rows) == {0.0, 0.1, 0.2, 0.3, 0.4}


def test_theory_short_walk(capsys):
    assert main(["theory", "--l", "2", "--p", "0.9"]) == EXIT_OK
    assert theory_rows(capsys.readouterr().out)[(2, 0.9)] == 1.0


def test_theory_total_savings(capsys):
    main(["theory", "--l", "40", "--p", "0", "--num-vertices", "10", "--gamma", "80"])
    assert capsys.readouterr().out.splitlines()[1].split()[-1] == "0.00"


@pytest.mark.parametrize("argv", [[], ["bogus"], ["theory", "--l", "x"], ["pipeline"], ["walk", "--edges", "e"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_help_is_ok(capsys):
    assert main(["--help"]) == EXIT_OK


def test_missing_input_is_data_error(tmp_path, capsys):
    assert main(["hct", "--edges", str(tmp_path / "nope.txt"), "--out", str(tmp_path)]) == EXIT_DATA


def test_malformed_input_is_data_error(tmp_path, capsys):
    bad = tmp_path / "e.txt"
    bad.write_text("0 1\n1 1\n")
    assert main(["pipeline", "--edges", str(bad), "--out", str(tmp_path / "o")]) == EXIT_DATA
    assert "self-loop" in capsys.readouterr().err


def test_bad_parameter_is_usage_error(tmp_path):
    e = tmp_path / "e.txt"
    e.write_text("0 1\n")
    assert main(["hct", "--edges", str(e), "--out", str(tmp_path), "--p", "2"]) == EXIT_USAGE


def test_config_file_and_overrides(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# run\nepsilon = 0.5\np = 0.3\ntrain_ratios = 0.1, 0.2\nk = auto\n")
    assert parse_config_file(str(cfg))["p"] == "0.3"
    args = build_parser().parse_args(["hct", "--edges", "e", "--out", "o", "--config", str(cfg), "--p", "0.1"])
    c = resolve_config(args)
    assert (c.epsilon, c.p, c.train_ratios, c.k) == (0.5, 0.1, (0.1, 0.2), None)
    monkeypatch.setenv("FEDWALK_CONFIG", str(cfg))
    c = resolve_config(build_parser().parse_args(["hct", "--edges", "e", "--out", "o"]))
    assert c.p == 0.3


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("flavour = 3\n")
    assert main(["hct", "--edges", "e", "--out", "o", "--config", str(cfg)]) == EXIT_USAGE


@pytest.fixture
def sbm_files(tmp_path):
    g, labels = stochastic_block_model([10, 10], 0.5, 0.05, random_source(60))
    edges = tmp_path / "edges.txt"
    write_edge_list(g, str(edges))
    lab = tmp_path / "labels.txt"
    lab.write_text("".join(f"{v} {min(s)}\n" for v, s in enumerate(labels.labels)))
    return str(edges), str(lab)


def test_stagewise_commands_match_pipeline(tmp_path, sbm_files, capsys):
    edges, labels = sbm_files
    h, w, e = tmp_path / "h", tmp_path / "w", tmp_path / "emb.txt"
    assert main(["hct", "--edges", edges, "--out", str(h), *SMALL_FLAGS]) == EXIT_OK
    assert main(["walk", "--edges", edges, "--hct-dir", str(h), "--out", str(w), *SMALL_FLAGS]) == EXIT_OK
    assert main(["embed", "--corpus", str(w / "corpus.txt"), "--edges", edges, "--out", str(e), *SMALL_FLAGS]) == 0
    m = tmp_path / "metrics.json"
    assert main(["eval", "--embeddings", str(e), "--edges", edges, "--labels", labels, "--out", str(m), *SMALL_FLAGS]) == 0
    p = tmp_path / "pipe"
    assert main(["pipeline", "--edges", edges, "--labels", labels, "--out", str(p), *SMALL_FLAGS]) == EXIT_OK
    assert (w / "corpus.txt").read_text() == (p / "corpus.txt").read_text()
    assert e.read_text() == (p / "embeddings.txt").read_text()
    staged = json.loads(m.read_text())["metrics"]
    piped = json.loads((p / "metrics.json").read_text())["metrics"]
    assert staged == piped


@pytest.mark.skipif(shutil.which("fedwalk") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["fedwalk", "theory", "--l", "40", "--p", "0.1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "35.3554" in res.stdout
    assert subprocess.run(["fedwalk"], capture_output=True).returncode == EXIT_USAGE
