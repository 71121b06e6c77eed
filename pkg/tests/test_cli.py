import json

import pytest

from ruledistill.cli import main


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["train", "--episodes", "20000", "--out", str(root / "t")]) == 0
    assert main(["distill", "--qtable", str(root / "t/qtable.tsv"), "--out", str(root / "d")]) == 0
    return root


def test_train_and_distill_outputs(run):
    assert (run / "t/qtable.tsv").read_text().startswith("x\ty\taction\tq\n")
    assert json.loads((run / "t/train.json").read_text())["greedy_evaluation"]["truncated"] == 0
    lines = (run / "d/rules.txt").read_text().splitlines()
    assert lines[0] == "1. IF X<=18 THEN Class=RIGHT"
    assert lines[1] in ("2. IF X=19 THEN Class=UP", "2. IF X>=19 THEN Class=UP")
    assert lines[2].endswith("IF TRUE THEN Class=UP")
    for name in ("rules.json", "dataset.csv", "schema.json", "trajectories.jsonl"):
        assert (run / "d" / name).is_file()


def test_single_label_gives_a_longer_list(run):
    out = run / "s"
    assert main(["distill", "--trajectories", str(run / "d/trajectories.jsonl"), "--single-label",
                 "--heuristic", "wra", "--seed", "0", "--out", str(out)]) == 0
    n_single = len((out / "rules.txt").read_text().splitlines())
    assert n_single > 3


def test_refine_and_evaluate(run, capsys):
    assert main(["refine", "--qtable", str(run / "t/qtable.tsv"), "--rules", str(run / "d/rules.json"),
                 "--data", str(run / "d/dataset.csv"), "--out", str(run / "r")]) == 0
    tree = (run / "r/tree.txt").read_text()
    assert "  1.1. IF X<=18 AND" in tree
    assert main(["evaluate", "--qtable", str(run / "t/qtable.tsv"), "--rules", str(run / "d/rules.txt"),
                 "--rules", str(run / "r/tree.json"), "--out", str(run / "e")]) == 0
    report = json.loads((run / "e/report.json").read_text())
    assert [a["agent"] for a in report["agents"]] == ["policy:qtable.tsv", "rules:rules.txt",
                                                      "rules:tree.json"]
    assert report["config"]["episodes"] == 50
    assert "mean" in capsys.readouterr().out


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"episodes": 300, "gamma": 0.9, "out": str(tmp_path / "o")}))
    assert main(["train", "--config", str(cfg), "--seed", "2"]) == 0
    rec = json.loads((tmp_path / "o/train.json").read_text())["config"]
    assert (rec["episodes"], rec["gamma"], rec["seed"]) == (300, 0.9, 2)


@pytest.mark.parametrize("argv", [
    ["train", "--gamma", "1.2", "--out", "x"],
    ["train", "--out", "x", "--episodes", "-3"],
    ["evaluate", "--episodes", "0", "--rules", "r.txt", "--out", "x"],
    ["refine", "--qtable", "missing.tsv", "--rules", "r.json", "--data", "d.csv", "--out", "x"],
    ["distill", "--out", "x"],
    ["distill", "--qtable", "q.tsv", "--tau", "0", "--out", "x"],
    ["distill", "--qtable", "q.tsv", "--beam-width", "0", "--out", "x"],
    ["train"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_argparse_errors_exit_2(tmp_path):
    with pytest.raises(SystemExit) as e:
        main(["distill", "--heuristic", "gini", "--out", str(tmp_path)])
    assert e.value.code == 2
    bad = tmp_path / "c.json"
    bad.write_text('{"nonsense": 1}')
    with pytest.raises(SystemExit) as e:
        main(["train", "--config", str(bad), "--out", str(tmp_path)])
    assert e.value.code == 2


def test_empty_trajectory_file_is_named(tmp_path, capsys):
    f = tmp_path / "empty.jsonl"
    f.write_text("")
    assert main(["distill", "--trajectories", str(f), "--out", str(tmp_path / "o")]) == 1
    assert "empty.jsonl" in capsys.readouterr().err
