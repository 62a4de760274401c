import csv
import json
import random

import pytest

from divr.cli import main
from divr.diversity import DiversityReport, DiversityWeights, combined_diversity

FIXTURE = "tests/data/records_20.jsonl"


def test_score_text(capsys):
    assert main(["score", "--text", "a a a a"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["lex"] == 0.25
    assert data["token_count"] == 4


def test_score_file(tmp_path, capsys):
    path = tmp_path / "in.txt"
    path.write_text("the cat sat . the dog ran .", encoding="utf-8")
    assert main(["score", "--file", str(path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["adj"] == pytest.approx(0.8, abs=1e-12)


def test_unknown_flag_is_usage_error(capsys):
    assert main(["score", "--no-such-flag"]) == 2


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2


def test_missing_file_is_runtime_error(capsys):
    assert main(["score", "--file", "does/not/exist.txt"]) == 1
    assert "error:" in capsys.readouterr().err


def test_empty_text_is_runtime_error(capsys):
    assert main(["score", "--text", "   "]) == 1


def test_pipeline_build_deterministic(tmp_path, capsys):
    outs = []
    for run in range(2):
        out = tmp_path / f"sft{run}.jsonl"
        code = main([
            "pipeline", "build",
            "--dataset", FIXTURE,
            "--out", str(out),
            "--transport", "synthetic",
            "--seed", "11",
            "--samples-per-role", "3",
            "--cache-dir", str(tmp_path / f"cache{run}"),
        ])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0]) > 0
    stats = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert stats["examples_kept"] > 0


def test_pipeline_build_ground_truth_filter(tmp_path):
    out = tmp_path / "sft-gt.jsonl"
    code = main([
        "pipeline", "build",
        "--dataset", FIXTURE,
        "--out", str(out),
        "--transport", "synthetic",
        "--seed", "3",
        "--samples-per-role", "4",
        "--filter", "ground-truth-hinted",
        "--cache-dir", str(tmp_path / "cache"),
    ])
    assert code == 0
    assert out.exists()


def test_eval_with_waits_records_continuations(tmp_path, capsys):
    out_dir = tmp_path / "run"
    code = main([
        "eval",
        "--dataset", FIXTURE,
        "--out", str(out_dir),
        "--strategy", "morethink",
        "--waits", "3",
        "--transport", "synthetic",
        "--seed", "2",
        "--cache-dir", str(tmp_path / "cache"),
    ])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["out_dir"] == str(out_dir)
    with open(out_dir / "records.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 20
    assert all(row["injected_continuations"] == "3" for row in rows)
    assert (out_dir / "summary.json").exists()
    assert (out_dir / "scatter.svg").exists()
    assert (out_dir / "outputs.jsonl").exists()


def test_eval_zerothink(tmp_path, capsys):
    out_dir = tmp_path / "run0"
    code = main([
        "eval",
        "--dataset", FIXTURE,
        "--out", str(out_dir),
        "--strategy", "zerothink",
        "--transport", "synthetic",
        "--cache-dir", str(tmp_path / "cache"),
    ])
    assert code == 0
    rows = list(csv.DictReader(open(out_dir / "records.csv", newline="", encoding="utf-8")))
    assert all(row["injected_continuations"] == "0" for row in rows)


def test_calibrate_cli(tmp_path, capsys):
    rng = random.Random(4)
    path = tmp_path / "ratings.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(40):
            subs = [rng.random() for _ in range(8)]
            report = DiversityReport(*subs, token_count=30)
            rating = 1 + 9 * combined_diversity(report, DiversityWeights())
            row = dict(zip(
                ("lex", "ent", "len", "pat", "adj", "yule", "bi", "func"), subs
            ))
            row["rating"] = rating
            fh.write(json.dumps(row) + "\n")
    assert main(["calibrate", "--ratings", str(path)]) == 0
    weights = json.loads(capsys.readouterr().out)
    assert set(weights) == {"lex", "ent", "len", "pat", "adj", "yule", "bi", "func"}
    assert sum(weights.values()) == pytest.approx(1.0, abs=1e-9)


def test_score_with_custom_weights(tmp_path, capsys):
    wpath = tmp_path / "w.json"
    wpath.write_text(json.dumps({
        "lex": 1.0, "ent": 0.0, "len": 0.0, "pat": 0.0,
        "adj": 0.0, "yule": 0.0, "bi": 0.0, "func": 0.0,
    }), encoding="utf-8")
    assert main(["score", "--text", "a a a a", "--weights", str(wpath)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["combined"] == 0.25  # pure TTR under degenerate weights
