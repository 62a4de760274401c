import csv
import json
import re

import pytest

from divr.evaluation import EvalResult, RecordScore, evaluate
from divr.diversity import score_text
from divr.pipeline import DatasetRecord
from divr.reporting import emit_report, least_squares, render_scatter_svg
from divr.rewards import GroundTruth

SLOPE_RE = re.compile(r'data-slope="([^"]+)"')


def record_score(rid, accuracy, text):
    return RecordScore(
        record_id=rid, answers={"final": "A"}, accuracy=accuracy,
        diversity=score_text(text), injected_continuations=None,
    )


def make_result(pairs):
    result = EvalResult(per_record=[record_score(f"r{i}", acc, text) for i, (acc, text) in enumerate(pairs)])
    if result.per_record:
        result.aggregate_accuracy = sum(p[0] for p in pairs) / len(pairs)
    return result


def test_emit_report_files_and_row_counts(tmp_path):
    result = make_result([
        (1.0, "one fine sentence. another follows!"),
        (0.0, "plain words repeat words repeat."),
        (0.5, "should the answer vary? perhaps so."),
    ])
    paths = emit_report(result, tmp_path / "run")
    assert all(p.exists() for p in paths.values())

    with open(paths["records"], newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4  # header + 3 records
    assert rows[0][0] == "id"

    summary = json.loads(paths["summary"].read_text())
    assert summary["record_count"] == 3
    assert summary["aggregate_accuracy"] == pytest.approx(0.5)


def test_empty_result_emits_headers_only(tmp_path):
    paths = emit_report(EvalResult(), tmp_path / "empty")
    with open(paths["records"], newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1
    svg = paths["scatter"].read_text()
    assert "<svg" in svg and "circle" not in svg


def test_least_squares_closed_form():
    fit = least_squares([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])
    assert fit is not None
    slope, intercept = fit
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(1.0, abs=1e-12)
    assert least_squares([1.0, 1.0], [0.0, 1.0]) is None
    assert least_squares([1.0], [2.0]) is None


def _analytic_slope(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)


def test_svg_slope_matches_independent_least_squares(tmp_path):
    result = make_result([
        (0.0, "short words here."),
        (0.25, "some more variety appears in this line, truly!"),
        (0.5, "does variety continue to increase? it does. onward we go!"),
        (1.0, "many distinct ideas flow: first, second, third? fourth! fifth concludes."),
    ])
    paths = emit_report(result, tmp_path / "fit")
    svg = paths["scatter"].read_text()
    match = SLOPE_RE.search(svg)
    assert match is not None
    emitted = float(match.group(1))
    xs = [r.diversity.d_norm for r in result.per_record]
    ys = [r.accuracy for r in result.per_record]
    assert emitted == pytest.approx(_analytic_slope(xs, ys), abs=1e-6)


def test_perfectly_linear_scatter_slope(tmp_path):
    xs = [0.1, 0.2, 0.3, 0.4]
    ys = [3.0 * x + 0.05 for x in xs]
    svg = render_scatter_svg(xs, ys)
    emitted = float(SLOPE_RE.search(svg).group(1))
    assert emitted == pytest.approx(3.0, abs=1e-6)


def test_report_row_count_matches_dataset(tmp_path):
    records = [
        DatasetRecord(
            id=f"q{i}", task="bbq", question="q?", merge_mode="convergent",
            ground_truth=GroundTruth("convergent", scalar_answer="A"),
            options=("x", "y", "z"),
        )
        for i in range(5)
    ]
    outputs = {
        r.id: f"<think>idea number {i} differs.</think>Final: **A. x**"
        for i, r in enumerate(records)
    }
    result = evaluate(records, outputs)
    paths = emit_report(result, tmp_path / "full")
    with open(paths["records"], newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) - 1 == len(records)
