"""Evaluation report files: JSON summary, per-record CSV, and an SVG scatter.

The scatter plots accuracy (y) against length-normalized diversity (x) with a
least-squares line; slope and intercept are embedded as ``data-slope`` and
``data-intercept`` attributes so the fit is machine-checkable. SVG keeps the
artifacts plain-text and diffable.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .evaluation import EvalResult

SVG_WIDTH = 640
SVG_HEIGHT = 480
MARGIN = 60

CSV_COLUMNS = (
    "id",
    "accuracy",
    "diversity_combined",
    "diversity_norm",
    "token_count",
    "injected_continuations",
    "answers",
)


def least_squares(xs, ys) -> tuple[float, float] | None:
    """Slope and intercept of the least-squares line; None for degenerate x."""
    if len(xs) < 2:
        return None
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0.0:
        return None
    slope = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / sxx
    return slope, mean_y - slope * mean_x


def _scale(value: float, lo: float, hi: float, pixel_lo: float, pixel_hi: float) -> float:
    if hi == lo:
        return (pixel_lo + pixel_hi) / 2.0
    return pixel_lo + (value - lo) / (hi - lo) * (pixel_hi - pixel_lo)


def render_scatter_svg(xs, ys) -> str:
    """Scatter of (x, y) points with axes and an optional fitted line."""
    left, right = MARGIN, SVG_WIDTH - MARGIN
    bottom, top = SVG_HEIGHT - MARGIN, MARGIN
    lo_x, hi_x = (min(xs), max(xs)) if xs else (0.0, 1.0)
    lo_y, hi_y = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if lo_x == hi_x:
        lo_x, hi_x = lo_x - 0.5, hi_x + 0.5
    if lo_y == hi_y:
        lo_y, hi_y = lo_y - 0.5, hi_y + 0.5

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="black"/>',
        f'<text x="{(left + right) / 2}" y="{SVG_HEIGHT - 15}" text-anchor="middle" '
        f'font-size="14">diversity (length-normalized)</text>',
        f'<text x="18" y="{(top + bottom) / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 18 {(top + bottom) / 2})">accuracy</text>',
        f'<text x="{left}" y="{bottom + 18}" font-size="11" text-anchor="middle">{lo_x:.3f}</text>',
        f'<text x="{right}" y="{bottom + 18}" font-size="11" text-anchor="middle">{hi_x:.3f}</text>',
        f'<text x="{left - 8}" y="{bottom}" font-size="11" text-anchor="end">{lo_y:.3f}</text>',
        f'<text x="{left - 8}" y="{top + 4}" font-size="11" text-anchor="end">{hi_y:.3f}</text>',
    ]

    fit = least_squares(xs, ys) if xs else None
    if fit is not None:
        slope, intercept = fit
        x1, x2 = lo_x, hi_x
        y1, y2 = slope * x1 + intercept, slope * x2 + intercept
        parts.append(
            f'<line x1="{_scale(x1, lo_x, hi_x, left, right):.2f}" '
            f'y1="{_scale(y1, lo_y, hi_y, bottom, top):.2f}" '
            f'x2="{_scale(x2, lo_x, hi_x, left, right):.2f}" '
            f'y2="{_scale(y2, lo_y, hi_y, bottom, top):.2f}" '
            f'stroke="#d62728" stroke-width="1.5" '
            f'data-slope="{slope!r}" data-intercept="{intercept!r}"/>'
        )

    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{_scale(x, lo_x, hi_x, left, right):.2f}" '
            f'cy="{_scale(y, lo_y, hi_y, bottom, top):.2f}" r="4" '
            f'fill="#1f77b4" fill-opacity="0.7"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def emit_report(result: EvalResult, out_dir: str | Path) -> dict[str, Path]:
    """Write summary.json, records.csv and scatter.svg under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(
            {
                "aggregate_accuracy": result.aggregate_accuracy,
                "aggregate_diversity": result.aggregate_diversity,
                "pearson_acc_div": result.pearson_acc_div,
                "record_count": len(result.per_record),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    csv_path = out / "records.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for row in result.per_record:
            diversity = row.diversity
            writer.writerow(
                [
                    row.record_id,
                    row.accuracy,
                    "" if diversity is None else diversity.d_combined,
                    "" if diversity is None else diversity.d_norm,
                    "" if diversity is None else diversity.token_count,
                    "" if row.injected_continuations is None else row.injected_continuations,
                    json.dumps(row.answers, ensure_ascii=False),
                ]
            )

    xs = [
        0.0 if r.diversity is None else (r.diversity.d_norm or 0.0)
        for r in result.per_record
    ]
    ys = [r.accuracy for r in result.per_record]
    svg_path = out / "scatter.svg"
    svg_path.write_text(render_scatter_svg(xs, ys) + "\n", encoding="utf-8")

    return {"summary": summary_path, "records": csv_path, "scatter": svg_path}
