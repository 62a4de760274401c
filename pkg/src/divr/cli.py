"""Command-line interface.

Subcommands: ``score`` (diversity report for a text), ``calibrate`` (fit
weights to ratings), ``pipeline build`` (construct training data), ``eval``
(run a dataset against an endpoint and score it), and ``reward serve`` (the
HTTP scoring service). Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .calibration import calibrate_weights
from .diversity import SUB_SCORE_NAMES, DiversityReport, DiversityWeights, score_text
from .errors import DivrError
from .evaluation import (
    AnswerFormat,
    default_format_for_task,
    evaluate,
    format_for_record,
    read_outputs,
)
from .gateway import (
    LESS_THINK,
    MORE_THINK,
    REGULAR_THINK,
    ZERO_THINK,
    DecodeStrategy,
    EndpointConfig,
    LlmGateway,
)
from .pipeline import (
    FILTER_GROUND_TRUTH,
    FILTER_SELF_CONSISTENCY,
    PipelineConfig,
    build_dataset,
    read_records,
    write_jsonl,
)
from .prompts import build_reasoning_prompt
from .reporting import emit_report
from .service import serve
from .synthetic import SyntheticTransport

STRATEGY_NAMES = {
    "zerothink": ZERO_THINK,
    "lessthink": LESS_THINK,
    "regular": REGULAR_THINK,
    "morethink": MORE_THINK,
}


def _load_weights(path: str | None) -> DiversityWeights | None:
    if path is None:
        return None
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return DiversityWeights.from_vector([data[name] for name in SUB_SCORE_NAMES])


def _make_gateway(args) -> LlmGateway:
    config = EndpointConfig.from_env(
        model_id=getattr(args, "model", None) or "synthetic-model"
    )
    transport = None
    if getattr(args, "transport", "http") == "synthetic":
        transport = SyntheticTransport(seed=getattr(args, "seed", 0))
    return LlmGateway(config, transport=transport, cache_dir=getattr(args, "cache_dir", None))


def _answer_format(args) -> AnswerFormat | None:
    kind = getattr(args, "format_kind", None)
    alphabet = getattr(args, "alphabet", None)
    if kind and alphabet:
        return AnswerFormat(kind, tuple(t.strip() for t in alphabet.split(",")))
    task = getattr(args, "format_task", None)
    if task:
        return default_format_for_task(task)
    return None


# ----------------------------------------------------------------------
# subcommands


def cmd_score(args) -> int:
    if args.text is not None:
        text = args.text
    elif args.file is not None:
        text = Path(args.file).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    report = score_text(text, weights=_load_weights(args.weights), l0=args.l0)
    print(report.dumps())
    return 0


def cmd_calibrate(args) -> int:
    samples = []
    with open(args.ratings, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            subs = {f"d_{name}": float(row[name]) for name in SUB_SCORE_NAMES}
            report = DiversityReport(token_count=int(row.get("token_count", 0)), **subs)
            samples.append((report, float(row["rating"])))
    weights = calibrate_weights(samples, step=args.step)
    print(json.dumps(weights.to_json()))
    return 0


def cmd_pipeline_build(args) -> int:
    records = read_records(args.dataset)
    if args.strategy == "morethink":
        strategy = DecodeStrategy.more_think(wait_count=args.waits)
    else:
        strategy = DecodeStrategy(mode=STRATEGY_NAMES[args.strategy])
    config = PipelineConfig(
        samples_per_role=args.samples_per_role,
        lambda_dissim=args.lambda_dissim,
        orderings_per_example=args.orderings,
        n_range=(args.n_min, args.n_max),
        lower_pct=args.lower_pct,
        upper_pct=args.upper_pct,
        filter_mode=args.filter,
        seed=args.seed,
        strategy=strategy,
        answer_format=_answer_format(args),
    )
    gateway = _make_gateway(args)
    examples, stats = build_dataset(records, gateway, config)
    write_jsonl(args.out, examples)
    print(json.dumps(stats.to_json()))
    return 0


def cmd_eval(args) -> int:
    records = read_records(args.dataset)
    base_fmt = _answer_format(args)
    if args.strategy == "morethink":
        strategy = DecodeStrategy.more_think(wait_count=args.waits)
    else:
        strategy = DecodeStrategy(mode=STRATEGY_NAMES[args.strategy])

    outputs: dict = {}
    if args.outputs:
        outputs = read_outputs(args.outputs)
    else:
        gateway = _make_gateway(args)
        for record in records:
            fmt = format_for_record(record, base_fmt)
            prompt = build_reasoning_prompt(record.question, record.options, fmt)
            roles = list(record.preset_roles or ())
            if strategy.mode == MORE_THINK and len(roles) < strategy.wait_count:
                roles = []
            outputs[record.id] = gateway.complete(
                prompt, strategy, role_sequence=roles, cache_salt=f"eval:{record.id}"
            )

    result = evaluate(records, outputs, fmt=base_fmt, scope=args.scope)
    out_dir = Path(
        args.out
        or f"runs/eval-{time.strftime('%Y%m%d-%H%M%S')}-seed{args.seed}"
    )
    paths = emit_report(result, out_dir)
    write_jsonl(
        out_dir / "outputs.jsonl",
        (
            {"id": rid, "text": res if isinstance(res, str) else res.text}
            for rid, res in outputs.items()
        ),
    )
    print(
        json.dumps(
            {
                "out_dir": str(out_dir),
                "aggregate_accuracy": result.aggregate_accuracy,
                "aggregate_diversity": result.aggregate_diversity,
                "pearson_acc_div": result.pearson_acc_div,
                "files": {k: str(v) for k, v in paths.items()},
            }
        )
    )
    return 0


def cmd_reward_serve(args) -> int:
    serve(host=args.host, port=args.port, weights=_load_weights(args.weights))
    return 0


# ----------------------------------------------------------------------
# parser


def _add_gateway_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--transport", choices=("http", "synthetic"), default="http")
    parser.add_argument("--model", help="endpoint model id")
    parser.add_argument("--cache-dir", dest="cache_dir", help="response cache directory")
    parser.add_argument("--seed", type=int, default=0)


def _add_format_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format-task",
        dest="format_task",
        help="use a task's default answer format (bbq, gloqa, cali, ethics, csqa)",
    )
    parser.add_argument(
        "--format-kind",
        dest="format_kind",
        choices=("bold_letter", "bold_paren", "bold_word", "bold_bare"),
    )
    parser.add_argument("--alphabet", help="comma-separated answer tokens")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divr")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="diversity report for a text")
    p_score.add_argument("--text")
    p_score.add_argument("--file")
    p_score.add_argument("--weights", help="JSON file of sub-score weights")
    p_score.add_argument("--l0", type=float, default=100.0)
    p_score.set_defaults(func=cmd_score)

    p_cal = sub.add_parser("calibrate", help="fit weights to human ratings")
    p_cal.add_argument("--ratings", required=True, help="JSONL of sub-scores plus rating")
    p_cal.add_argument("--step", type=float, default=0.05)
    p_cal.set_defaults(func=cmd_calibrate)

    p_pipe = sub.add_parser("pipeline", help="data construction")
    pipe_sub = p_pipe.add_subparsers(dest="pipeline_command", required=True)
    p_build = pipe_sub.add_parser("build", help="build a multi-role SFT dataset")
    p_build.add_argument("--dataset", required=True)
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--samples-per-role", dest="samples_per_role", type=int, default=5)
    p_build.add_argument("--lambda", dest="lambda_dissim", type=float, default=0.5)
    p_build.add_argument("--orderings", type=int, default=1)
    p_build.add_argument(
        "--filter",
        choices=(FILTER_SELF_CONSISTENCY, FILTER_GROUND_TRUTH),
        default=FILTER_SELF_CONSISTENCY,
    )
    p_build.add_argument("--n-min", dest="n_min", type=int, default=2)
    p_build.add_argument("--n-max", dest="n_max", type=int, default=4)
    p_build.add_argument("--lower-pct", dest="lower_pct", type=float, default=10.0)
    p_build.add_argument("--upper-pct", dest="upper_pct", type=float, default=10.0)
    p_build.add_argument(
        "--strategy", choices=tuple(STRATEGY_NAMES), default="regular"
    )
    p_build.add_argument("--waits", type=int, default=3)
    _add_gateway_args(p_build)
    _add_format_args(p_build)
    p_build.set_defaults(func=cmd_pipeline_build)

    p_eval = sub.add_parser("eval", help="run a dataset through an endpoint and score it")
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--out", help="report directory (default: runs/eval-<timestamp>-seed<seed>)")
    p_eval.add_argument("--strategy", choices=tuple(STRATEGY_NAMES), default="regular")
    p_eval.add_argument("--waits", type=int, default=3)
    p_eval.add_argument("--scope", choices=("full", "think_only"), default="full")
    _add_gateway_args(p_eval)
    _add_format_args(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_reward = sub.add_parser("reward", help="reward scoring service")
    reward_sub = p_reward.add_subparsers(dest="reward_command", required=True)
    p_serve = reward_sub.add_parser("serve", help="serve POST /v1/score")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8790)
    p_serve.add_argument("--weights", help="JSON file of sub-score weights")
    p_serve.set_defaults(func=cmd_reward_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except DivrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


cli_dispatch = main

if __name__ == "__main__":
    sys.exit(main())
