"""Command-line surface: build | classify | evaluate | feedback | hopkins | sample.

Configuration lives in a single JSON document; paths, the output directory,
and the seed can be overridden with flags. The environment variable
WORKLOAD_PROFILER_OUT overrides the output directory for all commands.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import artifacts
from .classifier import classify
from .errors import ProfilerError
from .pipeline import RunConfig, run_build, run_evaluate, run_feedback_command
from .predictor import PredictionPolicy, predict
from .preprocess import hopkins, stratified_sample
from .trace_model import TraceSchema, load_trace, runtime_matrix, schema_for, write_trace

OUT_ENV = "WORKLOAD_PROFILER_OUT"


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config)
    overrides = {}
    if getattr(args, "trace", None):
        overrides["trace"] = Path(args.trace)
    if getattr(args, "out", None):
        overrides["output_dir"] = Path(args.out)
    elif os.environ.get(OUT_ENV):
        overrides["output_dir"] = Path(os.environ[OUT_ENV])
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "descriptor", None):
        overrides["descriptor"] = Path(args.descriptor)
    return dataclasses.replace(config, **overrides) if overrides else config


def _cmd_build(args) -> int:
    config = _load_config(args)
    result = run_build(config)
    print(
        f"build: {result.report['n_workloads']} workloads, "
        f"{result.report['winner_metrics']['n_clusters']} profiles, "
        f"acquires={result.report['winner_metrics']['acquires_total']:.4f} "
        f"-> {config.output_dir}"
    )
    return 0


def _cmd_classify(args) -> int:
    out_dir = Path(args.out) if args.out else None
    profiles = None
    policy = PredictionPolicy()
    if args.profiles:
        from .profiles import ProfileSet

        profiles = ProfileSet.from_json(artifacts.read_json(args.profiles))
    if args.policy:
        policy = PredictionPolicy.from_json(json.loads(args.policy))
    from .classifier import ClassifierModel

    model = ClassifierModel.from_json(artifacts.read_json(args.model))

    source = sys.stdin if args.input == "-" else open(args.input, encoding="utf-8")
    try:
        for line_no, line in enumerate(source, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                metadata = record["metadata"]
                label, probs = classify(model, metadata)
                doc = {
                    "id": record.get("id"),
                    "label": label,
                    "probs": {str(k): v for k, v in probs.items()},
                }
                if profiles is not None:
                    group = profiles.group(label)
                    features = tuple(group.stats)
                    doc["predicted"] = predict(group, features, policy).values
            except (KeyError, ValueError, ProfilerError) as exc:
                doc = {"line": line_no, "error": str(exc)}
            sys.stdout.write(json.dumps(artifacts.jsonable(doc), sort_keys=True) + "\n")
    finally:
        if source is not sys.stdin:
            source.close()
    return 0


def _cmd_evaluate(args) -> int:
    config = _load_config(args)
    report = run_evaluate(config, Path(args.holdout))
    print(f"fraction_below_50={report['fraction_below_50']:.4f}")
    return 0


def _cmd_feedback(args) -> int:
    config = _load_config(args)
    report = run_feedback_command(config, Path(args.stream))
    print(
        f"feedback: {report['events_total']} events, "
        f"{report['violations_total']} violations, "
        f"{len(report['triggers'])} triggers, {report['adopted_count']} adopted"
    )
    return 0


def _cmd_hopkins(args) -> int:
    schema = TraceSchema.load(args.descriptor)
    dataset, _ = load_trace(args.trace, schema)
    result = hopkins(runtime_matrix(dataset), args.fraction, seed=args.seed)
    print(
        json.dumps(
            {"score": result.score, "sample_size": result.sample_size, "seed": result.seed},
            sort_keys=True,
        )
    )
    return 0


def _cmd_sample(args) -> int:
    schema = TraceSchema.load(args.descriptor)
    dataset, _ = load_trace(args.trace, schema)
    sampled = stratified_sample(dataset, args.stratify_on, args.target, seed=args.seed)
    out = Path(args.out)
    write_trace(sampled, out)
    artifacts.write_json(out.with_suffix(".descriptor.json"), schema_for(sampled).to_json())
    print(f"sample: {len(sampled)} of {len(dataset)} workloads -> {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="workload-profiler",
        description="Workload profiling: cluster usage traces, classify new "
        "workloads from metadata, predict runtime behavior, and keep profiles "
        "fresh with a feedback loop.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="cluster a trace and train the classifier")
    p.add_argument("--config", required=True)
    p.add_argument("--trace", help="override the trace path")
    p.add_argument("--descriptor", help="override the descriptor path")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--seed", type=int, help="override the seed")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("classify", help="label workloads from metadata (JSON lines)")
    p.add_argument("--model", required=True)
    p.add_argument("--profiles", help="profile set for behavior prediction")
    p.add_argument("--policy", help="prediction policy as inline JSON")
    p.add_argument("--input", default="-", help="JSONL input path or - for stdin")
    p.add_argument("--out", help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="score predictions on a holdout trace")
    p.add_argument("--config", required=True)
    p.add_argument("--holdout", required=True)
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--seed", type=int, help="override the seed")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("feedback", help="run the feedback loop over a stream trace")
    p.add_argument("--config", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--seed", type=int, help="override the seed")
    p.set_defaults(func=_cmd_feedback)

    p = sub.add_parser("hopkins", help="clustering-tendency score of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--descriptor", required=True)
    p.add_argument("--fraction", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_hopkins)

    p = sub.add_parser("sample", help="stratified sample of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--descriptor", required=True)
    p.add_argument("--stratify-on", required=True)
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProfilerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
