"""Command-line entry point: ingest, run, eval, events.

Exit codes: 0 success, 2 malformed input, 3 generator failure (partial
outputs are removed), 4 span mismatch between generated and reference
timelines.  Set LIVETL_LOG to adjust log verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .core import (
    ContextSource,
    MatchDataset,
    PipelineConfig,
    Timeline,
    Variant,
    validate_dataset,
)
from .eval_align import (
    SpanMismatch,
    TokenizerConfig,
    TokenizerMode,
    evaluate_timelines,
    micro_average,
)
from .eval_events import (
    EventPatternSet,
    aggregate_event_reports,
    default_patterns,
    event_report,
    extract_events,
)
from .generators import (
    BridgeConfig,
    BridgeGate,
    BridgeGenerator,
    BurstGate,
    BurstGateConfig,
    EchoFirstTweet,
    ExtractiveOracle,
    Transport,
)
from .ingest import (
    IngestConfig,
    MalformedRecord,
    VolumeRejection,
    load_manifest,
    load_match_from_manifest,
    read_timeline,
    write_timeline,
)
from .pipeline import GeneratorFailure, reference_presence_gate, run_match

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_GENERATOR_FAILURE = 3
EXIT_SPAN_MISMATCH = 4

log = logging.getLogger("livetl")


def _json_dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_json_dumps(obj), encoding="utf-8", newline="\n")


def _ingest_config(args) -> IngestConfig:
    return IngestConfig(
        min_tweets=args.min_tweets,
        exclusion_patterns=tuple(args.exclude or ()),
    )


def _tokenizer_config(args) -> TokenizerConfig:
    return TokenizerConfig(mode=TokenizerMode(args.tokenizer), ngram_n=args.ngram)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        variant=Variant(args.variant),
        tweet_lookahead_minutes=args.lookahead,
        context_lookback_minutes=args.lookback,
        context_source=ContextSource(args.context_source),
    )


@dataclass(frozen=True)
class GeneratorSpec:
    """Which generator/gate to wire up, resolved from the flags."""

    generator: str
    gate: Optional[str]
    bridge: Optional[BridgeConfig]
    gate_bridge: Optional[BridgeConfig]
    burst: BurstGateConfig

    def describe(self) -> dict:
        desc: dict = {"generator": self.generator, "gate": self.gate}
        if self.bridge is not None:
            desc["bridge"] = {
                "transport": self.bridge.transport.value,
                "endpoint": self.bridge.endpoint,
                "timeout_ms": self.bridge.timeout_ms,
            }
        if self.gate_bridge is not None and self.gate == "bridge":
            desc["gate_bridge"] = {
                "transport": self.gate_bridge.transport.value,
                "endpoint": self.gate_bridge.endpoint,
                "timeout_ms": self.gate_bridge.timeout_ms,
            }
        return desc


def _bridge_config(cmd: Optional[str], addr: Optional[str], timeout_ms: int) -> Optional[BridgeConfig]:
    if cmd:
        return BridgeConfig(Transport.SUBPROCESS, cmd, timeout_ms=timeout_ms)
    if addr:
        return BridgeConfig(Transport.TCP, addr, timeout_ms=timeout_ms)
    return None


def _generator_spec(args, variant: Variant) -> GeneratorSpec:
    bridge = _bridge_config(args.bridge_cmd, args.bridge_addr, args.timeout_ms)
    if args.generator == "bridge" and bridge is None:
        raise SystemExit("--generator bridge needs --bridge-cmd or --bridge-addr")
    gate = args.gate
    if variant.gated and gate is None:
        gate = "bridge" if args.generator == "bridge" else "reference"
    if not variant.gated:
        gate = None
    gate_bridge = _bridge_config(args.gate_bridge_cmd, args.gate_bridge_addr, args.timeout_ms) or bridge
    if gate == "bridge" and gate_bridge is None:
        raise SystemExit("--gate bridge needs --gate-bridge-cmd or --gate-bridge-addr")
    burst = BurstGateConfig(
        trailing_minutes=args.burst_trailing,
        ratio_threshold=args.burst_ratio,
        min_count=args.burst_min,
    )
    return GeneratorSpec(args.generator, gate, bridge, gate_bridge, burst)


def _run_one_match(
    dataset: MatchDataset,
    cfg: PipelineConfig,
    spec: GeneratorSpec,
) -> Timeline:
    cleanup = []
    try:
        if spec.generator == "echo":
            generator = EchoFirstTweet()
        elif spec.generator == "oracle":
            generator = ExtractiveOracle.for_dataset(dataset)
        else:
            generator = BridgeGenerator(spec.bridge)
            cleanup.append(generator)

        gate = None
        if spec.gate == "reference":
            gate = reference_presence_gate(dataset)
        elif spec.gate == "burst":
            gate = BurstGate.from_dataset(dataset, spec.burst)
        elif spec.gate == "bridge":
            gate = BridgeGate(spec.gate_bridge)
            cleanup.append(gate)

        return run_match(dataset, cfg, generator, gate)
    finally:
        for item in cleanup:
            item.close()


def cmd_ingest(args) -> int:
    cfg = _ingest_config(args)
    summary = []
    for manifest_path in args.manifest:
        manifest = load_manifest(manifest_path)
        try:
            dataset = load_match_from_manifest(manifest, cfg)
        except VolumeRejection as rej:
            print(f"{manifest.match_id}: {rej.surviving} tweets, REJECTED (VOLUME)")
            summary.append(
                {"match_id": manifest.match_id, "tweets": rej.surviving, "accepted": False, "reason": "VOLUME"}
            )
            continue
        violations = validate_dataset(dataset)
        status = "ACCEPTED" if not violations else f"ACCEPTED with {len(violations)} violation(s)"
        print(f"{dataset.match_id}: {len(dataset.tweets)} tweets, {status}")
        for violation in violations:
            print(f"  - {violation}")
        summary.append(
            {
                "match_id": dataset.match_id,
                "tweets": len(dataset.tweets),
                "accepted": True,
                "violations": violations,
            }
        )
    if args.out:
        _write_json(Path(args.out), {"matches": summary})
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    ingest_cfg = _ingest_config(args)
    spec = _generator_spec(args, cfg.variant)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifests = sorted((load_manifest(p) for p in args.manifest), key=lambda m: m.match_id)
    written: list[Path] = []

    def work(manifest) -> Optional[str]:
        try:
            dataset = load_match_from_manifest(manifest, ingest_cfg)
        except VolumeRejection as rej:
            log.warning("skipping %s: %s", manifest.match_id, rej)
            print(f"{manifest.match_id}: skipped (VOLUME)", file=sys.stderr)
            return None
        timeline = _run_one_match(dataset, cfg, spec)
        path = out_dir / f"{dataset.match_id}.jsonl"
        write_timeline(timeline, path)
        return dataset.match_id

    run_ids: list[str] = []
    try:
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(work, manifests))
        else:
            results = [work(m) for m in manifests]
        run_ids = [match_id for match_id in results if match_id]
        written = [out_dir / f"{match_id}.jsonl" for match_id in run_ids]
    except GeneratorFailure as failure:
        for manifest in manifests:
            path = out_dir / f"{manifest.match_id}.jsonl"
            path.unlink(missing_ok=True)
        cause = failure.cause
        detail = f"{type(cause).__name__}: {cause}" if isinstance(cause, Exception) else str(cause)
        print(f"generator failure at minute {failure.minute}: {detail}", file=sys.stderr)
        return EXIT_GENERATOR_FAILURE

    run_config = {
        "variant": cfg.variant.value,
        "lookahead": cfg.tweet_lookahead_minutes,
        "lookback": cfg.context_lookback_minutes,
        "context_source": cfg.context_source.value,
        **spec.describe(),
        "matches": run_ids,
    }
    provenance = {
        "tool": "livetl",
        "version": __version__,
        "config_hash": hashlib.sha256(
            json.dumps(run_config, sort_keys=True, ensure_ascii=False).encode("utf-8")
        ).hexdigest(),
        "config": run_config,
    }
    _write_json(out_dir / "provenance.json", provenance)
    for match_id in run_ids:
        print(f"{match_id}: written")
    return EXIT_OK


def _load_pairs(args) -> list[tuple[str, Timeline, Timeline]]:
    """(match_id, generated, reference) triples for eval-style commands."""
    gen_dir = Path(args.gen_dir)
    triples = []
    for manifest_path in args.manifest:
        manifest = load_manifest(manifest_path)
        gen_path = gen_dir / f"{manifest.match_id}.jsonl"
        if not gen_path.exists():
            raise MalformedRecord(0, f"no generated timeline for {manifest.match_id} in {gen_dir}")
        generated = read_timeline(gen_path)
        reference = read_timeline(manifest.reference_path)
        triples.append((manifest.match_id, generated, reference))
    triples.sort(key=lambda t: t[0])
    return triples


def cmd_eval(args) -> int:
    tok = _tokenizer_config(args)
    reports = [
        evaluate_timelines(generated, reference, tok, match_id=match_id)
        for match_id, generated, reference in _load_pairs(args)
    ]
    micro = micro_average(reports)
    corpus = {
        "n": tok.ngram_n,
        "tokenizer": tok.mode.value,
        "matches": reports,
        "micro": micro,
    }
    _write_json(Path(args.out), corpus)

    header = f"{'match':<16}{'ref-ngrams':>12}{'gen-ngrams':>12}{'aligned':>10}{'P':>8}{'R':>8}{'F1':>8}"
    print(header)
    for report in reports:
        print(
            f"{report['match_id']:<16}{report['ref_total']:>12}{report['gen_total']:>12}"
            f"{report['aligned']:>10}{report['precision']:>8.3f}{report['recall']:>8.3f}{report['f1']:>8.3f}"
        )
    print(
        f"{'micro':<16}{micro['ref_total']:>12}{micro['gen_total']:>12}"
        f"{micro['aligned']:>10}{micro['precision']:>8.3f}{micro['recall']:>8.3f}{micro['f1']:>8.3f}"
    )
    return EXIT_OK


def cmd_events(args) -> int:
    patterns = EventPatternSet.load(args.patterns) if args.patterns else default_patterns()
    per_match = []
    for match_id, generated, reference in _load_pairs(args):
        ref_events = extract_events(reference, patterns)
        gen_events = extract_events(generated, patterns)
        per_match.append(
            {"match_id": match_id, **event_report(ref_events, gen_events, window=args.window)}
        )
    corpus = aggregate_event_reports(per_match)
    _write_json(Path(args.out), {"window": args.window, "matches": per_match, "corpus": corpus})

    mode = args.mode
    print(f"{'kind':<14}{'ref':>6}{'gen':>6}{'matched':>9}{'P':>8}{'R':>8}{'F1':>8}   ({mode})")
    for kind in ("goal", "substitution", "card", "total"):
        score = corpus[mode][kind]
        print(
            f"{kind:<14}{score['ref_count']:>6}{score['gen_count']:>6}{score['matched']:>9}"
            f"{score['precision']:>8.3f}{score['recall']:>8.3f}{score['f1']:>8.3f}"
        )
    return EXIT_OK


def _add_manifest_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", nargs="+", required=True, help="match manifest JSON path(s)")


def _add_ingest_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-tweets", type=int, default=3200, help="strict survival threshold")
    parser.add_argument("--exclude", action="append", default=[], help="reference exclusion regex (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="livetl", description=__doc__)
    parser.add_argument("--version", action="version", version=f"livetl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse and filter match archives")
    _add_manifest_args(p_ingest)
    _add_ingest_args(p_ingest)
    p_ingest.add_argument("--out", help="optional JSON summary path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_run = sub.add_parser("run", help="generate timelines for matches")
    _add_manifest_args(p_run)
    _add_ingest_args(p_run)
    p_run.add_argument("--variant", choices=[v.value for v in Variant], default="base")
    p_run.add_argument("--lookahead", type=int, default=3, help="tweet window minutes after t")
    p_run.add_argument("--lookback", type=int, default=4, help="context window minutes before t")
    p_run.add_argument(
        "--context-source", choices=[s.value for s in ContextSource], default="generated"
    )
    p_run.add_argument("--generator", choices=["echo", "oracle", "bridge"], default="echo")
    p_run.add_argument(
        "--gate",
        choices=["reference", "burst", "bridge"],
        help="gate for gated variants (default: bridge for the bridge generator, else reference)",
    )
    p_run.add_argument("--bridge-cmd", help="generator peer command line (subprocess transport)")
    p_run.add_argument("--bridge-addr", help="generator peer host:port (TCP transport)")
    p_run.add_argument("--gate-bridge-cmd", help="classifier peer command (defaults to --bridge-cmd)")
    p_run.add_argument("--gate-bridge-addr", help="classifier peer host:port")
    p_run.add_argument("--timeout-ms", type=int, default=10_000)
    p_run.add_argument("--burst-trailing", type=int, default=5)
    p_run.add_argument("--burst-ratio", type=float, default=2.0)
    p_run.add_argument("--burst-min", type=int, default=5)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0, help="recorded for provenance only")
    p_run.add_argument("--out", required=True, help="output directory for timelines")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="alignment-based n-gram evaluation")
    _add_manifest_args(p_eval)
    p_eval.add_argument("--gen-dir", required=True, help="directory of generated timelines")
    p_eval.add_argument("--tokenizer", choices=[m.value for m in TokenizerMode], default="char")
    p_eval.add_argument("--ngram", type=int, default=1)
    p_eval.add_argument("--out", required=True, help="corpus report JSON path")
    p_eval.set_defaults(func=cmd_eval)

    p_events = sub.add_parser("events", help="key-event detection evaluation")
    _add_manifest_args(p_events)
    p_events.add_argument("--gen-dir", required=True)
    p_events.add_argument("--patterns", help="event pattern JSON (default: shipped patterns)")
    p_events.add_argument("--mode", choices=["lenient", "strict"], default="lenient")
    p_events.add_argument("--window", type=int, default=2)
    p_events.add_argument("--out", required=True, help="event report JSON path")
    p_events.set_defaults(func=cmd_events)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("LIVETL_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MalformedRecord as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except SpanMismatch as exc:
        print(f"span mismatch: {exc}", file=sys.stderr)
        return EXIT_SPAN_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
