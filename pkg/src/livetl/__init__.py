"""Minute-bucketed live text updates from tweet streams, plus their evaluation."""

from .core import (
    ContextSource,
    MatchDataset,
    PipelineConfig,
    Timeline,
    Tweet,
    Update,
    Variant,
)
from .eval_align import (
    AlignmentResult,
    ScoreMatrix,
    SpanMismatch,
    TokenizerConfig,
    TokenizerMode,
    align,
    build_score_matrix,
    evaluate_timelines,
    micro_average,
    prf,
)
from .eval_events import (
    EventKind,
    EventPatternSet,
    EventRecord,
    MatchMode,
    event_report,
    extract_events,
    match_events,
)
from .generators import (
    BridgeConfig,
    BridgeError,
    BridgeExit,
    BridgeGate,
    BridgeGenerator,
    BridgeProtocolError,
    BridgeTimeout,
    BurstGate,
    BurstGateConfig,
    EchoFirstTweet,
    ExtractiveOracle,
    Transport,
)
from .ingest import (
    IngestConfig,
    IngestError,
    MalformedRecord,
    VolumeRejection,
    load_manifest,
    load_match,
    load_match_from_manifest,
    read_timeline,
    write_timeline,
)
from .pipeline import (
    GenerationRequest,
    GeneratorFailure,
    build_request,
    reference_presence_gate,
    run_match,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "BridgeConfig",
    "BridgeError",
    "BridgeExit",
    "BridgeGate",
    "BridgeGenerator",
    "BridgeProtocolError",
    "BridgeTimeout",
    "BurstGate",
    "BurstGateConfig",
    "ContextSource",
    "EchoFirstTweet",
    "EventKind",
    "EventPatternSet",
    "EventRecord",
    "ExtractiveOracle",
    "GenerationRequest",
    "GeneratorFailure",
    "IngestConfig",
    "IngestError",
    "MalformedRecord",
    "MatchDataset",
    "MatchMode",
    "PipelineConfig",
    "ScoreMatrix",
    "SpanMismatch",
    "Timeline",
    "TokenizerConfig",
    "TokenizerMode",
    "Transport",
    "Tweet",
    "Update",
    "Variant",
    "VolumeRejection",
    "align",
    "build_request",
    "build_score_matrix",
    "evaluate_timelines",
    "event_report",
    "extract_events",
    "load_manifest",
    "load_match",
    "load_match_from_manifest",
    "match_events",
    "micro_average",
    "prf",
    "read_timeline",
    "reference_presence_gate",
    "run_match",
    "write_timeline",
    "__version__",
]
