"""Stub peer for the livetl bridge protocol."""

from .peer import (
    AdapterConfig,
    Behavior,
    ContextEntry,
    GenerateFn,
    Request,
    handle_frame,
    parse_request,
    serve,
    stub_classify,
    stub_generate,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "Behavior",
    "ContextEntry",
    "GenerateFn",
    "Request",
    "handle_frame",
    "parse_request",
    "serve",
    "stub_classify",
    "stub_generate",
    "__version__",
]
