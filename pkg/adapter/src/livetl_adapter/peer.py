"""Reference peer for the bridge wire protocol.

Speaks newline-delimited JSON over stdio or a TCP socket, one response
frame per request frame, in order, never unsolicited:

    request:  {"v":1, "kind":"generate"|"classify", "minute":int,
               "tweets":[str], "context":[{"minute":int,"text":str}]}
    response: {"v":1, "update": str|null}     for generate
              {"v":1, "decision": "yes"|"no"} for classify

A malformed request gets {"v":1, "error": "..."} and the loop continues.

The built-in behaviors are deterministic stubs for integration tests.  A
real model plugs in at exactly one point: pass ``generate_fn`` to
:func:`serve` (signature: :class:`Request` -> text or None) and every
generate frame is answered by it instead of the stub.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import time
from dataclasses import dataclass
from enum import Enum
from typing import BinaryIO, Callable, Optional

PROTOCOL_VERSION = 1


class Behavior(Enum):
    """What the stub answers with.

    The first three answer generate frames, the last two classify frames.
    A frame of the other kind is a configuration mistake and gets an
    error response.
    """

    ECHO_FIRST_TWEET = "echo_first_tweet"
    TEMPLATE = "template"
    ALWAYS_NULL = "always_null"
    ALWAYS_YES = "always_yes"
    ALWAYS_NO = "always_no"


GENERATE_BEHAVIORS = frozenset(
    {Behavior.ECHO_FIRST_TWEET, Behavior.TEMPLATE, Behavior.ALWAYS_NULL}
)
CLASSIFY_BEHAVIORS = frozenset({Behavior.ALWAYS_YES, Behavior.ALWAYS_NO})


@dataclass(frozen=True)
class ContextEntry:
    minute: int
    text: str


@dataclass(frozen=True)
class Request:
    """A validated request frame."""

    kind: str
    minute: int
    tweets: tuple[str, ...]
    context: tuple[ContextEntry, ...]


# The extension point: request in, update text (or None for no update) out.
GenerateFn = Callable[[Request], Optional[str]]


@dataclass(frozen=True)
class AdapterConfig:
    """Peer configuration.

    ``listen`` is None for stdio or "host:port" for TCP (port 0 binds an
    ephemeral port; the bound address is announced on stderr as
    ``LISTENING host:port``).  TCP serves ``connections`` sequential
    connections, 0 meaning forever.  The remaining knobs inject faults so
    client error handling can be exercised: ``sleep_ms`` delays every
    response, ``garbage`` replaces responses with a non-JSON line, and
    ``exit_after`` terminates the process with ``exit_code`` upon reading
    the Nth request, without answering it.
    """

    behavior: Behavior
    listen: Optional[str] = None
    connections: int = 0
    sleep_ms: int = 0
    garbage: bool = False
    exit_after: Optional[int] = None
    exit_code: int = 70

    def __post_init__(self) -> None:
        if self.connections < 0:
            raise ValueError("connections must be >= 0")
        if self.sleep_ms < 0:
            raise ValueError("sleep_ms must be >= 0")
        if self.exit_after is not None and self.exit_after < 1:
            raise ValueError("exit_after must be >= 1")


def _dump(obj: dict) -> str:
    # json escaping keeps the frame to one physical line
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _error(message: str) -> str:
    return _dump({"v": PROTOCOL_VERSION, "error": message})


def parse_request(line: str) -> Request:
    """Validate one request line.  Raises ValueError with the defect."""
    try:
        frame = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(frame, dict):
        raise ValueError("frame must be a JSON object")
    version = frame.get("v")
    if version != PROTOCOL_VERSION:
        raise ValueError(f"unsupported protocol version: {version!r}")
    kind = frame.get("kind")
    if kind not in ("generate", "classify"):
        raise ValueError(f"unknown kind: {kind!r}")
    minute = frame.get("minute")
    if not isinstance(minute, int) or isinstance(minute, bool):
        raise ValueError("'minute' must be an integer")
    tweets = frame.get("tweets")
    if not isinstance(tweets, list) or not all(isinstance(t, str) for t in tweets):
        raise ValueError("'tweets' must be a list of strings")
    raw_context = frame.get("context")
    if not isinstance(raw_context, list):
        raise ValueError("'context' must be a list")
    context = []
    for entry in raw_context:
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get("minute"), int)
            or isinstance(entry.get("minute"), bool)
            or not isinstance(entry.get("text"), str)
        ):
            raise ValueError("context entries must be {'minute': int, 'text': str}")
        context.append(ContextEntry(entry["minute"], entry["text"]))
    return Request(kind, minute, tuple(tweets), tuple(context))


def stub_generate(request: Request, behavior: Behavior) -> Optional[str]:
    if behavior is Behavior.ECHO_FIRST_TWEET:
        return request.tweets[0] if request.tweets else None
    if behavior is Behavior.TEMPLATE:
        return (
            f"minute {request.minute}: {len(request.tweets)} tweets, "
            f"{len(request.context)} context"
        )
    if behavior is Behavior.ALWAYS_NULL:
        return None
    raise ValueError(f"behavior {behavior.value} does not answer generate frames")


def stub_classify(behavior: Behavior) -> str:
    if behavior is Behavior.ALWAYS_YES:
        return "yes"
    if behavior is Behavior.ALWAYS_NO:
        return "no"
    raise ValueError(f"behavior {behavior.value} does not answer classify frames")


def handle_frame(
    line: str, cfg: AdapterConfig, generate_fn: Optional[GenerateFn] = None
) -> str:
    """One request line in, one response line out (newline not included).

    Never raises on bad input; every defect becomes an error frame so the
    serving loop keeps going.
    """
    try:
        request = parse_request(line)
    except ValueError as exc:
        return _error(str(exc))
    try:
        if request.kind == "generate":
            if generate_fn is not None:
                update = generate_fn(request)
            else:
                update = stub_generate(request, cfg.behavior)
            return _dump({"v": PROTOCOL_VERSION, "update": update})
        decision = stub_classify(cfg.behavior)
        return _dump({"v": PROTOCOL_VERSION, "decision": decision})
    except ValueError as exc:
        return _error(str(exc))


def _serve_stream(
    reader: BinaryIO,
    writer: BinaryIO,
    cfg: AdapterConfig,
    generate_fn: Optional[GenerateFn],
) -> None:
    """Lockstep loop over one byte stream pair.  Returns at EOF."""
    requests_read = 0
    for raw in reader:
        requests_read += 1
        if cfg.exit_after is not None and requests_read >= cfg.exit_after:
            sys.exit(cfg.exit_code)
        response = handle_frame(raw.decode("utf-8"), cfg, generate_fn)
        if cfg.sleep_ms:
            time.sleep(cfg.sleep_ms / 1000.0)
        if cfg.garbage:
            writer.write(b"this is not a frame\n")
        else:
            writer.write(response.encode("utf-8") + b"\n")
        writer.flush()


def _split_hostport(listen: str) -> tuple[str, int]:
    host, sep, port = listen.rpartition(":")
    if not sep or not host:
        raise ValueError(f"listen address must be host:port, got {listen!r}")
    return host, int(port)


def _serve_tcp(cfg: AdapterConfig, generate_fn: Optional[GenerateFn]) -> int:
    host, port = _split_hostport(cfg.listen or "")
    server = socket.create_server((host, port))
    bound_host, bound_port = server.getsockname()[:2]
    print(f"LISTENING {bound_host}:{bound_port}", file=sys.stderr, flush=True)
    served = 0
    try:
        # one connection at a time, strictly sequential
        while cfg.connections == 0 or served < cfg.connections:
            conn, _ = server.accept()
            with conn:
                reader = conn.makefile("rb")
                writer = conn.makefile("wb")
                try:
                    _serve_stream(reader, writer, cfg, generate_fn)
                except (BrokenPipeError, ConnectionResetError):
                    pass
            served += 1
    finally:
        server.close()
    return 0


def serve(cfg: AdapterConfig, generate_fn: Optional[GenerateFn] = None) -> int:
    """Serve until the peer disconnects (stdio: EOF on stdin).

    ``generate_fn`` is the model hook: when given, it answers every
    generate frame in place of ``cfg.behavior``.  Classify frames are
    always answered by the configured behavior.
    """
    if cfg.listen is not None:
        return _serve_tcp(cfg, generate_fn)
    try:
        _serve_stream(sys.stdin.buffer, sys.stdout.buffer, cfg, generate_fn)
    except BrokenPipeError:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="livetl-adapter",
        description="Stub generator/classifier peer for the bridge protocol.",
    )
    parser.add_argument(
        "--behavior",
        required=True,
        choices=[b.value for b in Behavior],
        help="what to answer with",
    )
    parser.add_argument(
        "--listen",
        metavar="HOST:PORT",
        help="serve over TCP instead of stdio; port 0 picks a free port and "
        "the bound address is printed to stderr as 'LISTENING HOST:PORT'",
    )
    parser.add_argument(
        "--connections",
        type=int,
        default=0,
        help="TCP only: exit after this many connections (0 = serve forever)",
    )
    fault = parser.add_argument_group("fault injection, for client testing")
    fault.add_argument(
        "--sleep-ms", type=int, default=0, help="delay every response by this much"
    )
    fault.add_argument(
        "--garbage",
        action="store_true",
        help="answer every request with a non-JSON line",
    )
    fault.add_argument(
        "--exit-after",
        type=int,
        metavar="N",
        help="exit without answering upon reading the Nth request",
    )
    fault.add_argument(
        "--exit-code", type=int, default=70, help="status for --exit-after"
    )
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = AdapterConfig(
        behavior=Behavior(args.behavior),
        listen=args.listen,
        connections=args.connections,
        sleep_ms=args.sleep_ms,
        garbage=args.garbage,
        exit_after=args.exit_after,
        exit_code=args.exit_code,
    )
    return serve(cfg)
