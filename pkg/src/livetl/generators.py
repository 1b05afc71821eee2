"""Built-in gates and generators, plus the external-process bridge.

The bridge externalizes generation/classification to another process over
newline-delimited JSON (one frame per line, UTF-8):

    request:  {"v":1, "kind":"generate"|"classify", "minute":int,
               "tweets":[str], "context":[{"minute":int, "text":str}]}
    response: {"v":1, "update": str|null}   for generate
              {"v":1, "decision": "yes"|"no"}   for classify

Strings must carry no raw newlines (JSON escaping handles this).  A frame
with the wrong version, an "error" key, or an unexpected shape is a
protocol error.  Each connection handles one request at a time.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .core import MatchDataset, Timeline
from .eval_align import TokenizerConfig, TokenizerMode, ngram_multiset, overlap, tokenize
from .ingest import bucket_by_minute
from .pipeline import GenerationRequest

PROTOCOL_VERSION = 1


class EchoFirstTweet:
    """Generator that repeats the first tweet of the window verbatim."""

    def generate(self, request: GenerationRequest) -> Optional[str]:
        return request.tweets[0].text if request.tweets else None


# ---------------------------------------------------------------------------
# Oracle extraction

class OverlapDenominator(Enum):
    REFERENCE = "reference"
    TWEET = "tweet"
    UNION = "union"


_ORACLE_TOKENS = TokenizerConfig(mode=TokenizerMode.WHITESPACE, ngram_n=1)


def oracle_extract(
    request: GenerationRequest,
    reference_text: str,
    cfg: TokenizerConfig = _ORACLE_TOKENS,
    denominator: OverlapDenominator = OverlapDenominator.REFERENCE,
) -> Optional[str]:
    """Pick the window tweet with the highest fraction of matching words.

    The fraction is the clipped token overlap with the reference update
    divided by the reference token count (the denominator is configurable
    because only "percentage of matching words" is pinned down).  Ties go
    to the earlier minute, then the lexicographically smaller id; an empty
    window yields no update.
    """
    if not request.tweets:
        return None
    ref_grams = ngram_multiset(tokenize(reference_text, cfg), cfg.ngram_n)
    best = None
    best_fraction = Fraction(-1)
    for tweet in sorted(request.tweets, key=lambda t: (t.minute, t.id)):
        grams = ngram_multiset(tokenize(tweet.text, cfg), cfg.ngram_n)
        matched = overlap(grams, ref_grams)
        if denominator is OverlapDenominator.REFERENCE:
            denom = ref_grams.total()
        elif denominator is OverlapDenominator.TWEET:
            denom = grams.total()
        else:
            denom = (grams | ref_grams).total()
        fraction = Fraction(matched, denom) if denom else Fraction(0)
        if fraction > best_fraction:
            best = tweet
            best_fraction = fraction
    return best.text if best is not None else None


@dataclass(frozen=True)
class ExtractiveOracle:
    """Generator wrapper around :func:`oracle_extract`.

    Defined only at reference-present minutes; run it behind the
    reference-presence gate.
    """

    reference: Timeline
    cfg: TokenizerConfig = _ORACLE_TOKENS
    denominator: OverlapDenominator = OverlapDenominator.REFERENCE

    @classmethod
    def for_dataset(cls, dataset: MatchDataset, **kwargs) -> "ExtractiveOracle":
        return cls(reference=dataset.reference, **kwargs)

    def generate(self, request: GenerationRequest) -> Optional[str]:
        update = self.reference.at(request.minute)
        if update.text is None:
            raise ValueError(f"no reference update at minute {request.minute}")
        return oracle_extract(request, update.text, self.cfg, self.denominator)


# ---------------------------------------------------------------------------
# Burst gate

@dataclass(frozen=True)
class BurstGateConfig:
    """Trailing-mean volume spike rule.

    YES needs at least ``min_count`` tweets this minute and at least
    ``ratio_threshold`` times the mean count of the ``trailing_minutes``
    preceding minutes (missing minutes count as zero, so an all-quiet
    trailing window leaves only the min_count clause).
    """

    trailing_minutes: int = 5
    ratio_threshold: float = 2.0
    min_count: int = 5

    def __post_init__(self) -> None:
        if self.trailing_minutes < 1:
            raise ValueError("trailing_minutes must be >= 1")
        if self.ratio_threshold <= 0:
            raise ValueError("ratio_threshold must be > 0")
        if self.min_count < 0:
            raise ValueError("min_count must be >= 0")


def burst_gate_decide(
    minute_counts: Mapping[int, int],
    minute: int,
    cfg: Optional[BurstGateConfig] = None,
) -> bool:
    cfg = cfg or BurstGateConfig()
    count = minute_counts.get(minute, 0)
    if count < cfg.min_count:
        return False
    trailing_total = sum(
        minute_counts.get(m, 0) for m in range(minute - cfg.trailing_minutes, minute)
    )
    # count >= ratio * (trailing_total / trailing_minutes), kept in product form
    return count * cfg.trailing_minutes >= cfg.ratio_threshold * trailing_total


@dataclass(frozen=True)
class BurstGate:
    """Gate saying YES at tweet-volume spikes; misses quiet events by design."""

    minute_counts: Mapping[int, int]
    cfg: BurstGateConfig = BurstGateConfig()

    @classmethod
    def from_dataset(cls, dataset: MatchDataset, cfg: Optional[BurstGateConfig] = None) -> "BurstGate":
        counts = {minute: len(group) for minute, group in bucket_by_minute(dataset.tweets).items()}
        return cls(minute_counts=counts, cfg=cfg or BurstGateConfig())

    def decide(self, request: GenerationRequest) -> bool:
        return burst_gate_decide(self.minute_counts, request.minute, self.cfg)


# ---------------------------------------------------------------------------
# Bridge

class Transport(Enum):
    SUBPROCESS = "subprocess"
    TCP = "tcp"


@dataclass(frozen=True)
class BridgeConfig:
    """How to reach the external peer.

    ``endpoint`` is a command line for SUBPROCESS or host:port for TCP.
    At most ``max_tweets_per_request`` tweet texts are sent per frame; the
    earliest tweets are kept and the newest dropped first.
    """

    transport: Transport
    endpoint: str
    timeout_ms: int = 10_000
    max_tweets_per_request: int = 256

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")
        if self.max_tweets_per_request < 1:
            raise ValueError("max_tweets_per_request must be >= 1")


class BridgeError(RuntimeError):
    """Base class for bridge transport/protocol failures."""


class BridgeTimeout(BridgeError):
    def __init__(self, timeout_ms: int):
        super().__init__(f"no response within {timeout_ms} ms")
        self.timeout_ms = timeout_ms


class BridgeProtocolError(BridgeError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class BridgeExit(BridgeError):
    def __init__(self, code: Optional[int]):
        super().__init__(f"peer closed the connection (exit code {code})")
        self.code = code


class _SubprocessChannel:
    def __init__(self, command: str):
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            bufsize=0,
        )
        self._buf = b""

    def send_line(self, line: str) -> None:
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(line.encode("utf-8") + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise BridgeExit(self.proc.poll()) from None

    def recv_line(self, timeout_s: float) -> str:
        assert self.proc.stdout is not None
        fd = self.proc.stdout.fileno()
        deadline = time.monotonic() + timeout_s
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BridgeTimeout(int(timeout_s * 1000))
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise BridgeTimeout(int(timeout_s * 1000))
            chunk = os.read(fd, 65536)
            if not chunk:
                try:
                    code = self.proc.wait(timeout=1.0)
                except subprocess.TimeoutExpired:
                    code = self.proc.poll()
                raise BridgeExit(code)
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode("utf-8")

    def close(self) -> None:
        if self.proc.stdin is not None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        try:
            self.proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class _TcpChannel:
    def __init__(self, endpoint: str, timeout_s: float):
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise BridgeProtocolError(f"bad TCP endpoint {endpoint!r}, expected host:port")
        self.sock = socket.create_connection((host, int(port)), timeout=timeout_s)
        self._buf = b""

    def send_line(self, line: str) -> None:
        try:
            self.sock.sendall(line.encode("utf-8") + b"\n")
        except OSError:
            raise BridgeExit(None) from None

    def recv_line(self, timeout_s: float) -> str:
        deadline = time.monotonic() + timeout_s
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BridgeTimeout(int(timeout_s * 1000))
            self.sock.settimeout(remaining)
            try:
                chunk = self.sock.recv(65536)
            except socket.timeout:
                raise BridgeTimeout(int(timeout_s * 1000)) from None
            except OSError:
                raise BridgeExit(None) from None
            if not chunk:
                raise BridgeExit(None)
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line.decode("utf-8")

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class BridgeClient:
    """Lockstep client for the bridge protocol: one request, one response.

    One client serves one match worker; concurrent matches need separate
    clients (separate subprocesses or connections).
    """

    def __init__(self, cfg: BridgeConfig):
        self.cfg = cfg
        if cfg.transport is Transport.SUBPROCESS:
            self._channel = _SubprocessChannel(cfg.endpoint)
        else:
            self._channel = _TcpChannel(cfg.endpoint, cfg.timeout_ms / 1000)

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        self._channel.close()

    def _frame(self, kind: str, request: GenerationRequest) -> str:
        tweets = [t.text for t in request.tweets[: self.cfg.max_tweets_per_request]]
        payload = {
            "v": PROTOCOL_VERSION,
            "kind": kind,
            "minute": request.minute,
            "tweets": tweets,
            "context": [{"minute": m, "text": s} for m, s in request.context],
        }
        return json.dumps(payload, ensure_ascii=False)

    def _roundtrip(self, kind: str, request: GenerationRequest) -> dict:
        self._channel.send_line(self._frame(kind, request))
        timeout_s = self.cfg.timeout_ms / 1000
        line = self._channel.recv_line(timeout_s)
        while not line.strip():
            line = self._channel.recv_line(timeout_s)
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeProtocolError(f"response is not valid JSON: {exc.msg}") from exc
        if not isinstance(response, dict):
            raise BridgeProtocolError("response frame is not a JSON object")
        if response.get("v") != PROTOCOL_VERSION:
            raise BridgeProtocolError(f"protocol version mismatch: {response.get('v')!r}")
        if "error" in response:
            raise BridgeProtocolError(f"peer error: {response['error']}")
        return response

    def generate(self, request: GenerationRequest) -> Optional[str]:
        response = self._roundtrip("generate", request)
        if "update" not in response:
            raise BridgeProtocolError("generate response is missing 'update'")
        update = response["update"]
        if update is None:
            return None
        if not isinstance(update, str):
            raise BridgeProtocolError(f"'update' must be a string or null, got {type(update).__name__}")
        return update.strip()

    def classify(self, request: GenerationRequest) -> bool:
        response = self._roundtrip("classify", request)
        decision = response.get("decision")
        if decision == "yes":
            return True
        if decision == "no":
            return False
        raise BridgeProtocolError(f"'decision' must be \"yes\" or \"no\", got {decision!r}")


def bridge_generate(request: GenerationRequest, cfg: BridgeConfig) -> Optional[str]:
    """One-shot generate over a fresh connection (pipelines should hold a client)."""
    with BridgeClient(cfg) as client:
        return client.generate(request)


def bridge_classify(request: GenerationRequest, cfg: BridgeConfig) -> bool:
    """One-shot classify over a fresh connection."""
    with BridgeClient(cfg) as client:
        return client.classify(request)


class BridgeGenerator:
    """Generator backed by a persistent bridge connection."""

    def __init__(self, cfg: BridgeConfig):
        self.client = BridgeClient(cfg)

    def generate(self, request: GenerationRequest) -> Optional[str]:
        return self.client.generate(request)

    def close(self) -> None:
        self.client.close()

    def __enter__(self) -> "BridgeGenerator":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


class BridgeGate:
    """Gate backed by a persistent bridge connection."""

    def __init__(self, cfg: BridgeConfig):
        self.client = BridgeClient(cfg)

    def decide(self, request: GenerationRequest) -> bool:
        return self.client.classify(request)

    def close(self) -> None:
        self.client.close()

    def __enter__(self) -> "BridgeGate":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
