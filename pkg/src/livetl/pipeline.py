"""Per-minute generation loop: window assembly, gating, and emission.

A run walks the reference timeline span minute by minute.  At each minute
it assembles a :class:`GenerationRequest` (the tweet lookahead window plus,
for contextual variants, the present updates of the preceding minutes),
consults the gate when the variant is gated, and asks the generator for
update text.  Under generated-context sourcing the request at minute t sees
the run's own emissions at earlier minutes, so the loop is strictly
sequential within a match.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Protocol, Union

from .core import ContextSource, MatchDataset, PipelineConfig, Timeline, Tweet, Update
from .ingest import bucket_by_minute


@dataclass(frozen=True)
class GenerationRequest:
    """Input for one minute: lookahead tweets and preceding-update context.

    ``context`` holds (minute, text) pairs for the *present* updates in the
    lookback window, in minute order; it is empty for non-contextual
    variants.
    """

    minute: int
    tweets: tuple[Tweet, ...]
    context: tuple[tuple[int, str], ...] = ()


class Gate(Protocol):
    """Binary decision: generate an update at this minute (True) or not."""

    def decide(self, request: GenerationRequest) -> bool: ...


class Generator(Protocol):
    """Produces update text for a request, or None for "no update"."""

    def generate(self, request: GenerationRequest) -> Optional[str]: ...


class GeneratorFailure(RuntimeError):
    """A generator or gate failed at some minute; the match run is aborted."""

    def __init__(self, minute: int, cause: object):
        super().__init__(f"minute {minute}: {cause}")
        self.minute = minute
        self.cause = cause


def _present_lookup(emitted: Union[Timeline, Iterable[Update]]) -> Mapping[int, str]:
    entries = emitted.entries if isinstance(emitted, Timeline) else emitted
    return {u.minute: u.text for u in entries if u.text is not None}


def build_request(
    dataset: MatchDataset,
    minute: int,
    cfg: PipelineConfig,
    emitted: Union[Timeline, Iterable[Update]] = (),
    buckets: Optional[Mapping[int, tuple[Tweet, ...]]] = None,
) -> GenerationRequest:
    """Assemble the request for one minute.

    Tweets come from the minute buckets ``minute .. minute + lookahead``
    inclusive, in (minute, id) order.  Context covers minutes
    ``minute - lookback .. minute - 1`` and is drawn from ``emitted`` under
    generated sourcing or from the reference timeline under reference
    sourcing; absent entries never appear in it.
    """
    if buckets is None:
        buckets = bucket_by_minute(dataset.tweets)
    window: list[Tweet] = []
    for m in range(minute, minute + cfg.tweet_lookahead_minutes + 1):
        window.extend(buckets.get(m, ()))

    context: tuple[tuple[int, str], ...] = ()
    if cfg.variant.contextual:
        if cfg.context_source is ContextSource.REFERENCE:
            lookup = _present_lookup(dataset.reference)
        else:
            lookup = _present_lookup(emitted)
        context = tuple(
            (m, lookup[m])
            for m in range(minute - cfg.context_lookback_minutes, minute)
            if m in lookup
        )
    return GenerationRequest(minute=minute, tweets=tuple(window), context=context)


def run_match(
    dataset: MatchDataset,
    cfg: PipelineConfig,
    generator: Generator,
    gate: Optional[Gate] = None,
) -> Timeline:
    """Generate one update (or an absent entry) per reference-span minute.

    A gate must be supplied exactly for the gated variants.  A NO decision
    emits an absent entry without invoking the generator; after a YES the
    generator must return text; returning nothing is a contract violation.
    Any exception from the gate or generator aborts the run as
    :class:`GeneratorFailure`; partial timelines are never returned.
    """
    if cfg.variant.gated and gate is None:
        raise ValueError(f"variant {cfg.variant.value} requires a gate")
    if not cfg.variant.gated and gate is not None:
        raise ValueError(f"variant {cfg.variant.value} does not take a gate")

    buckets = bucket_by_minute(dataset.tweets)
    emitted: list[Update] = []
    for minute in dataset.reference.minutes():
        request = build_request(dataset, minute, cfg, emitted=emitted, buckets=buckets)
        try:
            if gate is not None and not gate.decide(request):
                emitted.append(Update(minute))
                continue
            text = generator.generate(request)
        except GeneratorFailure:
            raise
        except Exception as exc:
            raise GeneratorFailure(minute, exc) from exc
        text = text.strip() if text is not None else None
        if not text:
            if gate is not None:
                raise GeneratorFailure(minute, "generator returned no text after a yes decision")
            emitted.append(Update(minute))
        else:
            emitted.append(Update(minute, text))
    return Timeline(dataset.reference.start_minute, tuple(emitted))


@dataclass(frozen=True)
class ReferencePresenceGate:
    """YES exactly at the minutes where the reference timeline is present.

    Pins the number of generated updates to the number of reference
    updates, which is how the oracle runs are wired.
    """

    present_minutes: frozenset[int]

    def decide(self, request: GenerationRequest) -> bool:
        return request.minute in self.present_minutes


def reference_presence_gate(dataset: MatchDataset) -> ReferencePresenceGate:
    return ReferencePresenceGate(frozenset(u.minute for u in dataset.reference.present()))
