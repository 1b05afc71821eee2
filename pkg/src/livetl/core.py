"""Shared domain types: tweets, timeline updates, match datasets, run configs.

Everything here is immutable after construction and safe to share across
workers.  The timeline unit is the match-relative minute (kickoff = 0,
negative minutes allowed); sub-minute timestamps are floored to the
containing minute at ingest time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Iterator, Optional

# Default collection window around a match, in minutes.
WINDOW_BEFORE_MINUTES = 60
WINDOW_AFTER_MINUTES = 60


class Variant(Enum):
    """The four pipeline wirings: plain generator, gated, contextual, both."""

    BASE = "base"
    CLF = "clf"
    CXT = "cxt"
    CLF_CXT = "clf_cxt"

    @property
    def gated(self) -> bool:
        return self in (Variant.CLF, Variant.CLF_CXT)

    @property
    def contextual(self) -> bool:
        return self in (Variant.CXT, Variant.CLF_CXT)


class ContextSource(Enum):
    """Where contextual variants draw preceding updates from.

    GENERATED replays the pipeline's own emissions (production behaviour);
    REFERENCE feeds the gold updates back instead, which realizes the
    upper-bound run where generation sees perfect preceding context.
    """

    GENERATED = "generated"
    REFERENCE = "reference"


@dataclass(frozen=True)
class Tweet:
    """One archived post with its minute offset relative to kickoff.

    ``text`` is the preprocessed body (URLs and hashtags stripped);
    ``raw_text`` keeps the original for audit.
    """

    id: str
    minute: int
    text: str
    raw_text: str = ""


@dataclass(frozen=True)
class Update:
    """One timeline slot: either update text for this minute, or absent.

    ``text is None`` is the in-memory form of the "no update this minute"
    marker; serialization maps it to JSON null (the literal string "NaN"
    is accepted on input for compatibility).
    """

    minute: int
    text: Optional[str] = None

    @property
    def absent(self) -> bool:
        return self.text is None


@dataclass(frozen=True)
class Timeline:
    """Dense minute-indexed sequence of updates, one entry per minute."""

    start_minute: int
    entries: tuple[Update, ...]

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[int, Optional[str]]],
        start_minute: Optional[int] = None,
        end_minute: Optional[int] = None,
    ) -> "Timeline":
        """Build a dense timeline from (minute, text-or-None) pairs.

        Pairs may arrive unordered; minutes not covered by any pair become
        absent entries.  Duplicate minutes are rejected.
        """
        by_minute: dict[int, Optional[str]] = {}
        for minute, text in pairs:
            if minute in by_minute:
                raise ValueError(f"duplicate timeline minute {minute}")
            by_minute[minute] = text
        if not by_minute and (start_minute is None or end_minute is None):
            raise ValueError("cannot build a timeline with no entries and no explicit span")
        start = start_minute if start_minute is not None else min(by_minute)
        end = end_minute if end_minute is not None else max(by_minute)
        if end < start:
            raise ValueError(f"timeline span [{start}, {end}] is empty")
        entries = tuple(Update(m, by_minute.get(m)) for m in range(start, end + 1))
        return cls(start, entries)

    @property
    def end_minute(self) -> int:
        return self.start_minute + len(self.entries) - 1

    def minutes(self) -> range:
        return range(self.start_minute, self.start_minute + len(self.entries))

    def at(self, minute: int) -> Update:
        k = minute - self.start_minute
        if not 0 <= k < len(self.entries):
            raise KeyError(f"minute {minute} outside timeline span")
        return self.entries[k]

    def present(self) -> Iterator[Update]:
        """Iterate over the non-absent entries in minute order."""
        return (u for u in self.entries if u.text is not None)

    def present_count(self) -> int:
        return sum(1 for _ in self.present())


@dataclass(frozen=True)
class MatchDataset:
    """Tweets plus the reference timeline and metadata for one match."""

    match_id: str
    kickoff: datetime
    tweets: tuple[Tweet, ...]
    reference: Timeline
    hashtags: tuple[str, ...] = ()


@dataclass(frozen=True)
class PipelineConfig:
    """Wiring and window sizes for one generation run.

    The defaults mirror the production setup: tweets from the current
    minute through three minutes after it, and (for contextual variants)
    the present updates of the preceding four minutes.
    """

    variant: Variant = Variant.BASE
    tweet_lookahead_minutes: int = 3
    context_lookback_minutes: int = 4
    context_source: ContextSource = ContextSource.GENERATED

    def __post_init__(self) -> None:
        if self.tweet_lookahead_minutes < 0:
            raise ValueError("tweet_lookahead_minutes must be >= 0")
        if self.variant.contextual and self.context_lookback_minutes < 1:
            raise ValueError("contextual variants need context_lookback_minutes >= 1")


def validate_dataset(
    dataset: MatchDataset,
    window_before: int = WINDOW_BEFORE_MINUTES,
    window_after: int = WINDOW_AFTER_MINUTES,
) -> list[str]:
    """Check the dataset invariants, returning one message per violation.

    Violations are data, not failures: an empty list means the dataset is
    well formed.
    """
    violations: list[str] = []

    low = -window_before
    high = dataset.reference.end_minute + window_after
    prev_key: Optional[tuple[int, str]] = None
    for tweet in dataset.tweets:
        key = (tweet.minute, tweet.id)
        if prev_key is not None and key < prev_key:
            violations.append(
                f"tweets: out of (minute, id) order at tweet {tweet.id!r} (minute {tweet.minute})"
            )
        prev_key = key
        if not low <= tweet.minute <= high:
            violations.append(
                f"tweet.minute: {tweet.minute} outside match window [{low}, {high}] (tweet {tweet.id!r})"
            )
        if "http://" in tweet.text or "https://" in tweet.text:
            violations.append(f"tweet.text: URL remains after preprocessing (tweet {tweet.id!r})")
        if "#" in tweet.text or "＃" in tweet.text:
            violations.append(f"tweet.text: hashtag remains after preprocessing (tweet {tweet.id!r})")

    ref = dataset.reference
    for k, update in enumerate(ref.entries):
        expected = ref.start_minute + k
        if update.minute != expected:
            violations.append(
                f"reference.entries: minute {update.minute} at slot {k}, expected {expected} (dense order)"
            )
        if update.text is not None and not update.text.strip():
            violations.append(f"reference.entries: blank update text at minute {update.minute}")

    return violations
