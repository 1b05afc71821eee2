"""Key-event extraction from update text and lenient/strict detection scoring.

Events (goals, substitutions, penalty cards) are pulled out of update text
by user-replaceable regular expressions with named capture groups.  Scoring
pairs each reference event with the nearest generated event of the same
kind within a two-minute window; the strict variant additionally checks the
kind's attributes on exactly those pairs, so strict scores can never exceed
lenient ones.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import Timeline

DEFAULT_WINDOW_MINUTES = 2


class EventKind(Enum):
    GOAL = "goal"
    SUBSTITUTION = "substitution"
    CARD = "card"


ATTR_KEYS: dict[EventKind, tuple[str, ...]] = {
    EventKind.GOAL: ("scorer",),
    EventKind.CARD: ("card_type", "player"),
    EventKind.SUBSTITUTION: ("player_out", "player_in"),
}

_CARD_TYPES = {"yellow", "red"}
_CARD_ALIASES = {
    "yellow": "yellow",
    "red": "red",
    "イエロー": "yellow",
    "レッド": "red",
    "警告": "yellow",
    "退場": "red",
}


class MatchMode(Enum):
    LENIENT = "lenient"
    STRICT = "strict"


@dataclass(frozen=True)
class EventRecord:
    """A typed key event; attribute values are None when unknown."""

    minute: int
    kind: EventKind
    attrs: tuple[tuple[str, Optional[str]], ...] = ()

    def __post_init__(self) -> None:
        allowed = ATTR_KEYS[self.kind]
        for key, value in self.attrs:
            if key not in allowed:
                raise ValueError(f"{self.kind.value} event does not take attr {key!r}")
            if key == "card_type" and value is not None and value not in _CARD_TYPES:
                raise ValueError(f"card_type must be yellow or red, got {value!r}")

    @classmethod
    def make(cls, minute: int, kind: EventKind, **attrs: Optional[str]) -> "EventRecord":
        return cls(minute, kind, tuple(sorted(attrs.items())))

    def attr(self, key: str) -> Optional[str]:
        for k, v in self.attrs:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class EventPatternSet:
    """Per-kind regex lists; group names must be the kind's attr keys."""

    goal: tuple[re.Pattern, ...] = ()
    card: tuple[re.Pattern, ...] = ()
    substitution: tuple[re.Pattern, ...] = ()

    def __post_init__(self) -> None:
        for kind in EventKind:
            allowed = set(ATTR_KEYS[kind])
            for pattern in self.patterns_for(kind):
                extra = set(pattern.groupindex) - allowed
                if extra:
                    raise ValueError(
                        f"{kind.value} pattern {pattern.pattern!r} captures unknown attrs {sorted(extra)}"
                    )

    def patterns_for(self, kind: EventKind) -> tuple[re.Pattern, ...]:
        return getattr(self, kind.value)

    @classmethod
    def from_json(cls, obj: Mapping[str, Sequence[str]]) -> "EventPatternSet":
        def compile_all(key: str) -> tuple[re.Pattern, ...]:
            return tuple(re.compile(p) for p in obj.get(key, ()))

        return cls(
            goal=compile_all("goal"),
            card=compile_all("card"),
            substitution=compile_all("substitution"),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EventPatternSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def default_patterns() -> EventPatternSet:
    """The pattern set shipped with the package (J-League style phrasing)."""
    return EventPatternSet.load(Path(__file__).parent / "patterns" / "jleague.json")


def _normalize_attr(key: str, value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    value = value.strip()
    if not value:
        return None
    if key == "card_type":
        return _CARD_ALIASES.get(value.lower())
    return value


def extract_events(timeline: Timeline, patterns: EventPatternSet) -> tuple[EventRecord, ...]:
    """Scan present updates; first matching pattern per kind wins per minute."""
    events: list[EventRecord] = []
    for update in timeline.present():
        for kind in EventKind:
            for pattern in patterns.patterns_for(kind):
                m = pattern.search(update.text)
                if m is None:
                    continue
                attrs = tuple(
                    sorted(
                        (key, _normalize_attr(key, m.groupdict().get(key)))
                        for key in ATTR_KEYS[kind]
                    )
                )
                events.append(EventRecord(update.minute, kind, attrs))
                break
    return tuple(events)


@dataclass(frozen=True)
class KindScore:
    ref_count: int
    gen_count: int
    matched: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, ref_count: int, gen_count: int, matched: int) -> "KindScore":
        precision = matched / gen_count if gen_count else 0.0
        recall = matched / ref_count if ref_count else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(ref_count, gen_count, matched, precision, recall, f1)

    def as_dict(self) -> dict:
        return {
            "ref_count": self.ref_count,
            "gen_count": self.gen_count,
            "matched": self.matched,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _greedy_pairs(
    refs: Sequence[EventRecord],
    gens: Sequence[EventRecord],
    window: int,
) -> list[tuple[EventRecord, EventRecord]]:
    # Reference events in minute order each grab the nearest unclaimed
    # generated event within the window; equal distances go to the earlier
    # generated event.
    gens = sorted(gens, key=lambda e: e.minute)
    taken = [False] * len(gens)
    pairs: list[tuple[EventRecord, EventRecord]] = []
    for ref in sorted(refs, key=lambda e: e.minute):
        best_idx = None
        best_delta = None
        for idx, gen in enumerate(gens):
            if taken[idx]:
                continue
            delta = abs(gen.minute - ref.minute)
            if delta > window:
                continue
            if best_delta is None or delta < best_delta:
                best_idx, best_delta = idx, delta
        if best_idx is not None:
            taken[best_idx] = True
            pairs.append((ref, gens[best_idx]))
    return pairs


def _attrs_equal(ref: EventRecord, gen: EventRecord) -> bool:
    # Unknown never equals anything, including another unknown.
    for key in ATTR_KEYS[ref.kind]:
        a, b = ref.attr(key), gen.attr(key)
        if a is None or b is None or a != b:
            return False
    return True


def match_events(
    ref_events: Iterable[EventRecord],
    gen_events: Iterable[EventRecord],
    mode: MatchMode = MatchMode.LENIENT,
    window: int = DEFAULT_WINDOW_MINUTES,
) -> dict[str, KindScore]:
    """Score detection per kind and in total for one mode.

    The pairing itself is mode-independent; strict mode only demands attr
    equality on the paired events, so its matched counts are a subset of
    the lenient ones.
    """
    refs = list(ref_events)
    gens = list(gen_events)
    scores: dict[str, KindScore] = {}
    total_ref = total_gen = total_matched = 0
    for kind in EventKind:
        kind_refs = [e for e in refs if e.kind is kind]
        kind_gens = [e for e in gens if e.kind is kind]
        pairs = _greedy_pairs(kind_refs, kind_gens, window)
        if mode is MatchMode.STRICT:
            matched = sum(1 for ref, gen in pairs if _attrs_equal(ref, gen))
        else:
            matched = len(pairs)
        scores[kind.value] = KindScore.from_counts(len(kind_refs), len(kind_gens), matched)
        total_ref += len(kind_refs)
        total_gen += len(kind_gens)
        total_matched += matched
    scores["total"] = KindScore.from_counts(total_ref, total_gen, total_matched)
    return scores


def event_report(
    ref_events: Iterable[EventRecord],
    gen_events: Iterable[EventRecord],
    window: int = DEFAULT_WINDOW_MINUTES,
) -> dict:
    """Both modes, per kind and total, as a JSON-ready mapping."""
    refs = list(ref_events)
    gens = list(gen_events)
    return {
        mode.value: {
            name: score.as_dict()
            for name, score in match_events(refs, gens, mode, window).items()
        }
        for mode in MatchMode
    }


def aggregate_event_reports(reports: Iterable[Mapping]) -> dict:
    """Micro-average per-match reports: sum raw counts, then recompute ratios."""
    names = [kind.value for kind in EventKind] + ["total"]
    sums: dict[tuple[str, str], list[int]] = {
        (mode.value, name): [0, 0, 0] for mode in MatchMode for name in names
    }
    for report in reports:
        for mode in MatchMode:
            for name in names:
                cell = report[mode.value][name]
                bucket = sums[(mode.value, name)]
                bucket[0] += cell["ref_count"]
                bucket[1] += cell["gen_count"]
                bucket[2] += cell["matched"]
    return {
        mode.value: {
            name: KindScore.from_counts(*sums[(mode.value, name)]).as_dict()
            for name in names
        }
        for mode in MatchMode
    }
