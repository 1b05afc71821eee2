"""Shared builders for in-memory datasets and on-disk match corpora."""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional, Sequence

import pytest

from livetl.core import MatchDataset, Timeline, Tweet

KICKOFF = datetime(2014, 8, 2, 19, 0, tzinfo=timezone.utc)


def make_dataset(
    tweets: Sequence[tuple[int, str]],
    reference: Sequence[tuple[int, Optional[str]]],
    start: int = 0,
    end: Optional[int] = None,
    match_id: str = "m",
) -> MatchDataset:
    """Dataset from (minute, text) pairs; tweet ids are positional."""
    if end is None:
        end = max((m for m, _ in reference), default=start)
    built = tuple(
        Tweet(id=f"t{i:04d}", minute=minute, text=text)
        for i, (minute, text) in enumerate(tweets)
    )
    timeline = Timeline.from_pairs(
        [(m, t) for m, t in reference if t is not None], start, end
    )
    return MatchDataset(match_id, KICKOFF, built, timeline, ("#match",))


def write_jsonl(path: Path, records) -> Path:
    path.write_text(
        "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records),
        encoding="utf-8",
    )
    return path


def write_corpus(
    root: Path,
    match_id: str,
    tweets: Sequence[tuple[int, str]],
    reference: Sequence[tuple[int, Optional[str]]],
    start: int = 0,
    end: Optional[int] = None,
    use_timestamps: bool = False,
) -> Path:
    """Write tweet archive, reference archive, and manifest; return manifest path."""
    if end is None:
        end = max((m for m, _ in reference), default=start)
    tweet_records = []
    for i, (minute, text) in enumerate(tweets):
        record = {"id": f"t{i:04d}", "text": text}
        if use_timestamps:
            record["ts"] = (KICKOFF + timedelta(minutes=minute, seconds=30)).isoformat()
        else:
            record["t"] = minute
        tweet_records.append(record)
    present = {m: t for m, t in reference if t is not None}
    ref_records = [
        {"minute": m, "text": present.get(m)} for m in range(start, end + 1)
    ]
    tweets_path = write_jsonl(root / f"{match_id}.tweets.jsonl", tweet_records)
    ref_path = write_jsonl(root / f"{match_id}.ref.jsonl", ref_records)
    manifest_path = root / f"{match_id}.manifest.json"
    manifest_path.write_text(
        json.dumps(
            {
                "match_id": match_id,
                "kickoff": KICKOFF.isoformat(),
                "hashtags": ["#match"],
                "tweets": tweets_path.name,
                "reference": ref_path.name,
            },
            ensure_ascii=False,
        ),
        encoding="utf-8",
    )
    return manifest_path


@pytest.fixture
def small_dataset() -> MatchDataset:
    return make_dataset(
        tweets=[
            (0, "kick off at the stadium"),
            (2, "early chance for the visitors"),
            (5, "goal for the home side"),
            (5, "what a strike"),
            (9, "substitution coming up"),
        ],
        reference=[(0, "kick off"), (5, "goal for the home side"), (9, None)],
        start=0,
        end=10,
    )
