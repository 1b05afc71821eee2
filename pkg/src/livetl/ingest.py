"""Archive parsing, tweet preprocessing, and match-level filtering.

File formats (all JSON Lines, UTF-8):

* tweet archive, one object per line:
  ``{"id": str, "t": int minute}`` or ``{"id": str, "ts": RFC3339}``, plus
  ``"text": str``.  When ``ts`` is given the minute is
  ``floor((ts - kickoff) / 60s)``.
* reference archive: ``{"minute": int, "text": str | null}`` ("NaN" is
  accepted as an alias for null).
* match manifest: one JSON object
  ``{"match_id", "kickoff": RFC3339, "hashtags": [str], "tweets": path,
  "reference": path}`` with paths relative to the manifest file.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .core import MatchDataset, Timeline, Tweet, Update

_URL_RE = re.compile(r"https?://\S*")
_WS_RE = re.compile(r"\s+")
_HASH_CHARS = ("#", "＃")  # ascii and full-width hash


class IngestError(Exception):
    """Base class for ingest failures."""


class MalformedRecord(IngestError):
    """An archive line that cannot be parsed."""

    def __init__(self, line_no: int, detail: str):
        super().__init__(f"line {line_no}: {detail}")
        self.line_no = line_no
        self.detail = detail


class VolumeRejection(IngestError):
    """Match rejected: not enough tweets inside the collection window."""

    def __init__(self, match_id: str, surviving: int, min_tweets: int):
        super().__init__(
            f"match {match_id!r} rejected (VOLUME): {surviving} tweets, need more than {min_tweets}"
        )
        self.match_id = match_id
        self.surviving = surviving
        self.min_tweets = min_tweets


@dataclass(frozen=True)
class IngestConfig:
    """Preprocessing and filtering knobs.

    ``min_tweets`` is a strict threshold: a match survives only with *more*
    than this many tweets inside the window.  ``exclusion_patterns`` are
    regular expressions applied to reference updates; matching updates are
    replaced by absent entries (the published exclusion rules are not
    available, so the default is empty; see README for examples).
    """

    min_tweets: int = 3200
    window_before_minutes: int = 60
    window_after_minutes: int = 60
    exclusion_patterns: tuple[str, ...] = ()
    hashtag_strip: bool = True
    url_strip: bool = True

    def __post_init__(self) -> None:
        if self.min_tweets < 0:
            raise ValueError("min_tweets must be >= 0")
        if self.window_before_minutes < 0 or self.window_after_minutes < 0:
            raise ValueError("window bounds must be >= 0")


@dataclass(frozen=True)
class MatchManifest:
    match_id: str
    kickoff: datetime
    tweets_path: Path
    reference_path: Path
    hashtags: tuple[str, ...] = ()


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_hashtags(text: str) -> str:
    # A hashtag is '#' or '＃' plus the maximal following run of characters
    # that are neither whitespace nor punctuation; every hash starts one,
    # so no hash character survives this pass.
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in _HASH_CHARS:
            i += 1
            while i < n and not text[i].isspace() and not _is_punct(text[i]):
                i += 1
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def preprocess_text(raw: str, url_strip: bool = True, hashtag_strip: bool = True) -> str:
    """Strip hashtag and URL tokens, collapse whitespace, trim.

    Hashtags are removed before URLs so that the result is a fixed point
    (deleting a hashtag can splice a URL together; the reverse cannot
    happen because no hash character survives the first pass).
    """
    text = raw
    if hashtag_strip:
        text = _strip_hashtags(text)
    if url_strip:
        text = _URL_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC3339 timestamp; naive values are taken as UTC."""
    ts = datetime.fromisoformat(value.replace("Z", "+00:00").replace("z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def minute_of(ts: datetime, kickoff: datetime) -> int:
    """Match-relative minute containing ``ts`` (floor division)."""
    if kickoff.tzinfo is None:
        kickoff = kickoff.replace(tzinfo=timezone.utc)
    return (ts - kickoff) // timedelta(minutes=1)


def _iter_lines(stream: Union[IO[bytes], IO[str], Iterable[str]]) -> Iterator[str]:
    for line in stream:
        if isinstance(line, bytes):
            yield line.decode("utf-8")
        else:
            yield line


def _parse_json_line(line: str, line_no: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise MalformedRecord(line_no, "record is not a JSON object")
    return obj


def parse_tweet_archive(
    stream: Union[IO[bytes], IO[str], Iterable[str]],
    kickoff: datetime,
    cfg: Optional[IngestConfig] = None,
) -> list[Tweet]:
    """Parse a tweet archive, preprocessing each body."""
    cfg = cfg or IngestConfig()
    tweets: list[Tweet] = []
    for line_no, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        obj = _parse_json_line(line, line_no)
        try:
            tweet_id = str(obj["id"])
            raw_text = obj["text"]
            if not isinstance(raw_text, str):
                raise MalformedRecord(line_no, "tweet text must be a string")
            if "t" in obj:
                minute = int(obj["t"])
            elif "ts" in obj:
                minute = minute_of(parse_rfc3339(obj["ts"]), kickoff)
            else:
                raise MalformedRecord(line_no, "tweet record needs 't' or 'ts'")
        except MalformedRecord:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(line_no, f"bad tweet record: {exc}") from exc
        text = preprocess_text(raw_text, url_strip=cfg.url_strip, hashtag_strip=cfg.hashtag_strip)
        tweets.append(Tweet(id=tweet_id, minute=minute, text=text, raw_text=raw_text))
    return tweets


def _normalize_update_text(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    if text == "NaN":  # legacy spelling of "no update"
        return None
    stripped = text.strip()
    return stripped if stripped else None


def parse_reference_archive(
    stream: Union[IO[bytes], IO[str], Iterable[str]],
) -> Timeline:
    """Parse a reference archive into a dense timeline.

    Minutes missing from the archive become absent entries; duplicate
    minutes and empty archives are malformed.
    """
    pairs: list[tuple[int, Optional[str]]] = []
    seen: set[int] = set()
    for line_no, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        obj = _parse_json_line(line, line_no)
        try:
            minute = int(obj["minute"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(line_no, f"bad reference record: {exc}") from exc
        if minute in seen:
            raise MalformedRecord(line_no, f"duplicate reference minute {minute}")
        seen.add(minute)
        text = obj.get("text")
        if text is not None and not isinstance(text, str):
            raise MalformedRecord(line_no, "reference text must be a string or null")
        pairs.append((minute, _normalize_update_text(text)))
    if not pairs:
        raise MalformedRecord(0, "reference archive is empty")
    return Timeline.from_pairs(pairs)


def apply_exclusions(reference: Timeline, patterns: Iterable[str]) -> Timeline:
    """Blank out reference updates matching any exclusion pattern."""
    compiled = [re.compile(p) for p in patterns]
    if not compiled:
        return reference
    entries = tuple(
        Update(u.minute, None)
        if u.text is not None and any(p.search(u.text) for p in compiled)
        else u
        for u in reference.entries
    )
    return Timeline(reference.start_minute, entries)


def load_match(
    tweet_archive: Union[IO[bytes], IO[str], Iterable[str]],
    reference_archive: Union[IO[bytes], IO[str], Iterable[str]],
    cfg: Optional[IngestConfig] = None,
    *,
    match_id: str = "",
    kickoff: Optional[datetime] = None,
    hashtags: Iterable[str] = (),
) -> MatchDataset:
    """Parse, filter, and validate one match.

    Raises :class:`MalformedRecord` on unparseable input and
    :class:`VolumeRejection` when at most ``cfg.min_tweets`` tweets survive
    the window filter.
    """
    cfg = cfg or IngestConfig()
    kickoff = kickoff or datetime.fromtimestamp(0, tz=timezone.utc)

    reference = apply_exclusions(parse_reference_archive(reference_archive), cfg.exclusion_patterns)
    tweets = parse_tweet_archive(tweet_archive, kickoff, cfg)

    low = -cfg.window_before_minutes
    high = reference.end_minute + cfg.window_after_minutes
    surviving = [t for t in tweets if low <= t.minute <= high]
    if len(surviving) <= cfg.min_tweets:
        raise VolumeRejection(match_id, len(surviving), cfg.min_tweets)
    surviving.sort(key=lambda t: (t.minute, t.id))

    return MatchDataset(
        match_id=match_id,
        kickoff=kickoff,
        tweets=tuple(surviving),
        reference=reference,
        hashtags=tuple(hashtags),
    )


def load_manifest(path: Union[str, Path]) -> MatchManifest:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedRecord(exc.lineno, f"manifest {path}: {exc.msg}") from exc
    try:
        return MatchManifest(
            match_id=str(obj["match_id"]),
            kickoff=parse_rfc3339(obj["kickoff"]),
            tweets_path=path.parent / obj["tweets"],
            reference_path=path.parent / obj["reference"],
            hashtags=tuple(obj.get("hashtags", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(0, f"manifest {path}: {exc}") from exc


def load_match_from_manifest(
    manifest: Union[str, Path, MatchManifest],
    cfg: Optional[IngestConfig] = None,
) -> MatchDataset:
    if not isinstance(manifest, MatchManifest):
        manifest = load_manifest(manifest)
    with open(manifest.tweets_path, "rb") as tweets_fp, open(manifest.reference_path, "rb") as ref_fp:
        return load_match(
            tweets_fp,
            ref_fp,
            cfg,
            match_id=manifest.match_id,
            kickoff=manifest.kickoff,
            hashtags=manifest.hashtags,
        )


def bucket_by_minute(tweets: Iterable[Tweet]) -> dict[int, tuple[Tweet, ...]]:
    """Partition tweets into per-minute buckets, preserving input order."""
    buckets: dict[int, list[Tweet]] = {}
    for tweet in tweets:
        buckets.setdefault(tweet.minute, []).append(tweet)
    return {minute: tuple(group) for minute, group in buckets.items()}


def timeline_to_records(timeline: Timeline) -> list[dict]:
    return [{"minute": u.minute, "text": u.text} for u in timeline.entries]


def serialize_timeline(timeline: Timeline) -> str:
    """Canonical JSON Lines form of a timeline (absent -> null)."""
    return "".join(
        json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n"
        for rec in timeline_to_records(timeline)
    )


def write_timeline(timeline: Timeline, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_timeline(timeline), encoding="utf-8", newline="\n")


def read_timeline(source: Union[str, Path, IO[bytes], IO[str], Iterable[str]]) -> Timeline:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fp:
            return parse_reference_archive(fp)
    return parse_reference_archive(source)
