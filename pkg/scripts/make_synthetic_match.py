#!/usr/bin/env python3
"""Generate a synthetic match corpus: tweet archives, references, manifests.

Each match gets a reference timeline with goal/card/substitution updates at
random minutes, a tweet stream that bursts around those minutes, the
reference text planted verbatim inside its window (so the extractive
upper bound is attainable), and hashtag/URL noise for the preprocessor to
chew on.  Deterministic for a given seed.
"""

from __future__ import annotations

import argparse
import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

KICKOFF = datetime(2014, 8, 2, 19, 0, tzinfo=timezone.utc)

PLAYERS = ["中村", "遠藤", "Fujita", "MJunio", "佐藤", "Endo", "Ono", "田中"]
NOISE = [
    "スタジアムなう",
    "今日も応援",
    "keeper with a big save",
    "midfield battle continues",
    "атмосфера отличная",
    "what a pass",
    "押し込まれている",
    "corner kick coming",
]
HASHTAGS = ["#jleague", "#soccer", "＃サッカー", "#matchday"]


def reference_updates(rng: random.Random, end_minute: int) -> list[tuple[int, str]]:
    minutes = sorted(rng.sample(range(2, end_minute - 2), rng.randint(6, 10)))
    updates = []
    for minute in minutes:
        roll = rng.random()
        if roll < 0.45:
            updates.append((minute, f"ゴール!! {rng.choice(PLAYERS)}"))
        elif roll < 0.65:
            updates.append((minute, f"{rng.choice(PLAYERS)}にイエローカード"))
        elif roll < 0.8:
            out_p, in_p = rng.sample(PLAYERS, 2)
            updates.append((minute, f"{rng.randint(2, 30)} {out_p} OUT → {rng.randint(2, 30)} {in_p} IN"))
        else:
            updates.append((minute, f"{rng.choice(NOISE)} {minute}分"))
    return updates


def tweet_stream(
    rng: random.Random,
    updates: list[tuple[int, str]],
    end_minute: int,
    volume: int,
) -> list[dict]:
    records = []

    def add(minute: int, text: str) -> None:
        seconds = rng.randint(0, 59)
        ts = KICKOFF + timedelta(minutes=minute, seconds=seconds)
        records.append({"minute": minute, "ts": ts.isoformat(), "text": text})

    # plant each reference text inside its lookahead window, then burst
    for minute, text in updates:
        add(rng.randint(minute, min(minute + 3, end_minute)), text)
        for _ in range(rng.randint(8, 20)):
            jitter = rng.randint(0, 3)
            noise = rng.choice(NOISE)
            decorated = f"{noise} {rng.choice(HASHTAGS)}" if rng.random() < 0.5 else noise
            add(min(minute + jitter, end_minute), decorated)

    while len(records) < volume:
        minute = rng.randint(-30, end_minute + 30)
        text = rng.choice(NOISE)
        if rng.random() < 0.3:
            text = f"{text} https://t.co/{rng.randrange(16**6):06x}"
        if rng.random() < 0.4:
            text = f"{rng.choice(HASHTAGS)} {text}"
        add(minute, text)

    records.sort(key=lambda r: r["ts"])
    return [
        {"id": f"tw{i:07d}", "ts": r["ts"], "text": r["text"]}
        for i, r in enumerate(records)
    ]


def write_match(root: Path, match_id: str, rng: random.Random, end_minute: int, volume: int) -> Path:
    updates = reference_updates(rng, end_minute)
    present = dict(updates)
    ref_path = root / f"{match_id}.reference.jsonl"
    with ref_path.open("w", encoding="utf-8") as fp:
        for minute in range(end_minute + 1):
            fp.write(json.dumps({"minute": minute, "text": present.get(minute)}, ensure_ascii=False) + "\n")

    tweets_path = root / f"{match_id}.tweets.jsonl"
    with tweets_path.open("w", encoding="utf-8") as fp:
        for record in tweet_stream(rng, updates, end_minute, volume):
            fp.write(json.dumps(record, ensure_ascii=False) + "\n")

    manifest_path = root / f"{match_id}.manifest.json"
    manifest_path.write_text(
        json.dumps(
            {
                "match_id": match_id,
                "kickoff": KICKOFF.isoformat(),
                "hashtags": HASHTAGS[:2],
                "tweets": tweets_path.name,
                "reference": ref_path.name,
            },
            ensure_ascii=False,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return manifest_path


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, required=True, help="corpus directory")
    parser.add_argument("--matches", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--end-minute", type=int, default=95)
    parser.add_argument("--volume", type=int, default=400, help="tweets per match")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)
    for k in range(args.matches):
        manifest = write_match(args.out, f"synth{k:02d}", rng, args.end_minute, args.volume)
        print(manifest)


if __name__ == "__main__":
    main()
