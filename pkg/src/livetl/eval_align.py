"""Alignment-based n-gram scoring of a generated timeline against a reference.

The metric tokenizes every update, counts clipped n-gram overlaps between
generated and reference updates that are at most one minute apart, and then
picks the monotone one-to-one matching that maximizes the total overlap by
dynamic programming.  Precision, recall, and F1 are ratios of that aligned
total over the generated and reference n-gram counts.

Indices ``i`` (generated) and ``j`` (reference) are positions on the shared
minute axis (one slot per minute, absent slots contributing zero) so the
band ``|i - j| <= 1`` is exactly a one-minute tolerance.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .core import Timeline


class TokenizerMode(Enum):
    CHAR = "char"
    WHITESPACE = "ws"


@dataclass(frozen=True)
class TokenizerConfig:
    """How update text is split before n-gram counting.

    CHAR treats every non-whitespace character as a token (the robust
    default for unsegmented text); WHITESPACE splits on whitespace and
    lowercases unless told otherwise.
    """

    mode: TokenizerMode = TokenizerMode.CHAR
    ngram_n: int = 1
    lowercase: bool = True

    def __post_init__(self) -> None:
        if self.ngram_n < 1:
            raise ValueError("ngram_n must be >= 1")


def tokenize(text: str, cfg: TokenizerConfig) -> tuple[str, ...]:
    if cfg.mode is TokenizerMode.CHAR:
        return tuple(ch for ch in text if not ch.isspace())
    tokens = text.split()
    if cfg.lowercase:
        tokens = [t.lower() for t in tokens]
    return tuple(tokens)


def ngram_multiset(tokens: Sequence[str], n: int) -> Counter:
    """All contiguous n-grams with multiplicity; empty when the text is shorter than n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(tuple(tokens[k : k + n]) for k in range(len(tokens) - n + 1))


def overlap(a: Counter, b: Counter) -> int:
    """Clipped multiset intersection size: sum of min counts per n-gram."""
    if len(b) < len(a):
        a, b = b, a
    return sum(min(count, b[gram]) for gram, count in a.items() if gram in b)


class SpanMismatch(ValueError):
    """Generated and reference timelines do not cover the same minutes."""


class MatrixTooLarge(ValueError):
    """Exhaustive enumeration refused above the dimension cap."""


@dataclass(frozen=True)
class ScoreMatrix:
    """Banded overlap scores between generated and reference updates.

    ``scores[i][j]`` is the clipped n-gram overlap between the i-th
    generated and j-th reference slot, forced to zero outside the band
    ``|i - j| <= 1``.  ``gen_total`` / ``ref_total`` count all n-grams over
    the present updates on each side.
    """

    scores: tuple[tuple[int, ...], ...]
    gen_minutes: tuple[int, ...]
    ref_minutes: tuple[int, ...]
    gen_total: int = 0
    ref_total: int = 0

    def __post_init__(self) -> None:
        for i, row in enumerate(self.scores):
            for j, value in enumerate(row):
                if value < 0:
                    raise ValueError(f"negative score at ({i}, {j})")
                if value and abs(i - j) > 1:
                    raise ValueError(f"nonzero score outside the band at ({i}, {j})")

    @property
    def shape(self) -> tuple[int, int]:
        rows = len(self.scores)
        return rows, len(self.scores[0]) if rows else 0


@dataclass(frozen=True)
class AlignmentResult:
    """Optimal matching: total aligned n-grams plus the chosen index pairs.

    ``pairs`` lists the matched (generated, reference) indices in
    increasing order; pairs that would contribute zero overlap are omitted,
    so ``aligned == sum of scores over pairs`` always holds.
    """

    aligned: int
    pairs: tuple[tuple[int, int], ...]
    gen_total: int
    ref_total: int


def _gram_counters(timeline: Timeline, cfg: TokenizerConfig) -> list[Counter]:
    return [
        ngram_multiset(tokenize(u.text, cfg), cfg.ngram_n) if u.text is not None else Counter()
        for u in timeline.entries
    ]


def build_score_matrix(
    generated: Timeline,
    reference: Timeline,
    cfg: Optional[TokenizerConfig] = None,
) -> ScoreMatrix:
    """Score every in-band (generated, reference) slot pair.

    Both timelines must cover the same minute span; the pipeline
    guarantees this for its own output.
    """
    cfg = cfg or TokenizerConfig()
    if (
        generated.start_minute != reference.start_minute
        or len(generated.entries) != len(reference.entries)
    ):
        raise SpanMismatch(
            f"generated span [{generated.start_minute}, {generated.end_minute}] vs "
            f"reference span [{reference.start_minute}, {reference.end_minute}]"
        )
    gen_grams = _gram_counters(generated, cfg)
    ref_grams = _gram_counters(reference, cfg)
    size = len(gen_grams)
    scores = tuple(
        tuple(
            overlap(gen_grams[i], ref_grams[j]) if abs(i - j) <= 1 else 0
            for j in range(size)
        )
        for i in range(size)
    )
    return ScoreMatrix(
        scores=scores,
        gen_minutes=tuple(generated.minutes()),
        ref_minutes=tuple(reference.minutes()),
        gen_total=sum(c.total() for c in gen_grams),
        ref_total=sum(c.total() for c in ref_grams),
    )


def align(matrix: ScoreMatrix) -> AlignmentResult:
    """Maximum-weight monotone one-to-one matching by dynamic programming.

    Recurrence: D[i][j] = max(D[i-1][j], D[i][j-1], D[i-1][j-1] + s[i][j]).
    Backtracking prefers the diagonal move on ties, then skipping the
    generated update; the total is tie-invariant, only the pair list could
    differ under another order.
    """
    s = matrix.scores
    m, n = matrix.shape
    d = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        row = d[i]
        above = d[i - 1]
        srow = s[i - 1]
        for j in range(1, n + 1):
            row[j] = max(above[j], row[j - 1], above[j - 1] + srow[j - 1])

    pairs: list[tuple[int, int]] = []
    i, j = m, n
    while i > 0 and j > 0:
        if d[i][j] == d[i - 1][j - 1] + s[i - 1][j - 1]:
            if s[i - 1][j - 1] > 0:
                pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif d[i][j] == d[i - 1][j]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return AlignmentResult(
        aligned=d[m][n],
        pairs=tuple(pairs),
        gen_total=matrix.gen_total,
        ref_total=matrix.ref_total,
    )


def brute_force_align(matrix: ScoreMatrix, max_dim: int = 8) -> int:
    """Exhaustive oracle for :func:`align`, independent of the recurrence.

    Every monotone one-to-one matching is the zip of an increasing row
    subset with an equally sized increasing column subset, so enumerating
    those subsets enumerates all matchings.  Exponential; refuses matrices
    larger than ``max_dim`` per side.
    """
    s = matrix.scores
    m, n = matrix.shape
    if m > max_dim or n > max_dim:
        raise MatrixTooLarge(f"{m}x{n} exceeds the {max_dim}x{max_dim} enumeration cap")
    best = 0
    for k in range(1, min(m, n) + 1):
        for rows in combinations(range(m), k):
            for cols in combinations(range(n), k):
                total = sum(s[i][j] for i, j in zip(rows, cols))
                if total > best:
                    best = total
    return best


def prf(aligned: int, gen_total: int, ref_total: int) -> tuple[float, float, float]:
    """Precision, recall, F1 of an aligned count over the side totals.

    Zero denominators give zero scores rather than errors.
    """
    precision = aligned / gen_total if gen_total else 0.0
    recall = aligned / ref_total if ref_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate_timelines(
    generated: Timeline,
    reference: Timeline,
    cfg: Optional[TokenizerConfig] = None,
    match_id: str = "",
) -> dict:
    """One match's evaluation report (see README for the schema)."""
    cfg = cfg or TokenizerConfig()
    result = align(build_score_matrix(generated, reference, cfg))
    precision, recall, f1 = prf(result.aligned, result.gen_total, result.ref_total)
    return {
        "match_id": match_id,
        "n": cfg.ngram_n,
        "gen_total": result.gen_total,
        "ref_total": result.ref_total,
        "aligned": result.aligned,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "pairs": [list(p) for p in result.pairs],
    }


def micro_average(reports: Iterable[dict]) -> dict:
    """Corpus scores: sum the counts across matches, then take ratios."""
    gen_total = ref_total = aligned = 0
    for report in reports:
        gen_total += report["gen_total"]
        ref_total += report["ref_total"]
        aligned += report["aligned"]
    precision, recall, f1 = prf(aligned, gen_total, ref_total)
    return {
        "gen_total": gen_total,
        "ref_total": ref_total,
        "aligned": aligned,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }
