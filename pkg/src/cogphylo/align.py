"""Sequence comparison primitives: edit distance and class-string alignment."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

GAP = "-"


class BothEmptyError(ValueError):
    """Normalized distance is undefined when both sequences are empty."""


def levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Minimum insertions/deletions/substitutions turning a into b.

    Operates on tokens, not characters, so multi-character IPA segments
    count as single units.
    """
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, token_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, token_b in enumerate(b, start=1):
            cost = 0 if token_a == token_b else 1
            current[j] = min(
                previous[j] + 1,        # delete from a
                current[j - 1] + 1,     # insert into a
                previous[j - 1] + cost, # substitute
            )
        previous = current
    return previous[len(b)]


def normalized_levenshtein(a: Sequence[str], b: Sequence[str]) -> float:
    """Edit distance scaled to [0, 1] by the longer sequence length."""
    if not a and not b:
        raise BothEmptyError("both sequences are empty")
    return levenshtein(a, b) / max(len(a), len(b))


@dataclass(frozen=True)
class ScoringScheme:
    """Alignment scoring: match/mismatch/gap plus an optional class-pair table."""

    match: float = 1.0
    mismatch: float = -1.0
    gap: float = -1.0
    table: dict[tuple[str, str], float] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if not (self.gap < 0.0 < self.match):
            raise ValueError("require gap < 0 < match")
        if self.table is not None:
            symmetric = dict(self.table)
            for (x, y), score in self.table.items():
                other = symmetric.get((y, x), score)
                if other != score:
                    raise ValueError(f"score table asymmetric for pair ({x}, {y})")
                symmetric[(y, x)] = score
            object.__setattr__(self, "table", symmetric)

    def score(self, x: str, y: str) -> float:
        if self.table is not None and (x, y) in self.table:
            return self.table[(x, y)]
        return self.match if x == y else self.mismatch


def load_scoring_scheme(
    path: str | Path, match: float = 1.0, mismatch: float = -1.0, gap: float = -1.0
) -> ScoringScheme:
    """Load a CLASS_A<TAB>CLASS_B<TAB>SCORE table on top of the base scheme."""
    table: dict[tuple[str, str], float] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle, delimiter="\t"), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 3:
                raise ValueError(f"{path}:{lineno}: expected CLASS_A<TAB>CLASS_B<TAB>SCORE")
            table[(row[0].strip(), row[1].strip())] = float(row[2])
    return ScoringScheme(match=match, mismatch=mismatch, gap=gap, table=table)


def nw_align(
    a: str, b: str, scheme: ScoringScheme | None = None
) -> tuple[tuple[str, str], float]:
    """Global alignment of two class strings, maximizing total score.

    Traceback ties are broken deterministically: diagonal over up over
    left. Returns the two gapped strings and the optimal score.
    """
    if not a or not b:
        raise ValueError("nw_align requires non-empty strings")
    scheme = scheme or ScoringScheme()
    n, m = len(a), len(b)
    score = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        score[i][0] = i * scheme.gap
    for j in range(1, m + 1):
        score[0][j] = j * scheme.gap
    for i in range(1, n + 1):
        row, prev = score[i], score[i - 1]
        for j in range(1, m + 1):
            row[j] = max(
                prev[j - 1] + scheme.score(a[i - 1], b[j - 1]),
                prev[j] + scheme.gap,
                row[j - 1] + scheme.gap,
            )
    aligned_a: list[str] = []
    aligned_b: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if (
            i > 0
            and j > 0
            and score[i][j] == score[i - 1][j - 1] + scheme.score(a[i - 1], b[j - 1])
        ):
            aligned_a.append(a[i - 1])
            aligned_b.append(b[j - 1])
            i -= 1
            j -= 1
        elif i > 0 and score[i][j] == score[i - 1][j] + scheme.gap:
            aligned_a.append(a[i - 1])
            aligned_b.append(GAP)
            i -= 1
        else:
            aligned_a.append(GAP)
            aligned_b.append(b[j - 1])
            j -= 1
    return ("".join(reversed(aligned_a)), "".join(reversed(aligned_b))), score[n][m]


def sca_distance(a: str, b: str, scheme: ScoringScheme | None = None) -> float:
    """Alignment-score distance 1 - 2*S(a,b) / (S(a,a) + S(b,b)), clamped to [0, 1]."""
    scheme = scheme or ScoringScheme()
    _, s_ab = nw_align(a, b, scheme)
    _, s_aa = nw_align(a, a, scheme)
    _, s_bb = nw_align(b, b, scheme)
    denom = s_aa + s_bb
    if denom <= 0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - 2.0 * s_ab / denom))
