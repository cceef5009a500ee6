"""Letter-to-phoneme alignment by dynamic programming.

Aligns a phoneme string to a longer-or-equal letter string under a
one-phoneme-per-letter model: every letter receives exactly one phoneme or
the phonemic null "-", preserving order.  The alignment maximises a simple
letter/phoneme compatibility score built from a seed table of common
letter-phoneme pairs (shipped as an editable data file) plus a
vowel/consonant agreement heuristic.  Among equally scoring alignments the
one matching each phoneme at the earliest possible letter wins, which puts
nulls on grapheme continuation letters (e.g. the second "o" of "booking")
rather than ahead of the phoneme they extend.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .lexicon import PHONEME_NULL

PAIR_SCORE = 3.0
CLASS_SCORE = 1.0
MISMATCH_SCORE = -1.0


class AlignmentError(ValueError):
    """Raised when no alignment exists under the one-per-letter model."""


@lru_cache(maxsize=1)
def _seed_table() -> tuple[dict[str, frozenset[str]], frozenset[str]]:
    data = json.loads(resources.files("igtree.data").joinpath("letter_phonemes.json").read_text("utf-8"))
    pairs = {letter: frozenset(phonemes) for letter, phonemes in data["pairs"].items()}
    vowel_prefixes = frozenset(data["vowel_phoneme_prefixes"])
    return pairs, vowel_prefixes


def _is_vowel_letter(letter: str) -> bool:
    return letter.lower() in "aeiouy"


def _is_vowel_phoneme(phoneme: str) -> bool:
    _, vowel_prefixes = _seed_table()
    return bool(phoneme) and phoneme[0] in vowel_prefixes


def compatibility(letter: str, phoneme: str) -> float:
    """Score for matching one letter with one phoneme."""
    pairs, _ = _seed_table()
    if phoneme in pairs.get(letter.lower(), ()):
        return PAIR_SCORE
    if _is_vowel_letter(letter) == _is_vowel_phoneme(phoneme):
        return CLASS_SCORE
    return MISMATCH_SCORE


def align(letters: Sequence[str], phonemes: Sequence[str]) -> tuple[str, ...]:
    """Aligned phoneme sequence, one per letter, with nulls inserted.

    Raises :class:`AlignmentError` when there are more phonemes than
    letters, which the one-per-letter model cannot express.
    """
    n, m = len(letters), len(phonemes)
    if n == 0:
        raise AlignmentError("cannot align: empty word")
    if m > n:
        raise AlignmentError(
            f"cannot align: {m} phonemes for {n} letters (at most one phoneme per letter)"
        )

    # best[i][j]: maximum score aligning letters[i:] with phonemes[j:].
    neg_inf = float("-inf")
    best = [[neg_inf] * (m + 1) for _ in range(n + 1)]
    best[n][m] = 0.0
    for i in range(n - 1, -1, -1):
        for j in range(m, -1, -1):
            score = neg_inf
            if j < m:
                score = compatibility(letters[i], phonemes[j]) + best[i + 1][j + 1]
            # A null here is only viable while enough letters remain for the
            # outstanding phonemes.
            if (n - i - 1) >= (m - j):
                score = max(score, best[i + 1][j])
            best[i][j] = score

    aligned: list[str] = []
    j = 0
    for i in range(n):
        # Prefer consuming the phoneme when scores tie, pushing nulls right.
        if j < m and compatibility(letters[i], phonemes[j]) + best[i + 1][j + 1] >= best[i][j]:
            aligned.append(phonemes[j])
            j += 1
        else:
            aligned.append(PHONEME_NULL)
    if j != m:
        raise AlignmentError(f"cannot align: {m - j} phonemes left unplaced")
    return tuple(aligned)
