"""Deterministic generator for a small artificial pronunciation lexicon.

Words are built from CV(C) syllables with an optional two-letter prefix
("be"/"ge"), one to three stem syllables whose last may carry an "n"/"ng"
coda, and an optional suffix ("a", "s", "ing", "ed").  The spelling system
has four digraphs (sh, ng, ee, oo) whose continuation letters map to the
phonemic null, plus context-dependent rules: soft g before e/i, voiced s
between vowels, and single vowels lengthened before the sonorants l and m.

Primary stress falls on the first syllable; vowel-initial "-ing"/"-ed"
endings attract secondary stress on the suffix syllable.

Every pronunciation and stress decision reads at most three letters of
context around the focus position, so the combined phoneme-plus-stress
labelling of any position is a function of its seven-letter window.  That
makes the combined task exactly learnable from windowed instances, while
morphological boundaries stay mildly ambiguous (a stem may begin with the
same letters as a prefix), which is what a modular pipeline has to cope
with.
"""

from __future__ import annotations

import random
from typing import Sequence

from .lexicon import PHONEME_NULL, AlignedEntry

VOWEL_LETTERS = frozenset("aeiou")
CONSONANT_LETTERS = frozenset("bdghklmnst")

ONSETS = ("b", "d", "g", "k", "l", "m", "n", "s", "t", "sh")
_ONSET_WEIGHTS = (4, 4, 3, 4, 3, 3, 2, 3, 4, 2)
NUCLEI = ("a", "e", "i", "o", "u", "ee", "oo")
_NUCLEUS_WEIGHTS = (4, 4, 3, 3, 2, 1, 1)
CODAS = (None, "n", "ng")
_CODA_WEIGHTS = (12, 5, 3)
PREFIXES = (None, "be", "ge")
_PREFIX_WEIGHTS = (72, 14, 14)
SUFFIXES = (None, "a", "s", "ing", "ed")
_SUFFIX_WEIGHTS = (40, 12, 14, 22, 12)
_SYLLABLE_COUNTS = (1, 2, 3)
_SYLLABLE_COUNT_WEIGHTS = (30, 45, 25)

DIGRAPHS = frozenset({"sh", "ng", "ee", "oo"})

_LONG_VOWEL = {"a": "ey", "e": "iy", "i": "ay", "o": "ow", "u": "yu"}
_DIGRAPH_VOWEL = {"e": "iy", "o": "uw"}
_LENGTHENERS = frozenset({"l", "m"})


def letter_phoneme(letters: Sequence[str], i: int) -> str:
    """Phoneme of letter i, decided from at most letters i-1 and i+1."""
    c = letters[i]
    prev = letters[i - 1] if i > 0 else None
    nxt = letters[i + 1] if i + 1 < len(letters) else None

    # Digraph continuation letters carry no phoneme of their own.
    if c == "h":
        return PHONEME_NULL
    if c == "g" and prev == "n":
        return PHONEME_NULL
    if c == "e" and prev == "e":
        return PHONEME_NULL
    if c == "o" and prev == "o":
        return PHONEME_NULL
    # Digraph heads.
    if c == "s" and nxt == "h":
        return "S"
    if c == "n" and nxt == "g":
        return "N"
    if c in _DIGRAPH_VOWEL and nxt == c:
        return _DIGRAPH_VOWEL[c]
    # Context-conditioned consonants.
    if c == "g":
        return "J" if nxt in ("e", "i") else "g"
    if c == "s":
        return "z" if (prev in VOWEL_LETTERS and nxt in VOWEL_LETTERS) else "s"
    # Single vowels lengthen before sonorants.
    if c in VOWEL_LETTERS:
        if nxt in _LENGTHENERS:
            return _LONG_VOWEL[c]
        return c
    return c


def letter_stress(letters: Sequence[str], i: int) -> int:
    """Stress marker of position i, decided from the surrounding window."""
    n = len(letters)
    if i == 0:
        return 1
    if letters[i - 1] in VOWEL_LETTERS:
        if i == n - 3 and "".join(letters[i:]) == "ing":
            return 2
        if i == n - 2 and "".join(letters[i:]) == "ed":
            return 2
    return 0


def grapheme_flags(letters: Sequence[str]) -> tuple[bool, ...]:
    """Grapheme-initial flags from a greedy left-to-right digraph parse."""
    flags = [False] * len(letters)
    i = 0
    while i < len(letters):
        flags[i] = True
        if "".join(letters[i : i + 2]) in DIGRAPHS:
            i += 2
        else:
            i += 1
    return tuple(flags)


def _draw_structure(rng: random.Random) -> tuple[str | None, list[tuple[str, str, str | None]], str | None]:
    prefix = rng.choices(PREFIXES, _PREFIX_WEIGHTS)[0]
    n_syllables = rng.choices(_SYLLABLE_COUNTS, _SYLLABLE_COUNT_WEIGHTS)[0]
    syllables = []
    for j in range(n_syllables):
        onset = rng.choices(ONSETS, _ONSET_WEIGHTS)[0]
        nucleus = rng.choices(NUCLEI, _NUCLEUS_WEIGHTS)[0]
        coda = rng.choices(CODAS, _CODA_WEIGHTS)[0] if j == n_syllables - 1 else None
        syllables.append((onset, nucleus, coda))
    suffix = rng.choices(SUFFIXES, _SUFFIX_WEIGHTS)[0]
    return prefix, syllables, suffix


def _assemble(
    prefix: str | None,
    syllables: list[tuple[str, str, str | None]],
    suffix: str | None,
) -> AlignedEntry | None:
    stem = "".join(onset + nucleus + (coda or "") for onset, nucleus, coda in syllables)
    # An "ed" suffix after a stem-final "e" would spell a spurious "ee" digraph.
    if suffix == "ed" and stem.endswith("e"):
        return None

    word = (prefix or "") + stem + (suffix or "")
    letters = tuple(word)

    syllable_starts = set()
    morph_starts = {0}
    pos = 0
    if prefix:
        syllable_starts.add(0)
        pos = len(prefix)
        morph_starts.add(pos)
    for onset, nucleus, coda in syllables:
        syllable_starts.add(pos)
        pos += len(onset) + len(nucleus) + len(coda or "")
    if suffix:
        morph_starts.add(pos)
        if suffix != "s":
            syllable_starts.add(pos)

    phonemes = tuple(letter_phoneme(letters, i) for i in range(len(letters)))
    stress = tuple(letter_stress(letters, i) for i in range(len(letters)))
    return AlignedEntry(
        letters=letters,
        phonemes=phonemes,
        morph_initial=tuple(i in morph_starts for i in range(len(letters))),
        grapheme_initial=grapheme_flags(letters),
        syllable_initial=tuple(i in syllable_starts for i in range(len(letters))),
        stress=stress,
    )


def generate_toy_lexicon(seed: int, words: int) -> list[AlignedEntry]:
    """Generate a deterministic lexicon of unique, fully annotated words."""
    if words < 1:
        raise ValueError("word count must be >= 1")
    rng = random.Random(seed)
    entries: list[AlignedEntry] = []
    seen: set[str] = set()
    while len(entries) < words:
        entry = _assemble(*_draw_structure(rng))
        if entry is None or entry.word in seen:
            continue
        seen.add(entry.word)
        entries.append(entry)
    return entries
