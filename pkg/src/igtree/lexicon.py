"""Aligned pronunciation lexicon: file format, task labelings, and windowing.

A lexicon entry holds one word with per-letter aligned phonemes (using the
phonemic null "-" for letters that add no phoneme) and per-position
annotations: morpheme-initial flags, grapheme-initial flags,
syllable-initial flags, and stress markers in {0, 1, 2}.

Each labelling task turns an entry into one classification instance per
position, built from a 7-symbol window (three context symbols each side of
the focus, padded with "_" beyond the word edges).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

from .tree import PAD, LabeledInstance

PHONEME_NULL = "-"

# Canonical order in which boundary annotations are appended to composite
# stream tokens; fixed so that the encoding is reproducible and lossless.
ANNOTATION_ORDER = ("morph", "grapheme", "syllable")

_COMPOSITE_SEP = "|"


class LexiconFormatError(ValueError):
    """Raised for malformed lexicon input; the message names the line."""


class Task(Enum):
    """The classification tasks defined over an aligned entry.

    M: is the focus letter morpheme-initial (classes 0/1).
    A: is the focus letter grapheme-initial (classes 0/1).
    G: phoneme of the focus letter, phonemic null included.
    Y: is the focus position syllable-initial (classes 0/1).
    S: stress marker of the focus position (classes 0/1/2); run over either
       letter or phoneme windows depending on the consuming system.
    GS: phoneme and stress marker combined into one composite class.
    """

    M = "M"
    A = "A"
    G = "G"
    Y = "Y"
    S = "S"
    GS = "GS"


def join_ps(phoneme: str, stress: int) -> str:
    """Render a (phoneme, stress) pair as one composite class token."""
    return f"{phoneme}{stress}"


def split_ps(token: str) -> tuple[str, int]:
    """Split a composite class token back into (phoneme, stress).

    The stress marker is always the final character, so any token produced
    by :func:`join_ps` splits exactly.
    """
    if not token or token[-1] not in "012":
        raise ValueError(f"not a phoneme+stress composite token: {token!r}")
    return token[:-1], int(token[-1])


@dataclass(frozen=True)
class AlignedEntry:
    """One lexicon word with letter-aligned phonemes and annotations."""

    letters: tuple[str, ...]
    phonemes: tuple[str, ...]
    morph_initial: tuple[bool, ...]
    grapheme_initial: tuple[bool, ...]
    syllable_initial: tuple[bool, ...]
    stress: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.letters)
        if n < 1:
            raise ValueError("entry must have at least one letter")
        for name in ("phonemes", "morph_initial", "grapheme_initial", "syllable_initial", "stress"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length != letter count for word {self.word!r}")
        for letter in self.letters:
            _check_symbol(letter, "letter")
            if len(letter) != 1:
                raise ValueError(f"letters must be single characters, got {letter!r}")
        for phoneme in self.phonemes:
            _check_symbol(phoneme, "phoneme")
        for s in self.stress:
            if s not in (0, 1, 2):
                raise ValueError(f"stress marker must be 0, 1 or 2, got {s!r}")
        for i, s in enumerate(self.stress):
            if s != 0 and not self.syllable_initial[i]:
                raise ValueError(
                    f"word {self.word!r}: stress {s} at position {i} which is not syllable-initial"
                )
        if not self.morph_initial[0]:
            raise ValueError(f"word {self.word!r}: first letter must be morpheme-initial")
        if not self.grapheme_initial[0]:
            raise ValueError(f"word {self.word!r}: first letter must be grapheme-initial")
        for i, flag in enumerate(self.grapheme_initial):
            if flag and self.phonemes[i] == PHONEME_NULL:
                raise ValueError(
                    f"word {self.word!r}: grapheme-initial position {i} aligned to a phonemic null"
                )

    @property
    def word(self) -> str:
        return "".join(self.letters)

    def __len__(self) -> int:
        return len(self.letters)


def _check_symbol(token: str, kind: str) -> None:
    if not token:
        raise ValueError(f"empty {kind} token")
    if token == PAD:
        raise ValueError(f"{kind} token may not be the padding symbol {PAD!r}")
    for bad in ("\t", "\n", " ", _COMPOSITE_SEP):
        if bad in token:
            raise ValueError(f"{kind} token contains forbidden character {bad!r}: {token!r}")


def _parse_flags(text: str, column: str, n: int, where: str) -> tuple[bool, ...]:
    if len(text) != n or any(c not in "01" for c in text):
        raise LexiconFormatError(f"{where}: {column} column must be {n} characters of 0/1, got {text!r}")
    return tuple(c == "1" for c in text)


def parse_lexicon(source: Iterable[str] | TextIO, name: str = "<lexicon>") -> list[AlignedEntry]:
    """Parse the tab-separated lexicon format into validated entries.

    One word per line, six tab-separated columns: contiguous word letters;
    space-separated aligned phonemes ("-" for the phonemic null); morpheme
    flags as a 0/1 string; grapheme flags; syllable flags; and a stress
    string over {0,1,2}.  All columns must match the letter count.  Lines
    starting with "#" are comments.  Duplicate words and malformed lines
    raise :class:`LexiconFormatError` naming the offending line.
    """
    entries: list[AlignedEntry] = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        where = f"{name}:{lineno}"
        columns = line.split("\t")
        if len(columns) != 6:
            raise LexiconFormatError(f"{where}: expected 6 tab-separated columns, got {len(columns)}")
        word, phoneme_col, morph_col, graph_col, syll_col, stress_col = columns
        letters = tuple(word)
        n = len(letters)
        if n == 0:
            raise LexiconFormatError(f"{where}: empty word")
        phonemes = tuple(phoneme_col.split(" ")) if phoneme_col else ()
        if len(phonemes) != n:
            raise LexiconFormatError(
                f"{where}: {len(phonemes)} phonemes for {n} letters (aligned lengths must match)"
            )
        morph = _parse_flags(morph_col, "morpheme-flag", n, where)
        graph = _parse_flags(graph_col, "grapheme-flag", n, where)
        syll = _parse_flags(syll_col, "syllable-flag", n, where)
        if len(stress_col) != n or any(c not in "012" for c in stress_col):
            raise LexiconFormatError(
                f"{where}: stress column must be {n} characters over 0/1/2, got {stress_col!r}"
            )
        stress = tuple(int(c) for c in stress_col)
        if word in seen:
            raise LexiconFormatError(
                f"{where}: duplicate word {word!r} (first seen on line {seen[word]})"
            )
        seen[word] = lineno
        try:
            entry = AlignedEntry(letters, phonemes, morph, graph, syll, stress)
        except ValueError as exc:
            raise LexiconFormatError(f"{where}: {exc}") from exc
        entries.append(entry)
    if not entries:
        raise LexiconFormatError(f"{name}: empty lexicon")
    return entries


def format_entry(entry: AlignedEntry) -> str:
    """Render an entry as one lexicon line (inverse of parsing)."""
    return "\t".join(
        (
            entry.word,
            " ".join(entry.phonemes),
            "".join("1" if f else "0" for f in entry.morph_initial),
            "".join("1" if f else "0" for f in entry.grapheme_initial),
            "".join("1" if f else "0" for f in entry.syllable_initial),
            "".join(str(s) for s in entry.stress),
        )
    )


def write_lexicon(entries: Sequence[AlignedEntry], fp: TextIO) -> None:
    fp.write("# word\tphonemes\tmorph\tgrapheme\tsyllable\tstress\n")
    for entry in entries:
        fp.write(format_entry(entry) + "\n")


def position_class(entry: AlignedEntry, i: int, task: Task) -> str:
    """Class token of the given task at position i of an entry."""
    if not 0 <= i < len(entry):
        raise ValueError(f"position {i} out of range for word {entry.word!r}")
    if task is Task.M:
        return "1" if entry.morph_initial[i] else "0"
    if task is Task.A:
        return "1" if entry.grapheme_initial[i] else "0"
    if task is Task.G:
        return entry.phonemes[i]
    if task is Task.Y:
        return "1" if entry.syllable_initial[i] else "0"
    if task is Task.S:
        return str(entry.stress[i])
    if task is Task.GS:
        return join_ps(entry.phonemes[i], entry.stress[i])
    raise ValueError(f"unknown task {task!r}")


def task_classes(entry: AlignedEntry, task: Task) -> tuple[str, ...]:
    return tuple(position_class(entry, i, task) for i in range(len(entry)))


@dataclass(frozen=True)
class WindowSpec:
    """Fixed-width window: context size each side of the focus position."""

    left: int = 3
    right: int = 3

    @property
    def arity(self) -> int:
        return self.left + 1 + self.right


@dataclass(frozen=True)
class StreamSpec:
    """Input stream of a task: a base stream plus merged boundary annotations.

    ``base`` is "letters" or "phonemes"; ``annotations`` is a subset of
    {"morph", "grapheme", "syllable"}.  Annotations are folded into the
    per-position tokens rather than widening the window, so the arity of
    every task stays the same.
    """

    base: str
    annotations: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.base not in ("letters", "phonemes"):
            raise ValueError(f"base stream must be 'letters' or 'phonemes', got {self.base!r}")
        unknown = set(self.annotations) - set(ANNOTATION_ORDER)
        if unknown:
            raise ValueError(f"unknown annotations: {sorted(unknown)}")
        canonical = tuple(a for a in ANNOTATION_ORDER if a in self.annotations)
        if canonical != self.annotations:
            object.__setattr__(self, "annotations", canonical)


def composite_tokens(
    base_tokens: Sequence[str],
    annotations: Mapping[str, Sequence[bool]],
    include: Sequence[str],
) -> tuple[str, ...]:
    """Merge boundary flags into per-position composite tokens.

    Each token becomes ``base|bits`` where ``bits`` holds one 0/1 character
    per included annotation, in canonical order.  With no annotations the
    base tokens pass through unchanged.  The encoding is lossless: both the
    base token and every flag are recoverable with :func:`split_composite`.
    """
    names = tuple(a for a in ANNOTATION_ORDER if a in include)
    if not names:
        return tuple(base_tokens)
    flag_seqs = []
    for a in names:
        flags = annotations[a]
        if len(flags) != len(base_tokens):
            raise ValueError(f"annotation {a!r} length {len(flags)} != stream length {len(base_tokens)}")
        flag_seqs.append(flags)
    out = []
    for i, token in enumerate(base_tokens):
        bits = "".join("1" if seq[i] else "0" for seq in flag_seqs)
        out.append(f"{token}{_COMPOSITE_SEP}{bits}")
    return tuple(out)


def split_composite(token: str, include: Sequence[str]) -> tuple[str, dict[str, bool]]:
    """Recover the base token and annotation flags from a composite token."""
    names = tuple(a for a in ANNOTATION_ORDER if a in include)
    if not names:
        return token, {}
    base, _, bits = token.rpartition(_COMPOSITE_SEP)
    if len(bits) != len(names) or not base:
        raise ValueError(f"malformed composite token {token!r} for annotations {names}")
    return base, {a: bit == "1" for a, bit in zip(names, bits)}


def windows(tokens: Sequence[str], spec: WindowSpec = WindowSpec()) -> list[tuple[str, ...]]:
    """All fixed-width windows over a token sequence, one per position."""
    padded = (PAD,) * spec.left + tuple(tokens) + (PAD,) * spec.right
    width = spec.arity
    return [padded[i : i + width] for i in range(len(tokens))]


def entry_streams(entry: AlignedEntry) -> dict[str, tuple]:
    """Reference per-position streams of an entry, keyed by stream name."""
    return {
        "letters": entry.letters,
        "phonemes": entry.phonemes,
        "morph": entry.morph_initial,
        "grapheme": entry.grapheme_initial,
        "syllable": entry.syllable_initial,
    }


def window_instances(
    entry: AlignedEntry,
    task: Task,
    stream: StreamSpec,
    streams: Mapping[str, Sequence] | None = None,
    window: WindowSpec = WindowSpec(),
) -> list[LabeledInstance]:
    """Windowed training instances of one entry for the given task.

    Produces exactly ``len(entry)`` instances.  ``streams`` can replace the
    entry's own annotation or phoneme streams (e.g. with predicted values);
    classes always come from the entry's reference labelling.
    """
    available = dict(entry_streams(entry))
    if streams:
        available.update(streams)
    tokens = composite_tokens(available[stream.base], available, stream.annotations)
    classes = task_classes(entry, task)
    return [
        LabeledInstance(features, cls)
        for features, cls in zip(windows(tokens, window), classes)
    ]
