"""Transcript data model: time intervals, transcription units, transcripts.

Everything here is immutable. Functions that "modify" a transcript return a
new one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable, Literal, Mapping

if TYPE_CHECKING:
    from tuqa.jefferson import Token


class TranscriptError(ValueError):
    """Raised when transcript data violates a model invariant."""


@dataclass(frozen=True, order=True)
class TimeInterval:
    start: float  # seconds
    end: float  # seconds

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise TranscriptError(f"non-finite interval bounds: {self.start}, {self.end}")
        if self.start < 0 or self.end < 0:
            raise TranscriptError(f"negative interval bounds: [{self.start}, {self.end}]")
        if self.start > self.end:
            raise TranscriptError(f"interval start {self.start} is after end {self.end}")

    def duration(self) -> float:
        return self.end - self.start

    def intersection(self, other: TimeInterval) -> float:
        """Length of the temporal intersection, 0.0 when disjoint or touching."""
        return max(0.0, min(self.end, other.end) - max(self.start, other.start))

    def intersects(self, other: TimeInterval) -> bool:
        """True when the two intervals share a stretch of nonzero length."""
        return min(self.end, other.end) > max(self.start, other.start)


def _check_speaker(speaker: str) -> None:
    if not speaker or not speaker.strip():
        raise TranscriptError("speaker id must be non-empty")
    if any(c in speaker for c in "\t\n\r"):
        raise TranscriptError(f"speaker id contains tab or newline: {speaker!r}")


@dataclass(frozen=True)
class TranscriptMeta:
    """Annotator metadata attached to a transcript."""

    transcriber: str
    expert: bool
    phase: str  # "manual" | "asr" | "gold"
    data: str  # conversation type, e.g. "free-conversation"

    @property
    def expertise(self) -> str:
        return "expert" if self.expert else "novice"


@dataclass(frozen=True)
class TranscriptionUnit:
    speaker: str
    interval: TimeInterval
    raw_text: str
    tokens: tuple[Token, ...] | None = None  # None until tokenized

    def __post_init__(self) -> None:
        _check_speaker(self.speaker)
        if any(c in self.raw_text for c in "\t\n\r"):
            raise TranscriptError(f"raw text contains tab or newline: {self.raw_text!r}")
        if self.tokens is not None and not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def start(self) -> float:
        return self.interval.start

    @property
    def end(self) -> float:
        return self.interval.end

    @property
    def duration(self) -> float:
        return self.interval.duration()

    def with_text(self, raw_text: str) -> TranscriptionUnit:
        return replace(self, raw_text=raw_text, tokens=None)

    def with_tokens(self, tokens: Iterable[Token]) -> TranscriptionUnit:
        return replace(self, tokens=tuple(tokens))


def _unit_sort_key(tu: TranscriptionUnit) -> tuple:
    # (start, speaker) is the documented order; the rest only makes it total.
    return (tu.start, tu.speaker, tu.end, tu.raw_text)


@dataclass(frozen=True)
class Transcript:
    """Speaker-attributed TUs, always kept sorted by (start, speaker)."""

    units: tuple[TranscriptionUnit, ...] = ()
    source_label: str = ""
    meta: TranscriptMeta | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "units", tuple(sorted(self.units, key=_unit_sort_key)))

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self):
        return iter(self.units)

    @property
    def speakers(self) -> list[str]:
        return sorted({tu.speaker for tu in self.units})

    @property
    def is_tokenized(self) -> bool:
        return all(tu.tokens is not None for tu in self.units)

    def span(self) -> TimeInterval:
        """[first TU start, last TU end]."""
        if not self.units:
            raise TranscriptError("empty transcript")
        return TimeInterval(self.units[0].start, max(tu.end for tu in self.units))

    def with_units(self, units: Iterable[TranscriptionUnit]) -> Transcript:
        return replace(self, units=tuple(units))

    def with_meta(self, meta: TranscriptMeta | None) -> Transcript:
        return replace(self, meta=meta)


def temporal_window(a: Transcript, b: Transcript) -> TimeInterval | None:
    """Time span covered by both transcripts, or None when they share no nonzero stretch.

    None is the empty-window marker accepted by :func:`slice_by_window`.
    """
    sa, sb = a.span(), b.span()
    start = max(sa.start, sb.start)
    end = min(sa.end, sb.end)
    if start >= end:
        return None
    return TimeInterval(start, end)


def slice_by_window(t: Transcript, w: TimeInterval | None) -> Transcript:
    """Keep the TUs having a nonzero-length intersection with ``w``."""
    if w is None:
        return t.with_units(())
    return t.with_units(tu for tu in t.units if tu.interval.intersects(w))


def flatten_tokens(
    t: Transcript, mode: Literal["merged", "per-speaker"] = "merged"
) -> list[Token] | dict[str, list[Token]]:
    """Linearize TU tokens in (start, speaker) order.

    ``merged`` returns a single list; ``per-speaker`` returns a dict mapping
    each speaker to its own list, TUs in start order.
    """
    if not t.is_tokenized:
        raise TranscriptError("transcript is not tokenized")
    if mode == "merged":
        return [tok for tu in t.units for tok in tu.tokens]
    if mode == "per-speaker":
        out: dict[str, list[Token]] = {}
        for tu in t.units:
            out.setdefault(tu.speaker, []).extend(tu.tokens)
        return out
    raise ValueError(f"unknown flatten mode: {mode!r}")


def build_transcript(
    rows: Iterable[tuple[str, float, float, str]],
    source_label: str = "",
    meta: TranscriptMeta | None = None,
) -> Transcript:
    """Convenience constructor from (speaker, start, end, text) rows."""
    units = [TranscriptionUnit(sp, TimeInterval(s, e), text) for sp, s, e, text in rows]
    return Transcript(tuple(units), source_label, meta)


def meta_from_mapping(m: Mapping[str, str]) -> TranscriptMeta:
    """Parse annotator metadata from a manifest-like mapping."""
    expertise = m["expertise"].strip().lower()
    if expertise not in ("expert", "novice", "yes", "no", "true", "false", "1", "0"):
        raise TranscriptError(f"unrecognised expertise value: {m['expertise']!r}")
    phase = m["phase"].strip().lower()
    if phase in ("asr-assisted", "asr_assisted"):
        phase = "asr"
    return TranscriptMeta(
        transcriber=m["transcriber"].strip(),
        expert=expertise in ("expert", "yes", "true", "1"),
        phase=phase,
        data=m["data"].strip(),
    )
