"""Reading and writing transcripts (TSV, per-speaker SRT) and JSON reports."""

from __future__ import annotations

import enum
import json
import logging
import re
import sys
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import IO, Any, Iterable, Sequence

from tuqa.model import TimeInterval, Transcript, TranscriptError, TranscriptionUnit

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
TSV_HEADER = ("speaker", "start", "end", "transcription")

# Top-level report keys, in serialization order.
REPORT_KEYS = (
    "schema_version",
    "command",
    "inputs",
    "window",
    "wer",
    "counts",
    "uncertain_included",
    "summary",
    "per_minute",
    "deltas",
    "delta_convention",
    "delta_origin_s",
    "alignment",
    "validation_issues",
    "overlap_issues",
    "overlap_summary",
    "mismatches",
    "mismatch_summary",
    "notes",
    "generated_at",
)


class ParseError(ValueError):
    """Malformed input file; the message names the file and line or cue."""


class Origin(enum.Enum):
    TSV = "tsv"
    SRT_SET = "srt"
    ASR_RAW = "asr"


@dataclass(frozen=True)
class TranscriptDocument:
    transcript: Transcript
    origin: Origin
    paths: tuple[str, ...]

    def describe(self) -> dict:
        return {"origin": self.origin.value, "paths": list(self.paths)}


@dataclass(frozen=True)
class SrtCue:
    index: int
    interval: TimeInterval
    text: str


# -- numbers ------------------------------------------------------------------

def round2(x: float) -> float:
    """Round half away from zero to two decimals, on the shortest decimal repr of ``x``."""
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)) + 0.0


def format_seconds(x: float) -> str:
    """Centiseconds when exact, milliseconds otherwise."""
    ms = round(x * 1000)
    if ms % 10 == 0:
        return f"{ms // 1000}.{(ms % 1000) // 10:02d}"
    return f"{ms // 1000}.{ms % 1000:03d}"


def _parse_seconds(s: str, where: str) -> float:
    try:
        v = float(s.strip().replace(",", "."))
    except ValueError:
        raise ParseError(f"{where}: not a number: {s!r}") from None
    return round(v, 3)


# -- TSV ------------------------------------------------------------------------

def _looks_like_header(cols: Sequence[str]) -> bool:
    try:
        float(cols[1].replace(",", "."))
    except (ValueError, IndexError):
        return True
    return False


def parse_tsv(text: str, label: str = "<tsv>") -> Transcript:
    units = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\r")
        if lineno == 1:
            line = line.lstrip("﻿")
        if not line.strip():
            continue
        cols = line.split("\t")
        if lineno == 1 and _looks_like_header(cols):
            continue
        where = f"{label}:{lineno}"
        if len(cols) == 3:
            cols.append("")
        if len(cols) != 4:
            raise ParseError(f"{where}: expected 4 tab-separated columns, got {len(cols)}")
        speaker, start, end, text_ = cols
        s, e = _parse_seconds(start, where), _parse_seconds(end, where)
        if s > e:
            raise ParseError(f"{where}: start {start} is after end {end}")
        try:
            units.append(TranscriptionUnit(speaker.strip(), TimeInterval(s, e), text_))
        except TranscriptError as exc:
            raise ParseError(f"{where}: {exc}") from None
    if not units:
        log.warning("%s: no transcription units", label)
    return Transcript(tuple(units), source_label=label)


def read_tsv(path: str | Path) -> TranscriptDocument:
    """Read a speaker/start/end/transcription TSV; a header row is optional."""
    path = str(path)
    if path == "-":
        text = sys.stdin.read()
    else:
        text = Path(path).read_text(encoding="utf-8")
    return TranscriptDocument(parse_tsv(text, path), Origin.TSV, (path,))


def format_tsv(t: Transcript) -> str:
    lines = ["\t".join(TSV_HEADER)]
    for tu in t.units:
        lines.append(f"{tu.speaker}\t{format_seconds(tu.start)}\t{format_seconds(tu.end)}\t{tu.raw_text}")
    return "\n".join(lines) + "\n"


def write_tsv(doc: TranscriptDocument | Transcript, path: str | Path | IO[str]) -> None:
    t = doc.transcript if isinstance(doc, TranscriptDocument) else doc
    _write_text(format_tsv(t), path)


def _write_text(text: str, dest: str | Path | IO[str]) -> None:
    if hasattr(dest, "write"):
        dest.write(text)
    elif str(dest) == "-":
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# -- SRT ------------------------------------------------------------------------

_TIMESTAMP = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d)[,.](\d{3})$")


def parse_timestamp(s: str) -> float:
    """``"00:00:03,140"`` -> 3.14"""
    m = _TIMESTAMP.match(s.strip())
    if not m:
        raise ValueError(f"malformed SRT timestamp {s!r}")
    h, mnt, sec, ms = (int(g) for g in m.groups())
    return (h * 3_600_000 + mnt * 60_000 + sec * 1000 + ms) / 1000


def format_timestamp(seconds: float) -> str:
    ms = round(seconds * 1000)
    h, rest = divmod(ms, 3_600_000)
    m, rest = divmod(rest, 60_000)
    s, ms = divmod(rest, 1000)
    return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


def parse_srt(text: str, label: str = "<srt>") -> list[SrtCue]:
    cues: list[SrtCue] = []
    text = text.lstrip("﻿").replace("\r\n", "\n").replace("\r", "\n")
    blocks = re.split(r"\n\s*\n", text.strip())
    for block in blocks:
        lines = [ln.strip() for ln in block.split("\n")]
        if not lines or not lines[0]:
            continue
        try:
            index = int(lines[0])
        except ValueError:
            raise ParseError(f"{label}: expected cue index, got {lines[0]!r}") from None
        if len(lines) < 2 or "-->" not in lines[1]:
            raise ParseError(f"{label}: cue {index}: missing timing line")
        left, _, right = lines[1].partition("-->")
        try:
            start, end = parse_timestamp(left), parse_timestamp(right.split()[0] if right.split() else "")
        except ValueError as exc:
            raise ParseError(f"{label}: cue {index}: {exc}") from None
        if start > end:
            raise ParseError(f"{label}: cue {index}: start after end")
        if cues and index <= cues[-1].index:
            raise ParseError(f"{label}: cue {index}: index not increasing (previous {cues[-1].index})")
        body = " ".join(ln for ln in lines[2:] if ln)
        cues.append(SrtCue(index, TimeInterval(start, end), body))
    return cues


def format_srt(cues: Iterable[SrtCue]) -> str:
    blocks = []
    for cue in cues:
        blocks.append(
            f"{cue.index}\n{format_timestamp(cue.interval.start)} --> {format_timestamp(cue.interval.end)}\n{cue.text}\n"
        )
    return "\n".join(blocks)


def read_srt(path: str | Path, speaker: str | None = None) -> list[TranscriptionUnit]:
    path = Path(path)
    speaker = speaker or path.stem
    cues = parse_srt(path.read_text(encoding="utf-8"), str(path))
    return [TranscriptionUnit(speaker, c.interval, re.sub(r"\s+", " ", c.text).strip()) for c in cues]


def read_srt_set(paths: Iterable[str | Path]) -> TranscriptDocument:
    """Merge one SRT file per speaker; the speaker is the file name stem."""
    paths = [Path(p) for p in paths]
    stems = [p.stem for p in paths]
    dupes = sorted({s for s in stems if stems.count(s) > 1})
    if dupes:
        raise ParseError(f"duplicate speaker file stems: {', '.join(dupes)}")
    units: list[TranscriptionUnit] = []
    for p in paths:
        units.extend(read_srt(p))
    label = ",".join(str(p) for p in paths)
    return TranscriptDocument(Transcript(tuple(units), source_label=label), Origin.SRT_SET, tuple(map(str, paths)))


def read_asr(path: str | Path, speaker: str = "ASR") -> TranscriptDocument:
    """Undiarized ASR output, stored as SRT or TSV, read as a single speaker."""
    p = str(path)
    if p.lower().endswith(".srt"):
        units = read_srt(p, speaker)
        t = Transcript(tuple(units), source_label=p)
    else:
        t = read_tsv(p).transcript
        t = t.with_units(TranscriptionUnit(speaker, tu.interval, tu.raw_text) for tu in t.units)
    return TranscriptDocument(t, Origin.ASR_RAW, (p,))


def read_transcript(path: str | Path) -> TranscriptDocument:
    """Dispatch on extension: ``.srt`` (single file) or TSV otherwise."""
    if str(path).lower().endswith(".srt"):
        return read_srt_set([path])
    return read_tsv(path)


# -- reports --------------------------------------------------------------------

def _round_floats(obj: Any) -> Any:
    if isinstance(obj, float):
        return round2(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def order_report(report: dict) -> dict:
    out = {"schema_version": report.get("schema_version", SCHEMA_VERSION)}
    for key in REPORT_KEYS[1:]:
        if key in report:
            out[key] = report[key]
    for key in sorted(set(report) - set(out)):
        out[key] = report[key]
    return out


def dumps_report(report: dict) -> str:
    """Fixed key order, every float rounded to two decimals."""
    return json.dumps(_round_floats(order_report(report)), ensure_ascii=False, indent=2) + "\n"


def write_report_json(report: dict, dest: str | Path | IO[str]) -> None:
    _write_text(dumps_report(report), dest)
