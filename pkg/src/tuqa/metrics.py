"""WER, per-minute statistics, deltas against gold, long-format export."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import IO, Iterable, Mapping, Sequence

from tuqa.align import Alignment, Counts
from tuqa.io import round2
from tuqa.jefferson import INTONATION, Feature, TokenKind, comparison_key, validate_markup
from tuqa.model import Transcript, TranscriptError

log = logging.getLogger(__name__)

DELTA_CONVENTION = "delta = candidate − gold"


@dataclass(frozen=True)
class WerReport:
    wer: float | None  # fraction; None when the reference is empty
    substitutions: int
    deletions: int
    insertions: int
    correct: int

    @property
    def n(self) -> int:
        return self.substitutions + self.deletions + self.correct

    @property
    def percent(self) -> float | None:
        return None if self.wer is None else 100.0 * self.wer

    def counts_dict(self) -> dict:
        return {"S": self.substitutions, "D": self.deletions, "I": self.insertions, "C": self.correct, "N": self.n}


def compute_wer(a: Alignment | Counts) -> WerReport:
    """(S + D + I) / N with N = S + D + C, the reference length."""
    c = a.counts if isinstance(a, Alignment) else a
    n = c.substitutions + c.deletions + c.correct
    if n == 0:
        log.warning("reference has no words; WER undefined")
        wer = None
    else:
        wer = (c.substitutions + c.deletions + c.insertions) / n
    return WerReport(wer, c.substitutions, c.deletions, c.insertions, c.correct)


@dataclass(frozen=True)
class PerMinuteStats:
    minute: int
    tu_count: int = 0
    tu_duration_s: float = 0.0  # summed duration of the TUs starting in this minute
    linguistic_tokens: int = 0
    total_tokens: int = 0  # linguistic + unintelligible + non-verbal; pauses excluded
    types: int = 0
    non_verbal_count: int = 0
    short_pause_count: int = 0
    unknown_count: int = 0
    uncertain_count: int = 0
    error_count: int = 0
    intonation_count: int = 0
    prolongation_count: int = 0
    overlap_token_count: int = 0

    @property
    def avg_tokens_per_tu(self) -> float | None:
        return self.linguistic_tokens / self.tu_count if self.tu_count else None

    @property
    def avg_tu_duration_s(self) -> float | None:
        return self.tu_duration_s / self.tu_count if self.tu_count else None

    def measures(self) -> dict[str, float | None]:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "minute"}
        d["avg_tokens_per_tu"] = self.avg_tokens_per_tu
        d["avg_tu_duration_s"] = self.avg_tu_duration_s
        return d

    def to_dict(self) -> dict:
        return {"minute": self.minute, **self.measures()}


MEASURES = tuple(PerMinuteStats(0).measures())


def _require_tokens(t: Transcript) -> None:
    if not t.is_tokenized:
        raise TranscriptError("transcript is not tokenized")


def per_minute_stats(t: Transcript, max_minutes: int | None = None, origin: float = 0.0) -> list[PerMinuteStats]:
    """Statistics over 60 s bins keyed by TU start time, counted from ``origin``.

    Empty bins up to the last occupied one are emitted as zeros. With
    ``max_minutes`` exactly that many bins are returned, truncated or
    zero-filled. TUs starting before ``origin`` are left out.
    """
    _require_tokens(t)
    units = [tu for tu in t.units if tu.start >= origin]
    if len(units) < len(t.units):
        log.info("%d TUs start before origin %.2f s and are not binned", len(t.units) - len(units), origin)
    if not units and max_minutes is None:
        return []
    last = max((int((tu.start - origin) // 60) for tu in units), default=-1)
    nbins = last + 1 if max_minutes is None else max_minutes
    acc = [dict.fromkeys(MEASURES[:13], 0) for _ in range(nbins)]
    for a in acc:
        a["tu_duration_s"] = 0.0
    type_sets: list[set[str]] = [set() for _ in range(nbins)]
    for tu in units:
        m = int((tu.start - origin) // 60)
        if m >= nbins:
            continue
        a = acc[m]
        a["tu_count"] += 1
        a["tu_duration_s"] += tu.duration
        a["error_count"] += len(validate_markup(tu.raw_text))
        for tok in tu.tokens:
            if tok.kind is TokenKind.SHORT_PAUSE:
                a["short_pause_count"] += 1
                continue
            a["total_tokens"] += 1
            if tok.is_alignable:
                # words, including unintelligible ones
                a["linguistic_tokens"] += 1
                type_sets[m].add(comparison_key(tok))
            if tok.kind is TokenKind.UNINTELLIGIBLE:
                a["unknown_count"] += 1
            elif tok.kind is TokenKind.NON_VERBAL:
                a["non_verbal_count"] += 1
            f = tok.features
            a["uncertain_count"] += Feature.UNCERTAIN in f
            a["intonation_count"] += bool(f & INTONATION)
            a["prolongation_count"] += Feature.PROLONGATION in f
            a["overlap_token_count"] += Feature.OVERLAP in f
    out = []
    for m, a in enumerate(acc):
        a["types"] = len(type_sets[m])
        out.append(PerMinuteStats(minute=m, **a))
    return out


@dataclass(frozen=True)
class SummaryStats:
    total_tus: int
    avg_tokens_per_tu: float | None
    avg_tu_duration_s: float | None
    tokens_per_min: float | None
    types_per_min: float | None
    linguistic_tokens: int = 0
    types: int = 0
    span_minutes: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def summary_stats(t: Transcript) -> SummaryStats:
    """Whole-transcript totals and averages.

    Per-minute rates divide by the transcribed span, (last TU end - first TU
    start) / 60.
    """
    _require_tokens(t)
    if not t.units:
        return SummaryStats(0, None, None, None, None)
    n_tus = len(t.units)
    ling = [tok for tu in t.units for tok in tu.tokens if tok.is_alignable]
    n_types = len({comparison_key(tok) for tok in ling})
    span = t.span()
    minutes = span.duration() / 60
    rate = (lambda x: x / minutes) if minutes > 0 else (lambda x: None)
    return SummaryStats(
        total_tus=n_tus,
        avg_tokens_per_tu=len(ling) / n_tus,
        avg_tu_duration_s=sum(tu.duration for tu in t.units) / n_tus,
        tokens_per_min=rate(len(ling)),
        types_per_min=rate(n_types),
        linguistic_tokens=len(ling),
        types=n_types,
        span_minutes=minutes,
    )


@dataclass(frozen=True)
class DeltaRow:
    measure: str
    minute: int
    delta: float | None  # full precision; rounded on output

    def to_dict(self) -> dict:
        return {"measure": self.measure, "minute": self.minute, "delta": None if self.delta is None else round2(self.delta)}


@dataclass(frozen=True)
class DeltaTable:
    rows: tuple[DeltaRow, ...]
    convention_note: str = DELTA_CONVENTION

    def get(self, measure: str, minute: int) -> float | None:
        for r in self.rows:
            if r.measure == measure and r.minute == minute:
                return r.delta
        raise KeyError((measure, minute))

    def to_list(self) -> list[dict]:
        return [r.to_dict() for r in self.rows]


def _bin(stats: Sequence[PerMinuteStats], m: int) -> PerMinuteStats:
    for s in stats:
        if s.minute == m:
            return s
    return PerMinuteStats(m)


def compute_deltas(
    gold: Sequence[PerMinuteStats],
    cand: Sequence[PerMinuteStats],
    first_n_minutes: int = 2,
    measures: Sequence[str] | None = None,
) -> DeltaTable:
    """cand - gold for every measure in minute bins 0..first_n_minutes (inclusive).

    Missing bins count as zeros; an average that is undefined on either side
    yields a ``None`` delta.
    """
    measures = list(measures or MEASURES)
    unknown = set(measures) - set(MEASURES)
    if unknown:
        raise ValueError(f"unknown measures: {sorted(unknown)}")
    rows = []
    for measure in measures:
        for m in range(first_n_minutes + 1):
            g = _bin(gold, m).measures()[measure]
            c = _bin(cand, m).measures()[measure]
            rows.append(DeltaRow(measure, m, None if g is None or c is None else c - g))
    return DeltaTable(tuple(rows))


def mean_deltas(tables: Sequence[DeltaTable]) -> DeltaTable:
    """Average several delta tables cell by cell (e.g. across extracts of one data type)."""
    if not tables:
        return DeltaTable(())
    rows = []
    for r in tables[0].rows:
        vals = [t.get(r.measure, r.minute) for t in tables]
        vals = [v for v in vals if v is not None]
        rows.append(DeltaRow(r.measure, r.minute, sum(vals) / len(vals) if vals else None))
    return DeltaTable(tuple(rows))


# -- long-format export ---------------------------------------------------------

LONGFORM_COLUMNS = ("transcriber", "expert", "phase", "data", "minutes", "measure", "value", "delta_value")


@dataclass(frozen=True)
class Run:
    transcript: Transcript
    stats: Sequence[PerMinuteStats]
    gold_stats: Sequence[PerMinuteStats] | None = None


def export_longform(runs: Iterable[Run], measures: Sequence[str] | None = None) -> list[dict]:
    """One row per (transcriber, minute, measure), ready for mixed-model fitting."""
    measures = list(measures or MEASURES)
    rows = []
    for run in runs:
        meta = run.transcript.meta
        if meta is None:
            raise TranscriptError(f"transcript {run.transcript.source_label or '<unnamed>'} has no annotator metadata")
        for s in run.stats:
            values = s.measures()
            gold = _bin(run.gold_stats, s.minute).measures() if run.gold_stats is not None else None
            for measure in measures:
                v = values[measure]
                dv = None
                if gold is not None and v is not None and gold[measure] is not None:
                    dv = v - gold[measure]
                rows.append(
                    {
                        "transcriber": meta.transcriber,
                        "expert": meta.expertise,
                        "phase": meta.phase,
                        "data": meta.data,
                        "minutes": s.minute,
                        "measure": measure,
                        "value": v,
                        "delta_value": dv,
                    }
                )
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return f"{round2(v):.2f}"
    return str(v)


def write_longform_csv(rows: Iterable[Mapping], dest: IO[str] | None = None) -> str:
    buf = dest or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LONGFORM_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in LONGFORM_COLUMNS])
    return buf.getvalue() if dest is None else ""
