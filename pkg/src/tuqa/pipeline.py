"""End-to-end runs: load, normalize, tokenize, then build report sections."""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from tuqa.align import Alignment, ScoringParams, align_transcripts, total_counts
from tuqa.io import SCHEMA_VERSION, TranscriptDocument
from tuqa.jefferson import ValidationIssue, tokenize_transcript, validate_transcript
from tuqa.metrics import (
    DELTA_CONVENTION,
    compute_deltas,
    compute_wer,
    per_minute_stats,
    summary_stats,
)
from tuqa.mismatches import (
    DEFAULT_APPROX_THRESHOLD,
    classify_alignment,
    default_lexicon,
    load_lexicon,
    summarize,
)
from tuqa.model import Transcript, temporal_window
from tuqa.normalize import ConfigError, NormalizationConfig, normalize_transcript
from tuqa.overlaps import DEFAULT_MILD_THRESHOLD, detect_annotation_issues, severity_counts

log = logging.getLogger(__name__)

SPAN_NOTE = "per-minute rates divide by the transcribed span: (last TU end - first TU start) / 60"
UNCERTAIN_NOTE = "tokens marked uncertain '( )' take part in alignment and WER"
ASYMMETRIC_NOTE = "overlap bracketed on only one of two overlapping TUs is reported as PartialAnnotation (asymmetric)"


@dataclass(frozen=True)
class RunConfig:
    corrections: str | None = None  # extra correction rules, TSV
    normalize: bool = True
    scoring: ScoringParams = field(default_factory=ScoringParams)
    mild_threshold: float = DEFAULT_MILD_THRESHOLD
    delta_minutes: int = 2
    mode: str = "merged"
    format: str = "json"
    lexicon: str | None = None
    approx_threshold: float = DEFAULT_APPROX_THRESHOLD
    group_mismatches: bool = True

    def __post_init__(self) -> None:
        if self.mode not in ("merged", "per-speaker"):
            raise ConfigError(f"mode must be 'merged' or 'per-speaker', not {self.mode!r}")
        if self.format not in ("json", "csv", "text"):
            raise ConfigError(f"format must be json, csv or text, not {self.format!r}")
        if self.mild_threshold < 0:
            raise ConfigError("mild threshold must be non-negative")
        if self.delta_minutes < 0:
            raise ConfigError("delta minutes must be non-negative")

    @classmethod
    def from_mapping(cls, d: Mapping[str, Any]) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        if "scoring" in kw:
            sc = kw["scoring"]
            try:
                kw["scoring"] = ScoringParams(sc.get("match", 1), sc.get("mismatch", -1), sc.get("gap", -1))
            except (AttributeError, ValueError) as exc:
                raise ConfigError(f"bad scoring config: {exc}") from None
        return cls(**kw)

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_mapping(data)

    def override(self, **kw) -> RunConfig:
        """Replace fields with the given values, ignoring ``None``."""
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})

    def normalization(self) -> NormalizationConfig:
        if self.corrections:
            return NormalizationConfig.from_file(self.corrections)
        return NormalizationConfig()

    def variant_lexicon(self) -> frozenset:
        return load_lexicon(self.lexicon) if self.lexicon else default_lexicon()


@dataclass(frozen=True)
class Prepared:
    doc: TranscriptDocument
    transcript: Transcript  # normalized and tokenized
    issues: tuple[ValidationIssue, ...]

    @property
    def label(self) -> str:
        return self.transcript.source_label


def prepare(doc: TranscriptDocument, cfg: RunConfig | None = None, norm: NormalizationConfig | None = None) -> Prepared:
    cfg = cfg or RunConfig()
    t = doc.transcript
    if cfg.normalize:
        t = normalize_transcript(t, norm or cfg.normalization())
    t = tokenize_transcript(t, strict=False)
    return Prepared(doc, t, tuple(validate_transcript(t)))


def base_report(command: str, inputs: Mapping[str, Prepared | TranscriptDocument]) -> dict:
    desc = []
    for role, p in inputs.items():
        doc = p.doc if isinstance(p, Prepared) else p
        desc.append({"role": role, **doc.describe()})
    return {"schema_version": SCHEMA_VERSION, "command": command, "inputs": desc, "notes": []}


def window_dict(hyp: Transcript, ref: Transcript) -> dict | None:
    w = temporal_window(hyp, ref) if hyp.units and ref.units else None
    return None if w is None else {"start": w.start, "end": w.end}


# -- sections ---------------------------------------------------------------

def align_section(hyp: Prepared, ref: Prepared, cfg: RunConfig) -> tuple[dict, Alignment | dict[str, Alignment]]:
    a = align_transcripts(ref.transcript, hyp.transcript, cfg.mode, cfg.scoring)
    counts = total_counts(a)
    w = compute_wer(counts)
    if isinstance(a, Alignment):
        alignment = {"mode": "merged", "ops": a.ops_to_json()}
        uncertain = a.uncertain_tokens
    else:
        alignment = {
            "mode": "per-speaker",
            "speakers": {sp: {"counts": x.counts.to_dict(), "ops": x.ops_to_json()} for sp, x in a.items()},
        }
        uncertain = sum(x.uncertain_tokens for x in a.values())
    sec = {
        "window": window_dict(hyp.transcript, ref.transcript),
        "wer": w.percent,
        "counts": w.counts_dict(),
        "uncertain_included": uncertain,
        "alignment": alignment,
    }
    return sec, a


def stats_section(p: Prepared, minutes: int | None = None, origin: float = 0.0) -> dict:
    return {
        "summary": summary_stats(p.transcript).to_dict(),
        "per_minute": [s.to_dict() for s in per_minute_stats(p.transcript, minutes, origin)],
    }


def delta_origin(hyp: Transcript, ref: Transcript) -> float:
    """Shared bin origin for a pair: the earliest TU start of either transcript."""
    starts = [t.units[0].start for t in (hyp, ref) if t.units]
    return min(starts) if starts else 0.0


def deltas_section(hyp: Prepared, ref: Prepared, minutes: int) -> dict:
    origin = delta_origin(hyp.transcript, ref.transcript)
    n = minutes + 1
    table = compute_deltas(
        per_minute_stats(ref.transcript, n, origin), per_minute_stats(hyp.transcript, n, origin), minutes
    )
    return {"deltas": table.to_list(), "delta_convention": DELTA_CONVENTION, "delta_origin_s": origin}


def overlaps_section(p: Prepared, threshold: float) -> dict:
    issues = detect_annotation_issues(p.transcript, threshold)
    counts = severity_counts(issues)
    total = sum(counts.values())
    return {
        "overlap_issues": [i.to_dict(p.transcript) for i in issues],
        "overlap_summary": {
            "counts": counts,
            "percentages": {k: 100.0 * v / total for k, v in counts.items()} if total else None,
            "threshold_s": threshold,
        },
    }


def classify_section(a: Alignment | dict[str, Alignment], cfg: RunConfig) -> tuple[dict, list]:
    lex = cfg.variant_lexicon()
    alignments = [a] if isinstance(a, Alignment) else [a[k] for k in sorted(a)]
    records = []
    for x in alignments:
        records.extend(classify_alignment(x, lex, cfg.group_mismatches, cfg.approx_threshold))
    return {"mismatches": [r.to_dict() for r in records], "mismatch_summary": summarize(records)}, records


def issues_list(p: Prepared) -> list[dict]:
    return [i.to_dict() for i in p.issues]


def full_report(hyp: Prepared, ref: Prepared, cfg: RunConfig | None = None) -> dict:
    """Alignment, WER, statistics, deltas, overlap and mismatch sections for one pair."""
    cfg = cfg or RunConfig()
    r = base_report("report", {"hyp": hyp, "ref": ref})
    sec, a = align_section(hyp, ref, cfg)
    r.update(sec)
    r["summary"] = {"hyp": summary_stats(hyp.transcript).to_dict(), "ref": summary_stats(ref.transcript).to_dict()}
    origin = delta_origin(hyp.transcript, ref.transcript)
    r["per_minute"] = {
        role: [s.to_dict() for s in per_minute_stats(p.transcript, None, origin)] for role, p in (("hyp", hyp), ("ref", ref))
    }
    r.update(deltas_section(hyp, ref, cfg.delta_minutes))
    r["validation_issues"] = {"hyp": issues_list(hyp), "ref": issues_list(ref)}
    ov_h, ov_r = overlaps_section(hyp, cfg.mild_threshold), overlaps_section(ref, cfg.mild_threshold)
    r["overlap_issues"] = {"hyp": ov_h["overlap_issues"], "ref": ov_r["overlap_issues"]}
    r["overlap_summary"] = {"hyp": ov_h["overlap_summary"], "ref": ov_r["overlap_summary"]}
    cls, _ = classify_section(a, cfg)
    r.update(cls)
    r["notes"] += [SPAN_NOTE, UNCERTAIN_NOTE, ASYMMETRIC_NOTE]
    return r
