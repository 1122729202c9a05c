"""Consistency between temporal overlap of TUs and '[ ]' overlap annotation."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from tuqa.jefferson import Feature, IssueKind, TokenKind, overlap_span_count, tokenize_tu, validate_markup
from tuqa.model import Transcript, TranscriptionUnit, TranscriptMeta

DEFAULT_MILD_THRESHOLD = 0.1


class OverlapKind(enum.Enum):
    MISSING = "MissingAnnotation"
    SPURIOUS = "SpuriousAnnotation"
    PARTIAL = "PartialAnnotation"
    REPEATED_OPEN = "RepeatedOpenBracket"
    UNCLOSED = "UnclosedBracket"


class Severity(enum.IntEnum):
    NON_SEVERE = 0
    MILD = 1
    SEVERE = 2

    @property
    def label(self) -> str:
        return {0: "NonSevere", 1: "Mild", 2: "Severe"}[self.value]


@dataclass(frozen=True)
class OverlapIssue:
    kind: OverlapKind
    severity: Severity
    tus: tuple[int, ...]  # indices into the (sorted) transcript units
    temporal_overlap_s: float = 0.0
    asymmetric: bool = False  # bracket on only one of the two overlapping TUs

    def __post_init__(self) -> None:
        if not 1 <= len(self.tus) <= 3:
            raise ValueError("an overlap issue references 1 to 3 TUs")
        if self.temporal_overlap_s < 0:
            raise ValueError("negative overlap")
        if self.kind in (OverlapKind.REPEATED_OPEN, OverlapKind.UNCLOSED) and self.severity is not Severity.NON_SEVERE:
            raise ValueError(f"{self.kind.value} is always NonSevere")
        if self.kind is OverlapKind.PARTIAL and self.severity is not Severity.MILD:
            raise ValueError("PartialAnnotation is always Mild")

    def to_dict(self, t: Transcript | None = None) -> dict:
        d = {
            "kind": self.kind.value,
            "severity": self.severity.label,
            "tus": list(self.tus),
            "temporal_overlap_s": self.temporal_overlap_s,
        }
        if self.asymmetric:
            d["asymmetric"] = True
        if t is not None:
            d["units"] = [
                {"index": i, "speaker": t.units[i].speaker, "start": t.units[i].start, "end": t.units[i].end}
                for i in self.tus
            ]
        return d


def _overlap(a: TranscriptionUnit, b: TranscriptionUnit) -> float:
    # millisecond resolution keeps float noise away from the threshold
    return round(a.interval.intersection(b.interval), 3)


def intersecting_pairs(t: Transcript) -> list[tuple[int, int, float]]:
    """Cross-speaker TU pairs (i < j) with strictly positive temporal intersection.

    Sweep over start-sorted units: once a later unit starts at or after the
    current one's end, no further unit can intersect it.
    """
    units = t.units
    out = []
    for i, a in enumerate(units):
        for j in range(i + 1, len(units)):
            b = units[j]
            if b.start >= a.end:
                break
            if b.speaker == a.speaker:
                continue
            ov = _overlap(a, b)
            if ov > 0:
                out.append((i, j, ov))
    return out


def _tokens(tu: TranscriptionUnit):
    return tu.tokens if tu.tokens is not None else tokenize_tu(tu.raw_text, strict=False)


def is_annotated(tu: TranscriptionUnit) -> bool:
    return overlap_span_count(tu.raw_text) > 0 or any(Feature.OVERLAP in tok.features for tok in _tokens(tu))


def is_non_verbal_only(tu: TranscriptionUnit) -> bool:
    """True when the TU holds no speech: only non-verbal descriptions and pauses."""
    return all(tok.kind in (TokenKind.NON_VERBAL, TokenKind.SHORT_PAUSE) for tok in _tokens(tu))


def _severity(overlap_s: float, threshold: float) -> Severity:
    return Severity.SEVERE if overlap_s > threshold else Severity.MILD


def detect_annotation_issues(t: Transcript, mild_threshold_s: float = DEFAULT_MILD_THRESHOLD) -> list[OverlapIssue]:
    units = t.units
    annotated = [is_annotated(tu) for tu in units]
    nonverbal = [is_non_verbal_only(tu) for tu in units]
    pairs = intersecting_pairs(t)
    issues: list[OverlapIssue] = []

    # one long TU, a single bracket span, two or more shorter TUs over it
    covered: set[tuple[int, int]] = set()
    partners: dict[int, list[tuple[int, float]]] = defaultdict(list)
    for i, j, ov in pairs:
        if nonverbal[i] or nonverbal[j]:
            continue
        partners[i].append((j, ov))
        partners[j].append((i, ov))
    for k in sorted(partners):
        if overlap_span_count(units[k].raw_text) != 1:
            continue
        shorter = [(o, ov) for o, ov in partners[k] if units[o].duration < units[k].duration]
        if len(shorter) < 2:
            continue
        shorter.sort()
        refs = tuple(sorted([k] + [o for o, _ in shorter[:2]]))
        issues.append(OverlapIssue(OverlapKind.PARTIAL, Severity.MILD, refs, round(sum(ov for _, ov in shorter), 3)))
        covered.update((min(k, o), max(k, o)) for o, _ in shorter)

    has_partner = [False] * len(units)
    for i, j, ov in pairs:
        has_partner[i] = has_partner[j] = True
        if nonverbal[i] or nonverbal[j] or (i, j) in covered:
            continue
        if not annotated[i] and not annotated[j]:
            issues.append(OverlapIssue(OverlapKind.MISSING, _severity(ov, mild_threshold_s), (i, j), ov))
        elif annotated[i] != annotated[j]:
            issues.append(OverlapIssue(OverlapKind.PARTIAL, Severity.MILD, (i, j), ov, asymmetric=True))

    for k, tu in enumerate(units):
        if annotated[k] and not has_partner[k]:
            # annotation with no overlap at all: zero overlap is the severe case
            issues.append(OverlapIssue(OverlapKind.SPURIOUS, Severity.SEVERE, (k,), 0.0))
        for v in validate_markup(tu.raw_text):
            if v.kind is IssueKind.REPEATED_OPEN_BRACKET:
                issues.append(OverlapIssue(OverlapKind.REPEATED_OPEN, Severity.NON_SEVERE, (k,)))
            elif v.kind is IssueKind.UNBALANCED_BRACKET and ("[" in v.detail or "]" in v.detail):
                issues.append(OverlapIssue(OverlapKind.UNCLOSED, Severity.NON_SEVERE, (k,)))

    issues.sort(key=lambda x: (x.tus, x.kind.value))
    return issues


# -- group summaries --------------------------------------------------------------

@dataclass(frozen=True)
class GroupSummary:
    expertise: str
    phase: str
    counts: dict[str, int]
    percentages: dict[str, float] | None  # None for a group with no issues
    note: str = ""

    @property
    def group(self) -> str:
        return f"{self.expertise}_{self.phase}"

    def to_dict(self) -> dict:
        d = {"group": self.group, "expertise": self.expertise, "phase": self.phase, "counts": dict(self.counts)}
        d["percentages"] = None if self.percentages is None else dict(self.percentages)
        if self.note:
            d["note"] = self.note
        return d


_SEV_ORDER = (Severity.SEVERE, Severity.MILD, Severity.NON_SEVERE)


def severity_counts(issues: Iterable[OverlapIssue]) -> dict[str, int]:
    counts = {s.label: 0 for s in _SEV_ORDER}
    for i in issues:
        counts[i.severity.label] += 1
    return counts


def summarize_by_group(
    runs: Sequence[tuple[Sequence[OverlapIssue], TranscriptMeta]],
    groups: Iterable[tuple[str, str]] | None = None,
) -> list[GroupSummary]:
    """Severity distribution per (expertise, phase).

    ``groups`` lists groups to report even if no transcript falls in them;
    those rows carry no percentages and an explanatory note.
    """
    by_group: dict[tuple[str, str], list[OverlapIssue]] = {}
    for g in groups or ():
        by_group.setdefault(g, [])
    for issues, meta in runs:
        by_group.setdefault((meta.expertise, meta.phase), []).extend(issues)
    out = []
    for (exp, phase), issues in sorted(by_group.items()):
        counts = severity_counts(issues)
        total = sum(counts.values())
        if total == 0:
            out.append(GroupSummary(exp, phase, counts, None, "no overlap issues in group"))
            continue
        out.append(GroupSummary(exp, phase, counts, {k: 100.0 * v / total for k, v in counts.items()}))
    return out
