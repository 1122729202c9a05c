"""Heuristic pre-tagging of alignment mismatches for human review.

Every non-match op of an alignment becomes a record. A fixed rule cascade
assigns a tentative category; reviewers can override it through a CSV.
"""

from __future__ import annotations

import csv
import enum
import io
from collections import Counter
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Sequence

from tuqa.align import Alignment, AlignmentOp, OpKind

DEFAULT_APPROX_THRESHOLD = 0.5
_VOWELS = "aeiouàèéìòù"


class MismatchCategory(enum.Enum):
    ORTHOGRAPHIC_VARIANT = "OrthographicVariant"
    INTERRUPTION_COMPLETION = "InterruptionCompletion"
    ELISION = "Elision"
    APPROXIMATION = "Approximation"
    ADDED_CONTENT = "AddedContent"
    SKIPPED_CONTENT = "SkippedContent"
    UNCLASSIFIED = "Unclassified"
    # assigned by reviewers only
    PROPER_NAME = "ProperName"
    GRAMMATICAL_FEATURE = "GrammaticalFeature"


MANUAL_ONLY = frozenset({MismatchCategory.PROPER_NAME, MismatchCategory.GRAMMATICAL_FEATURE})


class Confidence(enum.Enum):
    HEURISTIC = "Heuristic"
    MANUAL = "Manual"


@dataclass(frozen=True)
class MismatchRecord:
    ops: tuple[AlignmentOp, ...]
    ref_token: str | None
    hyp_token: str | None
    category: MismatchCategory = MismatchCategory.UNCLASSIFIED
    confidence: Confidence = Confidence.HEURISTIC

    def __post_init__(self) -> None:
        if not self.ops:
            raise ValueError("a mismatch record needs at least one op")
        if self.kind is OpKind.INSERTION and self.ref_token is not None:
            raise ValueError("insertion with a reference token")
        if self.kind is OpKind.DELETION and self.hyp_token is not None:
            raise ValueError("deletion with a hypothesis token")

    @property
    def op(self) -> AlignmentOp:
        return self.ops[0]

    @property
    def kind(self) -> OpKind:
        kinds = {op.kind for op in self.ops}
        if kinds == {OpKind.INSERTION}:
            return OpKind.INSERTION
        if kinds == {OpKind.DELETION}:
            return OpKind.DELETION
        return OpKind.SUBSTITUTION

    def to_dict(self) -> dict:
        return {
            "op": self.kind.value,
            "ref_index": [op.ref_index for op in self.ops if op.ref_index is not None],
            "hyp_index": [op.hyp_index for op in self.ops if op.hyp_index is not None],
            "ref_token": self.ref_token,
            "hyp_token": self.hyp_token,
            "category": self.category.value,
            "confidence": self.confidence.value,
        }


def _text(seq: Sequence, i: int) -> str:
    x = seq[i]
    return getattr(x, "surface", None) or str(x)


def extract_mismatches(a: Alignment, ref_tokens: Sequence | None = None, hyp_tokens: Sequence | None = None) -> list[MismatchRecord]:
    """One Unclassified record per substitution, insertion and deletion."""
    ref = a.ref if ref_tokens is None else ref_tokens
    hyp = a.hyp if hyp_tokens is None else hyp_tokens
    out = []
    for op in a.ops:
        if op.kind is OpKind.MATCH:
            continue
        try:
            r = _text(ref, op.ref_index) if op.ref_index is not None else None
            h = _text(hyp, op.hyp_index) if op.hyp_index is not None else None
        except IndexError:
            raise AssertionError(f"alignment op {op} out of range for the token sequences") from None
        out.append(MismatchRecord((op,), r, h))
    return out


def group_adjacent(a: Alignment, ref_tokens: Sequence | None = None, hyp_tokens: Sequence | None = None) -> list[MismatchRecord]:
    """One record per run of consecutive non-match ops.

    Multi-word errors ("la avevi" for "l'avevi") surface as a substitution
    next to an insertion; merged, the rules see both sides whole.
    """
    singles = iter(extract_mismatches(a, ref_tokens, hyp_tokens))
    out: list[MismatchRecord] = []
    run: list[MismatchRecord] = []

    def flush() -> None:
        if not run:
            return
        ops = tuple(op for r in run for op in r.ops)
        refs = [r.ref_token for r in run if r.ref_token is not None]
        hyps = [r.hyp_token for r in run if r.hyp_token is not None]
        out.append(MismatchRecord(ops, " ".join(refs) or None, " ".join(hyps) or None))
        run.clear()

    for op in a.ops:
        if op.kind is OpKind.MATCH:
            flush()
        else:
            run.append(next(singles))
    flush()
    return out


# -- lexicon ------------------------------------------------------------------

def _parse_lexicon(text: str) -> frozenset[frozenset[str]]:
    pairs = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ValueError(f"lexicon line {lineno}: expected 2 tab-separated forms")
        a, b = cols[0].strip().lower(), cols[1].strip().lower()
        if a == b:
            raise ValueError(f"lexicon line {lineno}: identical forms")
        pairs.add(frozenset((a, b)))
    return frozenset(pairs)


def default_lexicon() -> frozenset[frozenset[str]]:
    return _parse_lexicon(resources.files("tuqa").joinpath("data/variants.tsv").read_text(encoding="utf-8"))


def load_lexicon(path: str | Path, extend_default: bool = True) -> frozenset[frozenset[str]]:
    user = _parse_lexicon(Path(path).read_text(encoding="utf-8"))
    return user | default_lexicon() if extend_default else user


# -- string relations -------------------------------------------------------

def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalized_distance(a: str, b: str) -> float:
    m = max(len(a), len(b))
    return levenshtein(a, b) / m if m else 0.0


def is_interruption_pair(a: str, b: str) -> bool:
    """One form is cut off ("sala-") and its stem begins the other ("salare")."""
    for cut, full in ((a, b), (b, a)):
        if cut.endswith("-") and not full.endswith("-"):
            stem = cut.rstrip("-")
            if stem and full.startswith(stem) and full != stem:
                return True
    return False


def is_elision_pair(a: str, b: str) -> bool:
    """Apostrophe contraction (l'avevi / la avevi) or final-vowel truncation (son / sono)."""
    for short, full in ((a, b), (b, a)):
        p = short.find("'")
        if 0 < p:
            head, tail = short[:p], short[p + 1:]
            for v in _VOWELS:
                if full in (f"{head}{v} {tail}", f"{head}{v}{tail}") and (tail or full == head + v):
                    return True
        if len(short) >= 2 and "'" not in short and " " not in short:
            if len(full) == len(short) + 1 and full.startswith(short) and full[-1] in _VOWELS:
                return True
    return False


def classify_mismatch(
    rec: MismatchRecord,
    variant_lexicon: frozenset[frozenset[str]] | None = None,
    approx_threshold: float = DEFAULT_APPROX_THRESHOLD,
) -> MismatchRecord:
    """Apply the rule cascade; the first matching rule decides."""
    if rec.confidence is Confidence.MANUAL:
        return rec
    lex = default_lexicon() if variant_lexicon is None else variant_lexicon
    r = rec.ref_token.lower() if rec.ref_token is not None else None
    h = rec.hyp_token.lower() if rec.hyp_token is not None else None
    cat = MismatchCategory.UNCLASSIFIED
    if r is not None and h is not None and frozenset((r, h)) in lex:
        cat = MismatchCategory.ORTHOGRAPHIC_VARIANT
    elif r is not None and h is not None and is_interruption_pair(r, h):
        cat = MismatchCategory.INTERRUPTION_COMPLETION
    elif r is not None and h is not None and is_elision_pair(r, h):
        cat = MismatchCategory.ELISION
    elif rec.kind is OpKind.INSERTION:
        cat = MismatchCategory.ADDED_CONTENT
    elif rec.kind is OpKind.DELETION:
        cat = MismatchCategory.SKIPPED_CONTENT
    elif normalized_distance(r, h) <= approx_threshold:
        cat = MismatchCategory.APPROXIMATION
    return replace(rec, category=cat, confidence=Confidence.HEURISTIC)


def classify_alignment(
    a: Alignment,
    variant_lexicon: frozenset[frozenset[str]] | None = None,
    group: bool = False,
    approx_threshold: float = DEFAULT_APPROX_THRESHOLD,
) -> list[MismatchRecord]:
    lex = default_lexicon() if variant_lexicon is None else variant_lexicon
    recs = group_adjacent(a) if group else extract_mismatches(a)
    return [classify_mismatch(r, lex, approx_threshold) for r in recs]


# -- summary and review round trip -------------------------------------------

def _avg_len(tokens: Iterable[str]) -> float | None:
    lengths = [len(t) for tok in tokens for t in tok.split()]
    return sum(lengths) / len(lengths) if lengths else None


def summarize(records: Sequence[MismatchRecord]) -> dict:
    counts = Counter(r.category.value for r in records)
    return {
        "total": len(records),
        "by_category": {c.value: counts.get(c.value, 0) for c in MismatchCategory},
        "avg_len_added": _avg_len(r.hyp_token for r in records if r.category is MismatchCategory.ADDED_CONTENT),
        "avg_len_skipped": _avg_len(r.ref_token for r in records if r.category is MismatchCategory.SKIPPED_CONTENT),
    }


REVIEW_COLUMNS = ("id", "op", "ref_token", "hyp_token", "category", "override")


def write_review_csv(records: Sequence[MismatchRecord], dest: IO[str] | None = None) -> str:
    buf = dest or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REVIEW_COLUMNS)
    for i, r in enumerate(records):
        w.writerow([i, r.kind.value, r.ref_token or "", r.hyp_token or "", r.category.value, ""])
    return buf.getvalue() if dest is None else ""


def apply_review_csv(records: Sequence[MismatchRecord], text: str) -> list[MismatchRecord]:
    """Apply reviewer overrides; overridden records become Manual."""
    out = list(records)
    reader = csv.DictReader(io.StringIO(text))
    missing = set(REVIEW_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"review CSV lacks columns: {sorted(missing)}")
    for row in reader:
        override = (row["override"] or "").strip()
        if not override:
            continue
        idx = int(row["id"])
        if not 0 <= idx < len(out):
            raise ValueError(f"review CSV id {idx} out of range")
        try:
            cat = MismatchCategory(override)
        except ValueError:
            raise ValueError(f"review CSV id {idx}: unknown category {override!r}") from None
        out[idx] = replace(out[idx], category=cat, confidence=Confidence.MANUAL)
    return out
