"""Word-level global alignment (Needleman-Wunsch) between two transcripts."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Literal, Mapping, Sequence

import numpy as np

from tuqa.jefferson import Feature, Token, comparison_key
from tuqa.model import TimeInterval, Transcript, flatten_tokens, slice_by_window, temporal_window

GAP = "—"


class AlignmentError(ValueError):
    pass


class OpKind(enum.Enum):
    MATCH = "match"
    SUBSTITUTION = "substitution"
    INSERTION = "insertion"
    DELETION = "deletion"


@dataclass(frozen=True)
class ScoringParams:
    match_score: int = 1
    mismatch_score: int = -1
    gap_score: int = -1

    def __post_init__(self) -> None:
        if not (self.match_score > self.mismatch_score and self.match_score > self.gap_score):
            raise ValueError("match score must exceed both mismatch and gap scores")


@dataclass(frozen=True)
class AlignmentOp:
    kind: OpKind
    ref_index: int | None = None
    hyp_index: int | None = None

    def __post_init__(self) -> None:
        has_ref, has_hyp = self.ref_index is not None, self.hyp_index is not None
        ok = {
            OpKind.MATCH: has_ref and has_hyp,
            OpKind.SUBSTITUTION: has_ref and has_hyp,
            OpKind.DELETION: has_ref and not has_hyp,
            OpKind.INSERTION: has_hyp and not has_ref,
        }[self.kind]
        if not ok:
            raise ValueError(f"bad indices for {self.kind.value}: ref={self.ref_index} hyp={self.hyp_index}")


@dataclass(frozen=True)
class Counts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    correct: int = 0

    @property
    def n_ref(self) -> int:
        return self.substitutions + self.deletions + self.correct

    def __add__(self, other: Counts) -> Counts:
        return Counts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.correct + other.correct,
        )

    def to_dict(self) -> dict:
        return {"S": self.substitutions, "D": self.deletions, "I": self.insertions, "C": self.correct, "N": self.n_ref}


@dataclass(frozen=True)
class Alignment:
    ops: tuple[AlignmentOp, ...]
    counts: Counts
    score: int
    ref: tuple[Hashable, ...] = ()
    hyp: tuple[Hashable, ...] = ()
    window: TimeInterval | None = None
    uncertain_tokens: int = 0  # alignable tokens carrying the Uncertain feature

    def rows(self) -> list[tuple[str, str, str]]:
        """(op, ref item, hyp item) per op, gaps shown as an em dash."""
        out = []
        for op in self.ops:
            r = str(self.ref[op.ref_index]) if op.ref_index is not None else GAP
            h = str(self.hyp[op.hyp_index]) if op.hyp_index is not None else GAP
            out.append((op.kind.value, r, h))
        return out

    def render_text(self) -> str:
        rows = self.rows()
        w = max([len(r) for _, r, _ in rows] + [3])
        lines = [f"{'REF':<{w}}  HYP"]
        for kind, r, h in rows:
            mark = {"match": " ", "substitution": "S", "insertion": "I", "deletion": "D"}[kind]
            lines.append(f"{r:<{w}}  {h:<{w}}  {mark}".rstrip())
        return "\n".join(lines) + "\n"

    def ops_to_json(self) -> list[dict]:
        out = []
        for op in self.ops:
            d: dict = {"kind": op.kind.value}
            if op.ref_index is not None:
                d["ref_index"] = op.ref_index
                d["ref_token"] = str(self.ref[op.ref_index])
            if op.hyp_index is not None:
                d["hyp_index"] = op.hyp_index
                d["hyp_token"] = str(self.hyp[op.hyp_index])
            out.append(d)
        return out


def _score_matrix(ref: Sequence[Hashable], hyp: Sequence[Hashable], p: ScoringParams) -> np.ndarray:
    codes: dict[Hashable, int] = {}
    r = np.array([codes.setdefault(x, len(codes)) for x in ref], dtype=np.int64)
    h = np.array([codes.setdefault(x, len(codes)) for x in hyp], dtype=np.int64)
    m, n = len(r), len(h)
    gap, match, mismatch = p.gap_score, p.match_score, p.mismatch_score
    H = np.empty((m + 1, n + 1), dtype=np.int64)
    ramp = gap * np.arange(n + 1, dtype=np.int64)
    H[0] = ramp
    for i in range(1, m + 1):
        prev = H[i - 1]
        best = np.empty(n + 1, dtype=np.int64)
        best[0] = prev[0] + gap
        sub = np.where(h == r[i - 1], match, mismatch)
        np.maximum(prev[:-1] + sub, prev[1:] + gap, out=best[1:])
        # H[i, j] = max_k<=j (best[k] + gap * (j - k)): a running max on best - gap * k
        H[i] = np.maximum.accumulate(best - ramp) + ramp
    return H


def needleman_wunsch(
    ref: Sequence[Hashable], hyp: Sequence[Hashable], params: ScoringParams | None = None
) -> Alignment:
    """Globally optimal alignment of two key sequences.

    Traceback prefers diagonal (match/substitution), then up (deletion), then
    left (insertion), so the op sequence is fully determined by the inputs.
    """
    p = params or ScoringParams()
    H = _score_matrix(ref, hyp, p)
    i, j = len(ref), len(hyp)
    ops: list[AlignmentOp] = []
    s = d = ins = c = 0
    while i > 0 or j > 0:
        here = H[i, j]
        if i > 0 and j > 0:
            same = ref[i - 1] == hyp[j - 1]
            if here == H[i - 1, j - 1] + (p.match_score if same else p.mismatch_score):
                i, j = i - 1, j - 1
                if same:
                    c += 1
                    ops.append(AlignmentOp(OpKind.MATCH, i, j))
                else:
                    s += 1
                    ops.append(AlignmentOp(OpKind.SUBSTITUTION, i, j))
                continue
        if i > 0 and here == H[i - 1, j] + p.gap_score:
            i -= 1
            d += 1
            ops.append(AlignmentOp(OpKind.DELETION, ref_index=i))
            continue
        j -= 1
        ins += 1
        ops.append(AlignmentOp(OpKind.INSERTION, hyp_index=j))
    ops.reverse()
    return Alignment(tuple(ops), Counts(s, d, ins, c), int(H[-1, -1]), tuple(ref), tuple(hyp))


def _keys(tokens: Sequence[Token]) -> tuple[list[str], int]:
    keys, uncertain = [], 0
    for tok in tokens:
        if tok.is_alignable:
            keys.append(comparison_key(tok))
            uncertain += Feature.UNCERTAIN in tok.features
    return keys, uncertain


def align_transcripts(
    ref: Transcript,
    hyp: Transcript,
    mode: Literal["merged", "per-speaker"] = "merged",
    params: ScoringParams | None = None,
) -> Alignment | dict[str, Alignment]:
    """Align ``hyp`` against ``ref`` over the time span both transcripts cover.

    Only linguistic and unintelligible tokens take part; pauses and non-verbal
    descriptions are dropped first. ``per-speaker`` returns one alignment per
    speaker label found in either transcript.
    """
    if not ref.units or not hyp.units:
        raise AlignmentError("empty transcript")
    window = temporal_window(ref, hyp)
    if window is None:
        raise AlignmentError("no temporal overlap between transcripts")
    ref_s, hyp_s = slice_by_window(ref, window), slice_by_window(hyp, window)
    if mode == "merged":
        rk, ru = _keys(flatten_tokens(ref_s, "merged"))
        hk, hu = _keys(flatten_tokens(hyp_s, "merged"))
        a = needleman_wunsch(rk, hk, params)
        return _with(a, window, ru + hu)
    if mode == "per-speaker":
        rmap = flatten_tokens(ref_s, "per-speaker")
        hmap = flatten_tokens(hyp_s, "per-speaker")
        out = {}
        for sp in sorted(set(rmap) | set(hmap)):
            rk, ru = _keys(rmap.get(sp, []))
            hk, hu = _keys(hmap.get(sp, []))
            out[sp] = _with(needleman_wunsch(rk, hk, params), window, ru + hu)
        return out
    raise ValueError(f"unknown alignment mode: {mode!r}")


def _with(a: Alignment, window: TimeInterval, uncertain: int) -> Alignment:
    return Alignment(a.ops, a.counts, a.score, a.ref, a.hyp, window, uncertain)


def total_counts(alignments: Mapping[str, Alignment] | Alignment) -> Counts:
    if isinstance(alignments, Alignment):
        return alignments.counts
    total = Counts()
    for a in alignments.values():
        total = total + a.counts
    return total
