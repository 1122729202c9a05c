"""Jefferson-style markup: tokenization, token features, markup validation.

A TU's text is scanned once, character by character. Paired symbols open and
close spans that are tracked independently of each other (so ``>°a [b°]<`` is
legal), and every token with at least one character inside a span carries
that span's feature. Markup characters never reach a token's surface; each
token instead keeps ``marks``, the (offset, symbol) pairs needed to put the
markup back, which is what :func:`render_tokens` does.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from tuqa.model import Transcript


class Feature(enum.Enum):
    WEAKLY_RISING = ","
    RISING = "?"
    FALLING = "."
    PROLONGATION = ":"
    SHORT_PAUSE = "(.)"
    LOWER_VOLUME = "°"
    HIGHER_VOLUME = "CAPS"
    INTERRUPTED = "-"
    FASTER = "><"
    SLOWER = "<>"
    OVERLAP = "[]"
    UNCERTAIN = "()"
    UNINTELLIGIBLE = "xxx"
    NON_VERBAL = "(())"
    PROSODIC_LINK = "="


INTONATION = frozenset({Feature.WEAKLY_RISING, Feature.RISING, Feature.FALLING})
_INTONATION_BY_CHAR = {",": Feature.WEAKLY_RISING, "?": Feature.RISING, ".": Feature.FALLING}


class TokenKind(enum.Enum):
    LINGUISTIC = "linguistic"
    SHORT_PAUSE = "short_pause"
    UNINTELLIGIBLE = "unintelligible"
    NON_VERBAL = "non_verbal"


class IssueKind(enum.Enum):
    UNBALANCED_BRACKET = "UnbalancedBracket"
    REPEATED_OPEN_BRACKET = "RepeatedOpenBracket"
    UNKNOWN_SYMBOL = "UnknownSymbol"
    MALFORMED_PAUSE = "MalformedPause"


# Characters that may never appear in a token surface.
MARKUP_CHARS = frozenset("°[]()<>:")
# Characters a normalized TU may contain besides letters and digits.
JEFFERSON_SYMBOLS = ",?.:()=°[]-><"
SURFACE_PUNCT = "'’-"


@dataclass(frozen=True)
class Token:
    surface: str
    kind: TokenKind = TokenKind.LINGUISTIC
    features: frozenset[Feature] = frozenset()
    char_span: tuple[int, int] = (0, 0)
    # (offset into core text, markup symbol), in insertion order
    marks: tuple[tuple[int, str], ...] = ()
    count: int = 0  # syllables, unintelligible tokens only

    def __post_init__(self) -> None:
        if not isinstance(self.features, frozenset):
            object.__setattr__(self, "features", frozenset(self.features))
        if self.kind is TokenKind.UNINTELLIGIBLE and self.count < 1:
            raise ValueError("unintelligible token needs a syllable count >= 1")
        if self.kind is TokenKind.NON_VERBAL and not self.surface.strip():
            raise ValueError("non-verbal token needs a description")

    @property
    def description(self) -> str:
        return self.surface.strip() if self.kind is TokenKind.NON_VERBAL else ""

    @property
    def prolongations(self) -> tuple[int, ...]:
        """Surface offsets followed by a prolongation colon."""
        if self.kind is not TokenKind.LINGUISTIC:
            return ()
        return tuple(pos for pos, sym in self.marks if sym == ":")

    def has(self, feature: Feature) -> bool:
        return feature in self.features

    @property
    def is_alignable(self) -> bool:
        return self.kind in (TokenKind.LINGUISTIC, TokenKind.UNINTELLIGIBLE)

    def core(self) -> str:
        if self.kind is TokenKind.SHORT_PAUSE:
            return "(.)"
        if self.kind is TokenKind.NON_VERBAL:
            return f"(({self.surface}))"
        return self.surface

    def render(self) -> str:
        """The token as it appeared in the source text, markup included."""
        core = self.core()
        out: list[str] = []
        pos = 0
        for at, sym in self.marks:
            out.append(core[pos:at])
            out.append(sym)
            pos = at
        out.append(core[pos:])
        return "".join(out)


@dataclass(frozen=True)
class ValidationIssue:
    kind: IssueKind
    detail: str
    char_span: tuple[int, int]
    tu_index: int | None = None

    def at_unit(self, index: int) -> ValidationIssue:
        return replace(self, tu_index=index)

    def to_dict(self) -> dict:
        return {
            "tu_index": self.tu_index,
            "kind": self.kind.value,
            "detail": self.detail,
            "char_span": list(self.char_span),
        }


class MarkupError(ValueError):
    """Raised by strict tokenization when the markup is not well formed."""

    def __init__(self, issues: Sequence[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(f"{i.kind.value}: {i.detail}" for i in self.issues))


class TokenKindError(ValueError):
    """Raised when an operation is applied to a token kind it does not accept."""


@dataclass
class _Builder:
    start: int
    end: int
    chars: list[str] = field(default_factory=list)
    marks: list[tuple[int, str]] = field(default_factory=list)
    features: set[Feature] = field(default_factory=set)
    kind: TokenKind | None = None
    special_surface: str = ""
    terminated: bool = False  # an intonation mark closed the word

    @property
    def has_content(self) -> bool:
        return bool(self.chars) or self.kind is not None

    def core_len(self) -> int:
        if self.kind is TokenKind.SHORT_PAUSE:
            return 3
        if self.kind is TokenKind.NON_VERBAL:
            return len(self.special_surface) + 4
        return len(self.chars)

    def add_mark(self, sym: str, pos: int, at_end: bool = True) -> None:
        self.marks.append((self.core_len() if at_end else 0, sym))
        self.start = min(self.start, pos)
        self.end = max(self.end, pos + len(sym))


_MALFORMED_PAUSE = re.compile(r"\(\s*\.[\s.]*\)")
_XRUN = re.compile(r"[xX]{2,}")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[_Builder] = []
        self.cur: _Builder | None = None
        self.pending: list[tuple[int, str]] = []  # leading marks waiting for a token
        self.pending_features: set[Feature] = set()
        self.pending_start: int | None = None
        self.issues: list[ValidationIssue] = []
        self.overlap_stack: list[tuple[int, bool]] = []  # (pos, was a "[[" run)
        self.uncertain_stack: list[int] = []
        self.lower_open: int | None = None
        self.faster_open: int | None = None
        self.slower_open: int | None = None

    # -- helpers -------------------------------------------------------
    def issue(self, kind: IssueKind, detail: str, start: int, end: int) -> None:
        self.issues.append(ValidationIssue(kind, detail, (start, end)))

    def span_features(self) -> set[Feature]:
        f: set[Feature] = set()
        if self.overlap_stack:
            f.add(Feature.OVERLAP)
        if self.uncertain_stack:
            f.add(Feature.UNCERTAIN)
        if self.lower_open is not None:
            f.add(Feature.LOWER_VOLUME)
        if self.faster_open is not None:
            f.add(Feature.FASTER)
        if self.slower_open is not None:
            f.add(Feature.SLOWER)
        return f

    def flush(self) -> None:
        cur = self.cur
        self.cur = None
        if cur is None:
            return
        if cur.has_content:
            self.tokens.append(cur)
        else:
            # only opening marks so far: they belong to the next token
            self.pending.extend((0, sym) for _, sym in cur.marks)
            self.pending_features |= cur.features
            if self.pending_start is None:
                self.pending_start = cur.start

    def new_builder(self, pos: int) -> _Builder:
        b = _Builder(start=pos, end=pos)
        if self.pending:
            b.marks.extend(self.pending)
            b.features |= self.pending_features
            b.start = self.pending_start if self.pending_start is not None else pos
            self.pending = []
            self.pending_features = set()
            self.pending_start = None
        return b

    def opener(self, sym: str, pos: int) -> None:
        if self.cur is not None and self.cur.terminated:
            self.flush()
        if self.cur is None:
            self.cur = self.new_builder(pos)
        self.cur.add_mark(sym, pos)

    def closer(self, sym: str, pos: int, feature: Feature | None = None) -> None:
        target = self.cur if (self.cur is not None and self.cur.has_content) else None
        if target is None and self.cur is None and self.tokens and not self.pending:
            target = self.tokens[-1]
        if target is None:
            if self.cur is None:
                self.cur = self.new_builder(pos)
            target = self.cur
        target.add_mark(sym, pos)
        if feature is not None:
            target.features.add(feature)

    def special(self, kind: TokenKind, surface: str, start: int, end: int) -> None:
        self.flush()
        b = self.new_builder(start)
        b.kind = kind
        b.special_surface = surface
        b.features |= self.span_features()
        b.features.add(Feature.SHORT_PAUSE if kind is TokenKind.SHORT_PAUSE else Feature.NON_VERBAL)
        b.end = end
        self.tokens.append(b)

    # -- main loop -----------------------------------------------------
    def run(self) -> None:
        text = self.text
        n = len(text)
        i = 0
        while i < n:
            c = text[i]
            if c.isspace():
                self.flush()
                i += 1
                continue
            if c == "(":
                if text.startswith("(.)", i):
                    self.special(TokenKind.SHORT_PAUSE, "", i, i + 3)
                    i += 3
                    continue
                m = _MALFORMED_PAUSE.match(text, i)
                if m:
                    self.issue(IssueKind.MALFORMED_PAUSE, f"malformed short pause {m.group()!r}", i, m.end())
                    self.special(TokenKind.SHORT_PAUSE, "", i, m.end())
                    i = m.end()
                    continue
                if text.startswith("((", i):
                    close = text.find("))", i + 2)
                    if close < 0:
                        self.issue(IssueKind.UNBALANCED_BRACKET, "unclosed '((' non-verbal description", i, n)
                        close = n
                    inner = text[i + 2:close]
                    end = min(close + 2, n)
                    if inner.strip():
                        self.special(TokenKind.NON_VERBAL, inner, i, end)
                    else:
                        self.issue(IssueKind.UNKNOWN_SYMBOL, "empty non-verbal description", i, end)
                    i = end
                    continue
                self.opener("(", i)
                self.uncertain_stack.append(i)
                i += 1
                continue
            if c == ")":
                if self.uncertain_stack:
                    self.uncertain_stack.pop()
                else:
                    self.issue(IssueKind.UNBALANCED_BRACKET, "')' without matching '('", i, i + 1)
                self.closer(")", i)
                i += 1
                continue
            if c == "[":
                j = i
                while j < n and text[j] == "[":
                    j += 1
                repeated = j - i > 1
                if repeated:
                    self.issue(IssueKind.REPEATED_OPEN_BRACKET, f"repeated opening bracket {text[i:j]!r}", i, j)
                for k in range(i, j):
                    self.opener("[", k)
                self.overlap_stack.append((i, repeated))
                i = j
                continue
            if c == "]":
                j = i
                while j < n and text[j] == "]":
                    j += 1
                if self.overlap_stack:
                    self.overlap_stack.pop()
                else:
                    self.issue(IssueKind.UNBALANCED_BRACKET, "']' without matching '['", i, j)
                for k in range(i, j):
                    self.closer("]", k)
                i = j
                continue
            if c == "°":
                if self.lower_open is None:
                    self.opener("°", i)
                    self.lower_open = i
                else:
                    self.closer("°", i)
                    self.lower_open = None
                i += 1
                continue
            if c == ">":
                if self.slower_open is not None:
                    self.closer(">", i)
                    self.slower_open = None
                else:
                    self.opener(">", i)
                    self.faster_open = i
                i += 1
                continue
            if c == "<":
                if self.faster_open is not None:
                    self.closer("<", i)
                    self.faster_open = None
                else:
                    self.opener("<", i)
                    self.slower_open = i
                i += 1
                continue
            if c == ":":
                if self.cur is not None and self.cur.has_content:
                    self.cur.add_mark(":", i)
                    self.cur.features.add(Feature.PROLONGATION)
                else:
                    self.opener(":", i)
                    self.cur.features.add(Feature.PROLONGATION)
                i += 1
                continue
            if c in _INTONATION_BY_CHAR:
                feature = _INTONATION_BY_CHAR[c]
                if self.cur is not None and self.cur.has_content:
                    self.cur.add_mark(c, i)
                    self.cur.features.add(feature)
                    self.cur.terminated = True
                elif self.cur is None and self.tokens and not self.pending:
                    self.tokens[-1].add_mark(c, i)
                    self.tokens[-1].features.add(feature)
                else:
                    self.issue(IssueKind.UNKNOWN_SYMBOL, f"intonation mark {c!r} with no word to attach to", i, i + 1)
                    self.opener(c, i)
                i += 1
                continue
            if c == "=":
                if self.cur is not None and self.cur.has_content:
                    self.cur.add_mark("=", i)
                    self.cur.features.add(Feature.PROSODIC_LINK)
                    self.flush()
                elif self.cur is None and self.tokens and not self.pending:
                    self.tokens[-1].add_mark("=", i)
                    self.tokens[-1].features.add(Feature.PROSODIC_LINK)
                else:
                    self.opener("=", i)
                    self.cur.features.add(Feature.PROSODIC_LINK)
                i += 1
                continue
            # word character
            if self.cur is not None and (self.cur.terminated or self.cur.kind is not None):
                self.flush()
            if self.cur is None:
                self.cur = self.new_builder(i)
            if not (c.isalnum() or c in SURFACE_PUNCT):
                self.issue(IssueKind.UNKNOWN_SYMBOL, f"unexpected character {c!r}", i, i + 1)
            self.cur.chars.append(c)
            self.cur.features |= self.span_features()
            self.cur.end = i + 1
            i += 1
        self.flush()
        self.finish()

    def finish(self) -> None:
        n = len(self.text)
        if self.pending:
            if self.tokens:
                last = self.tokens[-1]
                for _, sym in self.pending:
                    last.marks.append((last.core_len(), sym))
                last.end = n
            else:
                self.issue(IssueKind.UNKNOWN_SYMBOL, "markup without any word", 0, n)
            self.pending = []
        for pos, repeated in self.overlap_stack:
            # an unclosed "[[" run is already reported once as repeated
            if not repeated:
                self.issue(IssueKind.UNBALANCED_BRACKET, "unclosed '['", pos, pos + 1)
        for pos in self.uncertain_stack:
            self.issue(IssueKind.UNBALANCED_BRACKET, "unclosed '('", pos, pos + 1)
        for pos, sym in ((self.lower_open, "°"), (self.faster_open, ">"), (self.slower_open, "<")):
            if pos is not None:
                self.issue(IssueKind.UNBALANCED_BRACKET, f"unclosed {sym!r}", pos, pos + 1)
        for b in self.tokens:
            if b.kind is None:
                surface = "".join(b.chars)
                if _XRUN.search(surface) and not _is_xrun(surface):
                    self.issue(
                        IssueKind.UNKNOWN_SYMBOL,
                        f"'x' run inside word {surface!r} (unintelligible syllables stand alone)",
                        b.start,
                        b.end,
                    )
        self.issues.sort(key=lambda i: i.char_span)

    def build(self) -> list[Token]:
        out = []
        for b in self.tokens:
            features = set(b.features)
            if b.kind is not None:
                out.append(
                    Token(b.special_surface, b.kind, frozenset(features), (b.start, b.end), tuple(b.marks))
                )
                continue
            surface = "".join(b.chars)
            kind = TokenKind.LINGUISTIC
            count = 0
            if _is_xrun(surface):
                kind = TokenKind.UNINTELLIGIBLE
                count = len(surface.rstrip("-"))
                features.add(Feature.UNINTELLIGIBLE)
            else:
                letters = [ch for ch in surface if ch.isalpha()]
                if len(letters) >= 2 and all(ch.isupper() for ch in letters):
                    features.add(Feature.HIGHER_VOLUME)
            if len(surface) > 1 and surface.endswith("-"):
                features.add(Feature.INTERRUPTED)
            out.append(Token(surface, kind, frozenset(features), (b.start, b.end), tuple(b.marks), count))
        return out


def _is_xrun(surface: str) -> bool:
    core = surface.rstrip("-")
    return bool(core) and set(core) <= {"x", "X"}


def validate_markup(raw_text: str) -> list[ValidationIssue]:
    """Markup problems in one TU text; an empty list means well formed."""
    sc = _Scanner(raw_text)
    sc.run()
    return sc.issues


def tokenize_tu(raw_text: str, strict: bool = True) -> list[Token]:
    """Split a normalized TU text into tokens carrying Jefferson features.

    With ``strict`` any validation issue raises :class:`MarkupError`.
    Otherwise spans left open run to the end of the TU and stray closing
    symbols are kept as marks without effect.
    """
    sc = _Scanner(raw_text)
    sc.run()
    if strict and sc.issues:
        raise MarkupError(sc.issues)
    return sc.build()


def render_tokens(tokens: Sequence[Token]) -> str:
    """Inverse of tokenization: tokens glued where their spans touched."""
    parts: list[str] = []
    prev_end: int | None = None
    for tok in tokens:
        if prev_end is not None and tok.char_span[0] != prev_end:
            parts.append(" ")
        parts.append(tok.render())
        prev_end = tok.char_span[1]
    return "".join(parts)


UNINTELLIGIBLE_KEY = "xxx"


def comparison_key(tok: Token) -> str:
    """Equality key used by the aligner: lowercased surface, 'xxx' for unintelligible."""
    if tok.kind is TokenKind.UNINTELLIGIBLE:
        return UNINTELLIGIBLE_KEY
    if tok.kind is not TokenKind.LINGUISTIC:
        raise TokenKindError(f"no comparison key for {tok.kind.value} token")
    return tok.surface.replace("’", "'").lower()


def overlap_span_count(raw_text: str) -> int:
    """Number of '[' runs, i.e. annotated overlap spans, in a TU text."""
    return len(re.findall(r"\[+", raw_text))


def tokenize_transcript(t: Transcript, strict: bool = False) -> Transcript:
    """Return ``t`` with tokens populated on every TU."""
    return t.with_units(tu.with_tokens(tokenize_tu(tu.raw_text, strict=strict)) for tu in t.units)


def validate_transcript(t: Transcript) -> list[ValidationIssue]:
    """Validation issues of every TU, tagged with the TU's index."""
    out = []
    for idx, tu in enumerate(t.units):
        out.extend(issue.at_unit(idx) for issue in validate_markup(tu.raw_text))
    return out


def alignable(tokens: Iterable[Token]) -> list[Token]:
    return [tok for tok in tokens if tok.is_alignable]
