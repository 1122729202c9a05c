"""Cleaning and standardization of TU text before any analysis.

The pipeline: whitespace cleanup, digits to Italian words, whitelist-based
character removal (every removed character is logged), spacing around
brackets and punctuation, removal of short pauses at the TU edges, and
whole-token orthographic corrections. The steps are repeated until the text
stops changing, so :func:`normalize_text` is idempotent by construction.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from tuqa.jefferson import JEFFERSON_SYMBOLS
from tuqa.model import Transcript
from tuqa.numerals import MAX_NUMBER, number_to_words_it

log = logging.getLogger(__name__)

_MAX_PASSES = 20


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CorrectionRule:
    pattern: str
    replacement: str

    def __post_init__(self) -> None:
        if not self.pattern or not self.replacement:
            raise ConfigError("correction pattern and replacement must be non-empty")
        if self.pattern == self.replacement:
            raise ConfigError(f"correction {self.pattern!r} maps to itself")
        if any(c.isspace() for c in self.pattern + self.replacement):
            raise ConfigError(f"correction {self.pattern!r} -> {self.replacement!r} spans more than one token")


def _check_rules(rules: Sequence[CorrectionRule]) -> None:
    seen: set[str] = set()
    for r in rules:
        if r.pattern in seen:
            raise ConfigError(f"duplicate correction pattern {r.pattern!r}")
        seen.add(r.pattern)
    for r in rules:
        if r.replacement in seen:
            # chains can cycle and break idempotence
            raise ConfigError(f"replacement {r.replacement!r} is itself a correction pattern")


def load_corrections(path: str | Path) -> list[CorrectionRule]:
    """Read a two-column ``pattern<TAB>replacement`` file; '#' starts a comment line."""
    text = Path(path).read_text(encoding="utf-8")
    return _parse_rules(text, str(path))


def _parse_rules(text: str, label: str) -> list[CorrectionRule]:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ConfigError(f"{label}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
        rules.append(CorrectionRule(cols[0].strip(), cols[1].strip()))
    return rules


def default_corrections() -> tuple[CorrectionRule, ...]:
    text = resources.files("tuqa").joinpath("data/corrections.tsv").read_text(encoding="utf-8")
    return tuple(_parse_rules(text, "corrections.tsv"))


@dataclass(frozen=True)
class NormalizationConfig:
    corrections: tuple[CorrectionRule, ...] = field(default_factory=default_corrections)
    strip_edge_pauses: bool = True
    number_conversion: bool = True
    # allowed on top of letters, digits, apostrophe, hyphen, space and Jefferson symbols
    extra_allowed: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "corrections", tuple(self.corrections))
        _check_rules(self.corrections)

    def with_overrides(self, rules: Iterable[CorrectionRule]) -> NormalizationConfig:
        """User rules replace defaults sharing the same pattern and are added otherwise."""
        rules = list(rules)
        _check_rules_unique(rules)
        by_pattern = {r.pattern: r for r in self.corrections}
        for r in rules:
            by_pattern[r.pattern] = r
        return NormalizationConfig(
            tuple(by_pattern.values()), self.strip_edge_pauses, self.number_conversion, self.extra_allowed
        )

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> NormalizationConfig:
        return cls(**kwargs).with_overrides(load_corrections(path))


def _check_rules_unique(rules: Sequence[CorrectionRule]) -> None:
    patterns = [r.pattern for r in rules]
    dupes = sorted({p for p in patterns if patterns.count(p) > 1})
    if dupes:
        raise ConfigError(f"duplicate correction patterns: {', '.join(dupes)}")


def apply_corrections(token: str, rules: Sequence[CorrectionRule]) -> str:
    """Whole-token replacement; the first rule whose pattern equals ``token`` wins."""
    _check_rules_unique(rules)
    for rule in rules:
        if rule.pattern == token:
            return rule.replacement
    return token


# -- pipeline steps ---------------------------------------------------------

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'", "´": "'"})
_NUMERAL = re.compile(r"(?<!\w)\d+(?:[.,:/]\d+)*(?!\w)")
_EDGE_STRIP = "[]()°<>=,?.:"


def convert_numbers(text: str, warn: bool = True) -> str:
    def repl(m: re.Match) -> str:
        s = m.group()
        if s.isdigit() and int(s) <= MAX_NUMBER:
            return number_to_words_it(int(s))
        if warn:
            log.warning("numeral %r left unchanged (only integers 0..%d are converted)", s, MAX_NUMBER)
        return s

    return _NUMERAL.sub(repl, text)


def remove_disallowed(text: str, extra_allowed: str = "") -> str:
    allowed = set(JEFFERSON_SYMBOLS) | set("'- ") | set(extra_allowed)
    out = []
    for i, c in enumerate(text):
        if c.isalpha() or c.isdigit() or c in allowed:
            out.append(c)
        else:
            log.info("removed non-Jefferson character %r at offset %d", c, i)
    return "".join(out)


def _bracket_roles(s: str) -> dict[int, str]:
    """Open/close role of each paired-symbol character, tracked per symbol type."""
    roles: dict[int, str] = {}
    lower = faster = slower = False
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if s.startswith("(.)", i):
            i += 3
            continue
        if s.startswith("((", i):
            close = s.find("))", i + 2)
            roles[i] = roles[i + 1] = "open"
            if close < 0:
                break
            roles[close] = roles[close + 1] = "close"
            i = close + 2
            continue
        if s.startswith("))", i):
            roles[i] = roles[i + 1] = "close"
            i += 2
            continue
        if c in "[(":
            roles[i] = "open"
        elif c in "])":
            roles[i] = "close"
        elif c == "°":
            roles[i] = "close" if lower else "open"
            lower = not lower
        elif c == ">":
            roles[i] = "close" if slower else "open"
            if slower:
                slower = False
            else:
                faster = True
        elif c == "<":
            roles[i] = "close" if faster else "open"
            if faster:
                faster = False
            else:
                slower = True
        i += 1
    return roles


def tighten_spacing(s: str) -> str:
    """Glue paired symbols and punctuation to the words they mark.

    ``"word ,"`` becomes ``"word,"``, ``"[ word ]"`` becomes ``"[word]"`` and
    ``"a = b"`` becomes ``"a=b"``.
    """
    s = re.sub(r"\s+(?=[,?])", "", s)
    s = re.sub(r"\s+(?=\.(?!\)))", "", s)
    s = re.sub(r"\s*=\s*", "=", s)
    roles = _bracket_roles(s)
    n = len(s)
    keep = [True] * n
    space_before: set[int] = set()
    space_after: set[int] = set()
    for i, role in roles.items():
        if role == "open":
            j = i + 1
            while j < n and s[j] == " ":
                keep[j] = False
                j += 1
            if j > i + 1 and i > 0 and s[i - 1] != " " and roles.get(i - 1) != "open":
                space_before.add(i)
        else:
            j = i - 1
            while j >= 0 and s[j] == " ":
                keep[j] = False
                j -= 1
            if j < i - 1 and i + 1 < n and s[i + 1] != " " and roles.get(i + 1) != "close" and s[i + 1] not in ",?.=":
                space_after.add(i)
    out = []
    for i, c in enumerate(s):
        if not keep[i]:
            continue
        if i in space_before:
            out.append(" ")
        out.append(c)
        if i in space_after:
            out.append(" ")
    return "".join(out)


def strip_edge_pauses(s: str) -> str:
    s = re.sub(r"^(?:\(\.\)\s*)+", "", s)
    s = re.sub(r"(?:\s*\(\.\))+$", "", s)
    return s


def _correct_token(tok: str, table: dict[str, str]) -> str:
    if tok == "(.)":
        return tok
    core = tok.lstrip(_EDGE_STRIP)
    lead = tok[: len(tok) - len(core)]
    stripped = core.rstrip(_EDGE_STRIP)
    trail = core[len(stripped):]
    fixed = table.get(stripped)
    if fixed is None:
        return tok
    return lead + fixed + trail


def _collapse(s: str) -> str:
    return re.sub(r"\s+", " ", s).strip()


def _normalize_once(s: str, cfg: NormalizationConfig, table: dict[str, str], first: bool) -> str:
    s = s.translate(_APOSTROPHES)
    s = _collapse(s)
    if cfg.number_conversion:
        s = convert_numbers(s, warn=first)
    s = remove_disallowed(s, cfg.extra_allowed)
    s = _collapse(s)
    s = tighten_spacing(s)
    if cfg.strip_edge_pauses:
        s = strip_edge_pauses(s)
    s = " ".join(_correct_token(t, table) for t in s.split(" ")) if s else s
    return _collapse(s)


DEFAULT_CONFIG: NormalizationConfig | None = None


def _default_config() -> NormalizationConfig:
    global DEFAULT_CONFIG
    if DEFAULT_CONFIG is None:
        DEFAULT_CONFIG = NormalizationConfig()
    return DEFAULT_CONFIG


def normalize_text(raw: str, cfg: NormalizationConfig | None = None) -> str:
    """Clean one TU text. The result is a fixed point: normalizing it again changes nothing."""
    cfg = cfg or _default_config()
    table = {r.pattern: r.replacement for r in cfg.corrections}
    s = raw
    for i in range(_MAX_PASSES):
        nxt = _normalize_once(s, cfg, table, first=i == 0)
        if nxt == s:
            return s
        s = nxt
    log.warning("normalization did not converge for %r", raw)
    return s


def normalize_transcript(t: Transcript, cfg: NormalizationConfig | None = None) -> Transcript:
    return t.with_units(tu.with_text(normalize_text(tu.raw_text, cfg)) for tu in t.units)
