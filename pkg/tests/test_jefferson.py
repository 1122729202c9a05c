import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuqa.jefferson import (
    MARKUP_CHARS,
    Feature,
    IssueKind,
    MarkupError,
    TokenKind,
    TokenKindError,
    comparison_key,
    render_tokens,
    tokenize_tu,
    validate_markup,
    validate_transcript,
)

# -- annotated examples -------------------------------------------------------------


def kinds(text):
    return [t.kind for t in tokenize_tu(text)]


def test_plain_tu_with_pause():
    toks = tokenize_tu("sì (.) non era pesantissima")
    assert [t.surface for t in toks] == ["sì", "", "non", "era", "pesantissima"]
    assert kinds("sì (.) non era pesantissima").count(TokenKind.LINGUISTIC) == 4
    assert toks[1].kind is TokenKind.SHORT_PAUSE
    assert Feature.SHORT_PAUSE in toks[1].features
    assert toks[0].features == frozenset()


def test_lower_volume():
    (tok,) = tokenize_tu("°fuori°")
    assert tok.surface == "fuori"
    assert tok.features == {Feature.LOWER_VOLUME}


def test_prolongation():
    (tok,) = tokenize_tu("metti:")
    assert tok.surface == "metti"
    assert tok.features == {Feature.PROLONGATION}
    assert tok.prolongations == (5,)


def test_word_internal_prolongation():
    (tok,) = tokenize_tu("li:-")
    assert tok.surface == "li-"
    assert {Feature.PROLONGATION, Feature.INTERRUPTED} <= tok.features


def test_unintelligible_count():
    toks = tokenize_tu("xxxx ha detto")
    assert toks[0].kind is TokenKind.UNINTELLIGIBLE
    assert toks[0].count == 4
    assert comparison_key(toks[0]) == "xxx"


def test_non_verbal():
    toks = tokenize_tu("santo stefano ((ride))")
    assert toks[-1].kind is TokenKind.NON_VERBAL
    assert toks[-1].description == "ride"
    assert Feature.NON_VERBAL in toks[-1].features


def test_non_verbal_with_spaces_is_one_token():
    toks = tokenize_tu("((si schiarisce la voce)) allora")
    assert len(toks) == 2
    assert toks[0].description == "si schiarisce la voce"


def test_overlap_inside_word():
    toks = tokenize_tu("[uni]ca cosa, ho esagerato")
    assert toks[0].surface == "unica"
    assert Feature.OVERLAP in toks[0].features
    assert Feature.WEAKLY_RISING in toks[1].features
    assert toks[1].surface == "cosa"
    assert all(Feature.OVERLAP not in t.features for t in toks[1:])


def test_multi_token_overlap_span():
    toks = tokenize_tu("nell'im[pasto ce ne ho messo il] giusto")
    flagged = [t.surface for t in toks if Feature.OVERLAP in t.features]
    assert flagged == ["nell'impasto", "ce", "ne", "ho", "messo", "il"]


def test_intonation_features():
    toks = tokenize_tu("ma nell'impasto? no fuori, sì.")
    assert Feature.RISING in toks[1].features
    assert Feature.WEAKLY_RISING in toks[3].features
    assert Feature.FALLING in toks[4].features
    assert [t.surface for t in toks] == ["ma", "nell'impasto", "no", "fuori", "sì"]


def test_higher_volume_needs_two_letters():
    toks = tokenize_tu("PERÒ E basta")
    assert Feature.HIGHER_VOLUME in toks[0].features
    assert Feature.HIGHER_VOLUME not in toks[1].features
    assert comparison_key(toks[0]) == "però"


def test_speed_spans():
    toks = tokenize_tu(">°quindi forse quello [sì°]<")
    assert all(Feature.FASTER in t.features for t in toks)
    assert all(Feature.LOWER_VOLUME in t.features for t in toks)
    assert Feature.OVERLAP in toks[-1].features
    slow = tokenize_tu("<piano piano> poi")
    assert [Feature.SLOWER in t.features for t in slow] == [True, True, False]


def test_uncertain_and_interrupted():
    toks = tokenize_tu("ho f- (pure)")
    assert Feature.INTERRUPTED in toks[1].features
    assert toks[1].surface == "f-"
    assert Feature.UNCERTAIN in toks[2].features
    assert toks[2].surface == "pure"


def test_prosodic_link():
    toks = tokenize_tu("allora=dimmi")
    assert [t.surface for t in toks] == ["allora", "dimmi"]
    assert Feature.PROSODIC_LINK in toks[0].features
    assert render_tokens(toks) == "allora=dimmi"


def test_comparison_key():
    assert comparison_key(tokenize_tu("sala-")[0]) == "sala-"
    assert comparison_key(tokenize_tu("Po’")[0]) == "po'"
    with pytest.raises(TokenKindError):
        comparison_key(tokenize_tu("(.)")[0])
    with pytest.raises(TokenKindError):
        comparison_key(tokenize_tu("((ride))")[0])


# -- validation -------------------------------------------------------------------


def test_validation_examples():
    assert validate_markup("[uni]ca cosa, ho esagerato") == []
    assert [i.kind for i in validate_markup("[[vabbè")] == [IssueKind.REPEATED_OPEN_BRACKET]
    issues = validate_markup("°fuori")
    assert [i.kind for i in issues] == [IssueKind.UNBALANCED_BRACKET]
    assert "°" in issues[0].detail


@pytest.mark.parametrize(
    "text, kind",
    [
        ("(..) allora", IssueKind.MALFORMED_PAUSE),
        ("( . ) allora", IssueKind.MALFORMED_PAUSE),
        ("parxxxola", IssueKind.UNKNOWN_SYMBOL),
        ("ciao ]", IssueKind.UNBALANCED_BRACKET),
        ("((ride", IssueKind.UNBALANCED_BRACKET),
        ("ciao # no", IssueKind.UNKNOWN_SYMBOL),
        ("<lento", IssueKind.UNBALANCED_BRACKET),
        ("(forse", IssueKind.UNBALANCED_BRACKET),
    ],
)
def test_validation_issue_kinds(text, kind):
    issues = validate_markup(text)
    assert kind in [i.kind for i in issues]
    assert all(i.detail for i in issues)


def test_strict_tokenization_raises():
    with pytest.raises(MarkupError) as exc:
        tokenize_tu("[[vabbè")
    assert exc.value.issues[0].kind is IssueKind.REPEATED_OPEN_BRACKET
    # lenient mode still tokenizes
    toks = tokenize_tu("[[vabbè", strict=False)
    assert toks[0].surface == "vabbè"


def test_fixtures_validate_clean(cooking, gelato, bangla):
    for t in (cooking, gelato, bangla):
        assert validate_transcript(t) == []


# -- properties ---------------------------------------------------------------------

letters = st.text(alphabet="abcdeilmnoprstuvàèéìòù", min_size=2, max_size=7)


@st.composite
def words(draw):
    w = draw(letters)
    if draw(st.booleans()):
        k = draw(st.integers(1, len(w)))
        w = w[:k] + ":" * draw(st.integers(1, 2)) + w[k:]
    if draw(st.integers(0, 5)) == 0:
        w = w.upper().replace(":", "") if draw(st.booleans()) else w + "-"
    if draw(st.integers(0, 4)) == 0:
        w = w + draw(st.sampled_from(",?."))
    return w


SPANS = {"[": "]", "°": "°", ">": "<", "<": ">", "(": ")"}
SPAN_FEATURE = {
    "[": Feature.OVERLAP,
    "°": Feature.LOWER_VOLUME,
    ">": Feature.FASTER,
    "<": Feature.SLOWER,
    "(": Feature.UNCERTAIN,
}


@st.composite
def tu_texts(draw):
    """Well-formed TU text: segments of words, optionally wrapped in one span type."""
    parts = []
    for _ in range(draw(st.integers(1, 5))):
        choice = draw(st.integers(0, 9))
        if choice == 0:
            parts.append("(.)")
        elif choice == 1:
            parts.append("((" + draw(st.sampled_from(["ride", "tossisce", "si schiarisce la voce"])) + "))")
        elif choice == 2:
            parts.append("x" * draw(st.integers(1, 5)))
        else:
            ws = draw(st.lists(words(), min_size=1, max_size=3))
            opener = draw(st.sampled_from([None, "[", "°", ">", "<", "("]))
            seg = " ".join(ws)
            parts.append(seg if opener is None else opener + seg + SPANS[opener])
    return " ".join(parts)


def span_intervals(text, opener):
    """Brute-force scan: (open offset, close offset) of each span of one type."""
    closer = SPANS[opener]
    out, i = [], 0
    masked = text.replace("(.)", "   ")
    masked = re.sub(r"\(\([^)]*\)\)", lambda m: " " * len(m.group()), masked)
    while i < len(masked):
        if masked[i] == opener:
            j = masked.index(closer, i + 1)
            out.append((i, j))
            i = j + 1
        else:
            i += 1
    return out


@settings(max_examples=300)
@given(tu_texts())
def test_round_trip_and_validity(text):
    assert validate_markup(text) == []
    toks = tokenize_tu(text)
    assert render_tokens(toks) == text


@settings(max_examples=300)
@given(tu_texts())
def test_surface_has_no_markup(text):
    for tok in tokenize_tu(text):
        if tok.kind in (TokenKind.LINGUISTIC, TokenKind.UNINTELLIGIBLE):
            assert not set(tok.surface) & set(MARKUP_CHARS)


@settings(max_examples=300)
@given(tu_texts())
def test_pause_count_preserved(text):
    toks = tokenize_tu(text)
    assert sum(t.kind is TokenKind.SHORT_PAUSE for t in toks) == text.count("(.)")
    for t in toks:
        assert (t.kind is TokenKind.SHORT_PAUSE) == (t.surface == "" and Feature.SHORT_PAUSE in t.features)
        assert (t.kind is TokenKind.NON_VERBAL) == (Feature.NON_VERBAL in t.features)


@settings(max_examples=300)
@given(tu_texts())
def test_span_feature_locality(text):
    toks = tokenize_tu(text)
    # "<" and ">" share characters between the two speed spans; test each
    # type only when the other does not occur
    for opener, feature in SPAN_FEATURE.items():
        if opener in "<>" and "<" in text and ">" in text:
            continue
        spans = span_intervals(text, opener)
        for tok in toks:
            if tok.kind is TokenKind.SHORT_PAUSE:
                continue
            a, b = tok.char_span
            inside = any(a < hi and b > lo for lo, hi in spans)
            assert (feature in tok.features) == inside, (text, tok, opener)
