import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import levenshtein_recursive
from tuqa.align import OpKind, needleman_wunsch
from tuqa.mismatches import (
    MANUAL_ONLY,
    REVIEW_COLUMNS,
    Confidence,
    MismatchCategory,
    MismatchRecord,
    apply_review_csv,
    classify_alignment,
    classify_mismatch,
    default_lexicon,
    extract_mismatches,
    group_adjacent,
    is_elision_pair,
    is_interruption_pair,
    levenshtein,
    load_lexicon,
    normalized_distance,
    summarize,
    write_review_csv,
)

C = MismatchCategory


def classify_pair(ref, hyp):
    (rec,) = classify_alignment(needleman_wunsch(ref.split(), hyp.split()), group=True)
    return rec.category


@pytest.mark.parametrize(
    "ref, hyp, expected",
    [
        ("mh", "mmm", C.ORTHOGRAPHIC_VARIANT),
        ("mmm", "mh", C.ORTHOGRAPHIC_VARIANT),
        ("sala-", "salare", C.INTERRUPTION_COMPLETION),
        ("salare", "sala-", C.INTERRUPTION_COMPLETION),
        ("l'avevi", "la avevi", C.ELISION),
        ("la avevi", "l'avevi", C.ELISION),
        ("sono", "son", C.ELISION),
        ("comunque", "ovunque", C.APPROXIMATION),
        ("casa", "pane", C.UNCLASSIFIED),
    ],
)
def test_example_pairs(ref, hyp, expected):
    assert classify_pair(ref, hyp) is expected


def test_insertion_and_deletion_categories():
    a = needleman_wunsch(["a", "b"], ["a", "b", "poi"])
    (rec,) = classify_alignment(a)
    assert rec.category is C.ADDED_CONTENT and rec.ref_token is None
    a = needleman_wunsch(["a", "b", "poi"], ["a", "b"])
    (rec,) = classify_alignment(a)
    assert rec.category is C.SKIPPED_CONTENT and rec.hyp_token is None


def test_lexicon_wins_over_later_rules():
    lex = default_lexicon() | {frozenset(("casa", "pane"))}
    rec = MismatchRecord(tuple(needleman_wunsch(["casa"], ["pane"]).ops), "casa", "pane")
    assert classify_mismatch(rec, lex).category is C.ORTHOGRAPHIC_VARIANT


def test_load_lexicon(tmp_path):
    p = tmp_path / "lex.tsv"
    p.write_text("# custom\nokay\tok\n")
    lex = load_lexicon(p)
    assert frozenset(("ok", "okay")) in lex
    assert frozenset(("mh", "mmm")) in lex
    assert frozenset(("mh", "mmm")) not in load_lexicon(p, extend_default=False)


def test_string_relations():
    assert is_interruption_pair("f-", "fatto")
    assert not is_interruption_pair("f-", "ho")
    assert is_elision_pair("bene", "ben")
    assert is_elision_pair("un'altra", "una altra")
    assert not is_elision_pair("casa", "casale")
    assert not is_elision_pair("casa", "pane")
    assert normalized_distance("", "") == 0.0


def test_grouping_merges_runs_only():
    a = needleman_wunsch("x l'avevi y".split(), "x la avevi y".split())
    (rec,) = group_adjacent(a)
    assert (rec.ref_token, rec.hyp_token) == ("l'avevi", "la avevi")
    assert len(rec.ops) == 2
    assert len(extract_mismatches(a)) == 2


def test_out_of_range_ops_detected():
    a = needleman_wunsch(["a"], ["b"])
    with pytest.raises(AssertionError):
        extract_mismatches(a, [], ["b"])


def test_record_invariants():
    ins = needleman_wunsch([], ["x"]).ops
    with pytest.raises(ValueError):
        MismatchRecord(ins, "x", "x")
    with pytest.raises(ValueError):
        MismatchRecord((), None, "x")


def test_summary():
    a = needleman_wunsch("uno due".split(), "uno due tre quattro".split())
    s = summarize(classify_alignment(a))
    assert s["total"] == 2
    assert s["by_category"]["AddedContent"] == 2
    assert s["avg_len_added"] == 5.0  # "tre", "quattro"
    assert s["avg_len_skipped"] is None


def test_review_round_trip():
    recs = classify_alignment(needleman_wunsch("mario va a casa".split(), "maria va casa".split()))
    text = write_review_csv(recs)
    lines = text.splitlines()
    assert lines[0].split(",") == list(REVIEW_COLUMNS)
    assert apply_review_csv(recs, text) == recs  # no overrides, no change
    lines[1] = lines[1] + "ProperName"
    out = apply_review_csv(recs, "\n".join(lines) + "\n")
    assert out[0].category is C.PROPER_NAME
    assert out[0].confidence is Confidence.MANUAL
    assert out[1:] == recs[1:]
    # manual decisions survive reclassification
    assert classify_mismatch(out[0]) is out[0]


def test_review_rejects_unknown_category():
    recs = classify_alignment(needleman_wunsch(["a"], ["b"]))
    text = write_review_csv(recs).rstrip("\n") + "Nonsense\n"
    with pytest.raises(ValueError, match="unknown category"):
        apply_review_csv(recs, text)


# -- properties --------------------------------------------------------------------------

short = st.text(alphabet="abcè'-", max_size=8)


@given(short, short)
def test_levenshtein_against_oracle(a, b):
    assert levenshtein(a, b) == levenshtein_recursive(a, b)
    assert levenshtein(a, b) == levenshtein(b, a)
    assert 0.0 <= normalized_distance(a, b) <= 1.0


@given(short, short)
def test_relations_symmetric(a, b):
    assert is_interruption_pair(a, b) == is_interruption_pair(b, a)
    assert is_elision_pair(a, b) == is_elision_pair(b, a)


words = st.lists(st.sampled_from(["mh", "mmm", "sala-", "salare", "sono", "son", "casa", "pane", "l'avevi", "la"]), max_size=10)


@settings(max_examples=300)
@given(words, words)
def test_record_count_and_invariants(ref, hyp):
    a = needleman_wunsch(ref, hyp)
    recs = classify_alignment(a)
    c = a.counts
    assert len(recs) == c.substitutions + c.deletions + c.insertions
    for r in recs:
        assert r.category not in MANUAL_ONLY
        assert r.confidence is Confidence.HEURISTIC
        if r.kind is OpKind.INSERTION:
            assert r.ref_token is None and r.category is C.ADDED_CONTENT
        if r.kind is OpKind.DELETION:
            assert r.hyp_token is None and r.category is C.SKIPPED_CONTENT
    grouped = classify_alignment(a, group=True)
    assert sum(len(r.ops) for r in grouped) == len(recs)
    assert all(r.category not in MANUAL_ONLY for r in grouped)
    assert classify_alignment(a, group=True) == grouped


@settings(max_examples=300)
@given(words, words)
def test_swap_symmetry_of_substitution_categories(ref, hyp):
    # classification of a substitution does not depend on which side is gold
    for r in classify_alignment(needleman_wunsch(ref, hyp)):
        if r.kind is OpKind.SUBSTITUTION:
            flipped = MismatchRecord(r.ops, r.hyp_token, r.ref_token)
            assert classify_mismatch(flipped).category is r.category
