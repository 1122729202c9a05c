import csv
import io
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuqa.align import Counts, needleman_wunsch
from tuqa.io import round2
from tuqa.jefferson import TokenKind, tokenize_transcript
from tuqa.metrics import (
    DELTA_CONVENTION,
    LONGFORM_COLUMNS,
    MEASURES,
    PerMinuteStats,
    Run,
    compute_deltas,
    compute_wer,
    export_longform,
    mean_deltas,
    per_minute_stats,
    summary_stats,
    write_longform_csv,
)
from tuqa.model import TranscriptError, TranscriptMeta, build_transcript


def tok(rows, meta=None):
    return tokenize_transcript(build_transcript(rows, meta=meta))


# -- WER ----------------------------------------------------------------------------


def test_wer_identical():
    w = compute_wer(needleman_wunsch(list("abcd"), list("abcd")))
    assert w.wer == 0.0
    assert w.correct == w.n == 4


def test_wer_formula():
    w = compute_wer(Counts(substitutions=1, deletions=1, insertions=1, correct=7))
    assert w.n == 9
    assert w.wer == pytest.approx(3 / 9)


def test_wer_four_token_fixture():
    w = compute_wer(needleman_wunsch(list("abcd"), list("axc")))
    assert (w.substitutions, w.deletions, w.insertions, w.n) == (1, 1, 0, 4)
    assert w.wer == 0.5
    assert w.percent == 50.0


def test_wer_empty_reference_warns(caplog):
    with caplog.at_level(logging.WARNING):
        w = compute_wer(Counts(insertions=2))
    assert w.wer is None and w.percent is None
    assert "undefined" in caplog.text


@given(st.lists(st.sampled_from("abc"), max_size=12), st.lists(st.sampled_from("abc"), max_size=12))
def test_wer_counts_identity(ref, hyp):
    w = compute_wer(needleman_wunsch(ref, hyp))
    assert w.n == w.substitutions + w.deletions + w.correct == len(ref)
    if w.n:
        assert w.wer == (w.substitutions + w.deletions + w.insertions) / w.n
        assert w.wer >= 0


# -- per-minute statistics -----------------------------------------------------------


def test_cooking_minute_zero(cooking):
    (m0,) = per_minute_stats(cooking)
    # hand count over the seven printed TUs
    assert m0.tu_count == 7
    assert m0.short_pause_count == 3
    assert m0.unknown_count == 1
    assert m0.non_verbal_count == 0
    assert m0.linguistic_tokens == 68
    assert m0.total_tokens == 68
    assert m0.intonation_count == 3  # cosa, nell'impasto? fuori,
    assert m0.prolongation_count == 3  # metti: là: messo:
    assert m0.overlap_token_count == 10
    assert m0.uncertain_count == 2  # (ha-) (pure)
    assert m0.error_count == 0
    assert m0.tu_duration_s == pytest.approx(2.93 + 1.18 + 2.87 + 1.43 + 3.30 + 0.97 + 11.66)


def test_cooking_types_by_hand(cooking):
    words = """sì non era pesantissima per niente ha- unica cosa ho esagerato un po' con l'olio forse però
    ma nell'impasto no fuori fuori nell'impasto ce ne ho messo il giusto però in padella nella padella
    xxx ha detto metti quello là l'olio da friggere così vengono meglio ho detto okay e ho fatto però
    praticamente ho f- pure ho messo tutto il fondo della padella era pieno di olio""".split()
    assert len(words) == 68
    (m0,) = per_minute_stats(cooking)
    assert m0.types == len(set(words))


def test_summary_cooking(cooking):
    s = summary_stats(cooking)
    assert s.total_tus == 7
    assert round2(s.avg_tokens_per_tu) == 9.71


def test_empty_transcript_stats():
    t = tok([])
    assert per_minute_stats(t) == []
    s = summary_stats(t)
    assert s.total_tus == 0
    assert s.avg_tokens_per_tu is None and s.tokens_per_min is None


def test_binning_by_start_time():
    bins = per_minute_stats(tok([("A", 61.0, 62.0, "ciao come va")]))
    assert bins[0] == PerMinuteStats(0)
    assert bins[1].linguistic_tokens == 3
    assert bins[0].avg_tokens_per_tu is None


def test_tu_crossing_boundary_counts_in_start_bin():
    bins = per_minute_stats(tok([("A", 59.0, 65.0, "uno due")]))
    assert len(bins) == 1 and bins[0].linguistic_tokens == 2


def test_max_minutes_truncates_and_fills():
    t = tok([("A", 0, 1, "uno"), ("A", 130, 131, "due")])
    assert len(per_minute_stats(t, max_minutes=2)) == 2
    assert len(per_minute_stats(t, max_minutes=5)) == 5


def test_origin_shifts_bins():
    t = tok([("A", 684.82, 687.56, "il tuo posto"), ("A", 750.0, 751.0, "sì")])
    bins = per_minute_stats(t, origin=684.82)
    assert [b.linguistic_tokens for b in bins] == [3, 1]


def test_summary_rate_uses_span():
    s = summary_stats(tok([("A", 0, 60, "a b c d e f g h i l")]))
    assert s.tokens_per_min == 10.0
    assert s.types_per_min == 10.0


def test_error_count_uses_validation_issues():
    (m0,) = per_minute_stats(tok([("A", 0, 1, "[[vabbè"), ("B", 2, 3, "°fuori")]))
    assert m0.error_count == 2


def test_requires_tokens():
    with pytest.raises(TranscriptError):
        per_minute_stats(build_transcript([("A", 0, 1, "x")]))


WORDS = ["ciao", "sì", "[no]", "(.)", "((ride))", "xxx", "°piano°", "metti:", "bene,", "CIAO"]


@st.composite
def random_transcripts(draw):
    rows = []
    for _ in range(draw(st.integers(0, 25))):
        start = draw(st.integers(0, 300_000)) / 1000
        dur = draw(st.integers(0, 10_000)) / 1000
        text = " ".join(draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=6)))
        rows.append((draw(st.sampled_from(["A", "B"])), start, start + dur, text))
    return tok(rows)


COUNT_FIELDS = [m for m in MEASURES if not m.startswith("avg_")]


@settings(max_examples=200)
@given(random_transcripts())
def test_partition_and_bounds(t):
    bins = per_minute_stats(t)
    for b in bins:
        assert b.linguistic_tokens <= b.total_tokens
        assert b.types <= b.linguistic_tokens
        for f in COUNT_FIELDS:
            assert b.measures()[f] >= 0
    tokens = [tok for tu in t.units for tok in tu.tokens]
    assert sum(b.linguistic_tokens for b in bins) == sum(x.is_alignable for x in tokens)
    assert sum(b.short_pause_count for b in bins) == sum(x.kind is TokenKind.SHORT_PAUSE for x in tokens)
    assert sum(b.tu_count for b in bins) == len(t.units)
    assert sum(b.tu_duration_s for b in bins) == pytest.approx(sum(u.duration for u in t.units))


# -- deltas ---------------------------------------------------------------------------


def test_constructed_deltas():
    gold = [PerMinuteStats(0, tu_count=10, linguistic_tokens=100), PerMinuteStats(1, tu_count=12, linguistic_tokens=90)]
    cand = [PerMinuteStats(0, tu_count=13, linguistic_tokens=95), PerMinuteStats(1, tu_count=12, linguistic_tokens=82)]
    d = compute_deltas(gold, cand, first_n_minutes=2, measures=["linguistic_tokens", "tu_count", "avg_tokens_per_tu"])
    assert d.convention_note == DELTA_CONVENTION == "delta = candidate − gold"
    assert d.get("linguistic_tokens", 0) == -5
    assert d.get("linguistic_tokens", 1) == -8
    assert d.get("linguistic_tokens", 2) == 0  # missing bins count as zero
    assert d.get("tu_count", 0) == 3
    # 95/13 - 100/10 = -2.6923... -> -2.69
    assert [r["delta"] for r in d.to_list() if r["measure"] == "avg_tokens_per_tu"] == [-2.69, -0.67, None]


def test_deltas_identity():
    stats = [PerMinuteStats(0, tu_count=3, linguistic_tokens=20), PerMinuteStats(1, tu_count=1)]
    d = compute_deltas(stats, stats)
    assert all(r.delta in (0, None) for r in d.rows)
    assert {r.minute for r in d.rows} == {0, 1, 2}


def test_unknown_measure_rejected():
    with pytest.raises(ValueError):
        compute_deltas([], [], measures=["nope"])


stats_lists = st.lists(
    st.builds(
        PerMinuteStats,
        minute=st.integers(0, 3),
        tu_count=st.integers(0, 30),
        tu_duration_s=st.floats(0, 60, allow_nan=False),
        linguistic_tokens=st.integers(0, 300),
    ),
    max_size=4,
    unique_by=lambda s: s.minute,
)


@given(stats_lists, stats_lists)
def test_delta_antisymmetry(a, b):
    d1, d2 = compute_deltas(a, b), compute_deltas(b, a)
    for r1, r2 in zip(d1.rows, d2.rows):
        assert (r1.measure, r1.minute) == (r2.measure, r2.minute)
        if r1.delta is None:
            assert r2.delta is None
        else:
            assert r1.delta == -r2.delta


@given(stats_lists, stats_lists)
def test_delta_rounding_two_decimals(a, b):
    for r in compute_deltas(a, b).to_list():
        if r["delta"] is not None:
            assert r["delta"] == round(r["delta"], 2)
            assert len(repr(abs(r["delta"])).split(".")[1]) <= 2


def test_mean_deltas():
    g = [PerMinuteStats(0, tu_count=1)]
    d = mean_deltas([compute_deltas(g, [PerMinuteStats(0, tu_count=3)]), compute_deltas(g, [PerMinuteStats(0, tu_count=2)])])
    assert d.get("tu_count", 0) == 1.5


# -- long format -------------------------------------------------------------------------


def test_longform_rows_and_labels():
    runs = []
    for name, expert, phase in (("S", False, "manual"), ("T", True, "asr")):
        t = tok([("A", 0, 1, "uno"), ("A", 61, 62, "due"), ("A", 121, 122, "tre")], TranscriptMeta(name, expert, phase, "interview"))
        runs.append(Run(t, per_minute_stats(t)))
    rows = export_longform(runs, measures=["linguistic_tokens"])
    assert len(rows) == 6
    assert {r["expert"] for r in rows} == {"expert", "novice"}
    assert {r["phase"] for r in rows} == {"manual", "asr"}
    parsed = list(csv.DictReader(io.StringIO(write_longform_csv(rows))))
    assert tuple(parsed[0]) == LONGFORM_COLUMNS
    assert parsed[0]["delta_value"] == ""


def test_longform_delta_value():
    meta = TranscriptMeta("S", False, "manual", "free")
    t = tok([("A", 0, 1, "uno due tre")], meta)
    g = tok([("A", 0, 1, "uno due")])
    rows = export_longform([Run(t, per_minute_stats(t), per_minute_stats(g))], measures=["linguistic_tokens"])
    assert rows[0]["delta_value"] == 1


def test_longform_requires_meta():
    t = tokenize_transcript(build_transcript([("A", 0, 1, "uno")], source_label="cand.tsv"))
    with pytest.raises(TranscriptError, match="cand.tsv"):
        export_longform([Run(t, per_minute_stats(t))])
