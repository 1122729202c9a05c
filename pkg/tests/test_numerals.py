import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ITALIAN_0_100, ITALIAN_SELECTED
from tuqa.numerals import MAX_NUMBER, number_to_words_it


@pytest.mark.parametrize("n", range(101))
def test_zero_to_hundred_matches_table(n):
    assert number_to_words_it(n) == ITALIAN_0_100[n]


@pytest.mark.parametrize("n, words", sorted(ITALIAN_SELECTED.items()))
def test_selected_larger_numbers(n, words):
    assert number_to_words_it(n) == words


@pytest.mark.parametrize("bad", [-1, MAX_NUMBER + 1])
def test_out_of_range(bad):
    with pytest.raises(ValueError):
        number_to_words_it(bad)


@pytest.mark.parametrize("bad", [1.5, "3", True])
def test_non_integer(bad):
    with pytest.raises(TypeError):
        number_to_words_it(bad)


@given(st.integers(0, MAX_NUMBER))
def test_words_are_single_lowercase_tokens(n):
    w = number_to_words_it(n)
    assert w and " " not in w and w == w.lower()
    assert not any(c.isdigit() for c in w)
