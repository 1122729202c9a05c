"""Italian cardinal numerals, 0 to 999999."""

from __future__ import annotations

_UNITS = [
    "zero", "uno", "due", "tre", "quattro", "cinque", "sei", "sette", "otto", "nove",
    "dieci", "undici", "dodici", "tredici", "quattordici", "quindici", "sedici",
    "diciassette", "diciotto", "diciannove",
]
_TENS = ["", "", "venti", "trenta", "quaranta", "cinquanta", "sessanta", "settanta", "ottanta", "novanta"]

MAX_NUMBER = 999_999


def _below_100(n: int) -> str:
    if n < 20:
        return _UNITS[n]
    tens, unit = divmod(n, 10)
    word = _TENS[tens]
    if unit == 0:
        return word
    if unit in (1, 8):
        # venti + uno -> ventuno, trenta + otto -> trentotto
        word = word[:-1]
    return word + _UNITS[unit]


def _below_1000(n: int) -> str:
    hundreds, rest = divmod(n, 100)
    if hundreds == 0:
        return _below_100(rest)
    head = "cento" if hundreds == 1 else _UNITS[hundreds] + "cento"
    if rest == 0:
        return head
    tail = _below_100(rest)
    if tail.startswith("ottant"):
        # centottanta, not centoottanta; cento + uno/otto keep both vowels
        head = head[:-1]
    return head + tail


def number_to_words_it(n: int) -> str:
    """Spell out ``n`` as an Italian cardinal (``21 -> "ventuno"``).

    Compounds ending in -tre take the accent (ventitré); after "cento" the
    vowel is kept before uno/otto (centouno, centootto).
    """
    if isinstance(n, bool) or not isinstance(n, int):
        raise TypeError(f"expected int, got {type(n).__name__}")
    if not 0 <= n <= MAX_NUMBER:
        raise ValueError(f"{n} outside supported range 0..{MAX_NUMBER}")
    if n < 1000:
        words = _below_1000(n)
    else:
        thousands, rest = divmod(n, 1000)
        head = "mille" if thousands == 1 else _below_1000(thousands) + "mila"
        words = head + (_below_1000(rest) if rest else "")
    if words.endswith("tre") and words != "tre":
        words = words[:-3] + "tré"
    return words
