"""Spanish transcript normalization and rule-based grapheme-to-phoneme conversion.

Castilian realization: distinción (z, ce, ci -> θ) and yeísmo (ll -> ʝ).
Everything here is a pure function of its inputs.
"""

import re
import unicodedata

from app.common import numbers
from app.common.phonemes import (
    ACCENTED_VOWELS,
    FRONT_VOWEL_LETTERS,
    LETTERS,
    SIMPLE_LETTERS,
    STRESS,
    STRONG_VOWEL_LETTERS,
    TRILL_TRIGGERS,
    VOWEL_LETTERS,
    WORD_BOUNDARY,
)
from app.core.exceptions import TextFrontendError, UnsupportedCharacterError
from app.schema.text import NormalizedText, PhonemeInventory, PhonemeSequence

DIGITS_RE = re.compile(r"\d+")
SPACES_RE = re.compile(r"\s+")

# longer digit groups are read one digit at a time
MAX_GROUP_DIGITS = 6


def expand_cardinal(n: int) -> str:
    """Spell ``n`` (0..999999) as a Spanish cardinal, without apocope."""
    if isinstance(n, bool) or not isinstance(n, int):
        raise TextFrontendError(f"cardinal must be an integer, got {n!r}")
    if not 0 <= n <= numbers.MAX_CARDINAL:
        raise TextFrontendError(f"cardinal {n} outside [0, {numbers.MAX_CARDINAL}]")
    if n < 1000:
        return _below_thousand(n)
    thousands, rest = divmod(n, 1000)
    head = numbers.THOUSAND if thousands == 1 else f"{_below_thousand(thousands)} {numbers.THOUSAND}"
    if rest == 0:
        return head
    return f"{head} {_below_thousand(rest)}"


def _below_hundred(n: int) -> str:
    if n < len(numbers.UNITS):
        return numbers.UNITS[n]
    tens, units = divmod(n, 10)
    if units == 0:
        return numbers.TENS[tens]
    return f"{numbers.TENS[tens]} {numbers.CONJUNCTION} {numbers.UNITS[units]}"


def _below_thousand(n: int) -> str:
    if n < 100:
        return _below_hundred(n)
    hundreds, rest = divmod(n, 100)
    if rest == 0:
        return numbers.HUNDRED_EXACT if hundreds == 1 else numbers.HUNDREDS[hundreds]
    return f"{numbers.HUNDREDS[hundreds]} {_below_hundred(rest)}"


def _spell_digits(match: re.Match) -> str:
    group = match.group(0)
    if len(group) <= MAX_GROUP_DIGITS:
        words = expand_cardinal(int(group))
    else:
        words = " ".join(expand_cardinal(int(d)) for d in group)
    return f" {words} "


def _fold_letter(ch: str) -> str:
    """Keep Spanish letters, fold other Latin diacritics, blank out the rest."""
    if ch in LETTERS:
        return ch
    base = unicodedata.normalize("NFD", ch)[0]
    if base in LETTERS and base.isascii():
        return base
    return " "


def normalize_text(raw: str) -> NormalizedText:
    text = unicodedata.normalize("NFC", raw.lower())
    # unicode decimal digits of other scripts become ASCII first
    text = "".join(str(unicodedata.decimal(c)) if c.isdecimal() else c for c in text)
    text = DIGITS_RE.sub(_spell_digits, text)
    text = "".join(_fold_letter(c) for c in text)
    text = SPACES_RE.sub(" ", text).strip()
    return NormalizedText(text=text)


def _check_alphabet(text: str) -> None:
    for pos, ch in enumerate(text):
        if ch != " " and ch not in LETTERS:
            raise UnsupportedCharacterError(ch, pos)


class _WordConverter:
    """Letter-by-letter rule application over a single word."""

    def __init__(self, word: str):
        self.word = word
        self.phones: list[str] = []
        # index into self.phones of each syllable nucleus
        self.nuclei: list[int] = []
        self.accented_nucleus: int | None = None

    def letter(self, i: int) -> str:
        return self.word[i] if 0 <= i < len(self.word) else ""

    def is_vowel_at(self, i: int) -> bool:
        ch = self.letter(i)
        if ch not in VOWEL_LETTERS:
            return False
        # the u of qu / gu+e,i is silent and never part of a vowel cluster
        if ch == "u" and self.letter(i - 1) in ("q", "g") and (
            self.letter(i - 1) == "q" or self.letter(i + 1) in FRONT_VOWEL_LETTERS
        ):
            return False
        return True

    def emit(self, *phones: str) -> None:
        self.phones.extend(phones)

    def emit_nucleus(self, vowel: str, accented: bool) -> None:
        self.nuclei.append(len(self.phones))
        if accented and self.accented_nucleus is None:
            self.accented_nucleus = len(self.phones)
        self.phones.append(vowel)

    def convert(self) -> list[str]:
        word = self.word
        if word == "y":
            self.emit_nucleus("i", accented=False)
            return self.with_stress()
        i = 0
        while i < len(word):
            i = self.step(i)
        return self.with_stress()

    def step(self, i: int) -> int:
        ch = self.letter(i)
        nxt = self.letter(i + 1)
        if ch == "c" and nxt == "h":
            self.emit("tʃ")
            return i + 2
        if ch == "l" and nxt == "l":
            self.emit("ʝ")
            return i + 2
        if ch == "r" and nxt == "r":
            self.emit("r")
            return i + 2
        if ch == "q" and nxt == "u":
            self.emit("k")
            return i + 2
        if ch == "g" and nxt == "u" and self.letter(i + 2) in FRONT_VOWEL_LETTERS:
            self.emit("g")
            return i + 2
        if ch == "c":
            self.emit("θ" if nxt in FRONT_VOWEL_LETTERS else "k")
            return i + 1
        if ch == "g":
            self.emit("x" if nxt in FRONT_VOWEL_LETTERS else "g")
            return i + 1
        if ch == "r":
            self.emit(self.rhotic(i))
            return i + 1
        if ch == "y":
            self.emit("ʝ" if self.is_vowel_at(i + 1) else "j")
            return i + 1
        if ch == "ü":
            self.emit("w")
            return i + 1
        if ch in VOWEL_LETTERS:
            self.vowel(i)
            return i + 1
        self.emit(*SIMPLE_LETTERS[ch])
        return i + 1

    def rhotic(self, i: int) -> str:
        if i == 0 or self.letter(i - 1) in TRILL_TRIGGERS:
            return "r"
        return "ɾ"

    def vowel(self, i: int) -> None:
        ch = self.letter(i)
        if ch in ACCENTED_VOWELS:
            self.emit_nucleus(ACCENTED_VOWELS[ch], accented=True)
            return
        if ch in ("i", "u"):
            followed = self.is_vowel_at(i + 1)
            preceded = self.is_vowel_at(i - 1) and self.letter(i - 1) in STRONG_VOWEL_LETTERS
            if followed or preceded:
                self.emit("j" if ch == "i" else "w")
                return
        self.emit_nucleus(ch, accented=False)

    def stressed_nucleus(self) -> int | None:
        if self.accented_nucleus is not None:
            return self.accented_nucleus
        if not self.nuclei:
            return None
        if len(self.nuclei) == 1:
            return self.nuclei[0]
        last = self.word[-1]
        if last in VOWEL_LETTERS or last in ("n", "s"):
            return self.nuclei[-2]
        return self.nuclei[-1]

    def with_stress(self) -> list[str]:
        if not self.phones:
            return []
        target = self.stressed_nucleus()
        if target is None:
            return [STRESS, *self.phones]
        return [*self.phones[:target], STRESS, *self.phones[target:]]


def word_to_phonemes(word: str) -> list[str]:
    _check_alphabet(word)
    if " " in word:
        raise TextFrontendError(f"expected a single word, got {word!r}")
    return _WordConverter(word).convert()


def grapheme_to_phoneme(
    text: NormalizedText | str, inventory: PhonemeInventory | None = None
) -> PhonemeSequence:
    inventory = inventory or PhonemeInventory()
    raw = text.text if isinstance(text, NormalizedText) else text
    _check_alphabet(raw)
    phonemes: list[str] = []
    for word in raw.split(" "):
        if not word:
            continue
        converted = _WordConverter(word).convert()
        if not converted:
            continue
        if phonemes:
            phonemes.append(WORD_BOUNDARY)
        phonemes.extend(converted)
    if raw and not phonemes:
        raise TextFrontendError(f"text {raw!r} has no pronounceable letters")
    missing = [p for p in phonemes if p not in inventory]
    if missing:
        raise TextFrontendError(f"symbols {sorted(set(missing))} missing from inventory")
    return PhonemeSequence(phonemes=tuple(phonemes))


def text_to_phonemes(raw: str, inventory: PhonemeInventory | None = None) -> PhonemeSequence:
    return grapheme_to_phoneme(normalize_text(raw), inventory)


def split_words(seq: PhonemeSequence) -> list[tuple[str, ...]]:
    return seq.words()


__all__ = [
    "expand_cardinal",
    "normalize_text",
    "grapheme_to_phoneme",
    "word_to_phonemes",
    "text_to_phonemes",
    "split_words",
]
