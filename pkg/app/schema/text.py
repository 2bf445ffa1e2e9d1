import re
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel, ConfigDict, field_validator

from app.common.phonemes import DEFAULT_SYMBOLS, LETTERS, STRESS, WORD_BOUNDARY
from app.core.exceptions import TextFrontendError

_LETTER_CLASS = "[" + "".join(sorted(LETTERS)) + "]"
_NORMALIZED_RE = re.compile(rf"^(?:{_LETTER_CLASS}+(?: {_LETTER_CLASS}+)*)?\Z")


class NormalizedText(BaseModel):
    model_config = ConfigDict(frozen=True)

    text: str = ""

    @field_validator("text")
    @classmethod
    def check_alphabet(cls, v: str) -> str:
        if not _NORMALIZED_RE.match(v):
            raise ValueError(f"text is not normalized: {v!r}")
        return v

    @property
    def words(self) -> list[str]:
        return self.text.split()

    def __str__(self) -> str:
        return self.text


class PhonemeInventory(BaseModel):
    """Ordered phoneme symbols; the CTC blank is the implicit id ``len(symbols)``."""

    model_config = ConfigDict(frozen=True)

    symbols: tuple[str, ...] = DEFAULT_SYMBOLS

    @field_validator("symbols")
    @classmethod
    def check_unique(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        if not v:
            raise ValueError("inventory is empty")
        if len(set(v)) != len(v):
            raise ValueError("inventory symbols must be unique")
        if any(not s or s.strip() != s for s in v):
            raise ValueError("inventory symbols must be non-empty and unpadded")
        return v

    @property
    def blank_id(self) -> int:
        return len(self.symbols)

    @property
    def n_classes(self) -> int:
        return len(self.symbols) + 1

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index()

    def _index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def encode(self, phonemes: Iterable[str]) -> list[int]:
        index = self._index()
        ids = []
        for pos, s in enumerate(phonemes):
            if s not in index:
                raise TextFrontendError(f"symbol {s!r} at position {pos} not in inventory")
            ids.append(index[s])
        return ids

    def decode(self, ids: Iterable[int]) -> list[str]:
        out = []
        for i in ids:
            if not 0 <= i < len(self.symbols):
                raise TextFrontendError(f"id {i} outside inventory of {len(self.symbols)}")
            out.append(self.symbols[i])
        return out

    def dump(self, path: Path) -> None:
        Path(path).write_text("".join(f"{s}\n" for s in self.symbols), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path: Path) -> "PhonemeInventory":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(symbols=tuple(line for line in lines if line))


def _split_words(phonemes: Sequence[str]) -> list[tuple[str, ...]]:
    segments: list[tuple[str, ...]] = []
    current: list[str] = []
    for p in phonemes:
        if p == WORD_BOUNDARY:
            segments.append(tuple(current))
            current = []
        else:
            current.append(p)
    if current or segments:
        segments.append(tuple(current))
    return segments


class PhonemeSequence(BaseModel):
    model_config = ConfigDict(frozen=True)

    phonemes: tuple[str, ...] = ()

    @field_validator("phonemes")
    @classmethod
    def check_word_stress(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        if not v:
            return v
        for pos, seg in enumerate(_split_words(v)):
            if not seg:
                raise ValueError(f"empty word segment at {pos}")
            if seg.count(STRESS) != 1:
                raise ValueError(f"word segment {pos} has {seg.count(STRESS)} stress markers, expected 1")
        return v

    def __len__(self) -> int:
        return len(self.phonemes)

    def words(self) -> list[tuple[str, ...]]:
        """Segments between word-boundary markers."""
        return _split_words(self.phonemes)

    def stress_counts(self) -> list[int]:
        return [seg.count(STRESS) for seg in self.words()]

    def to_line(self) -> str:
        return " ".join(self.phonemes)

    @classmethod
    def from_line(cls, line: str) -> "PhonemeSequence":
        return cls(phonemes=tuple(line.split()))

    @classmethod
    def of(cls, phonemes: Sequence[str]) -> "PhonemeSequence":
        return cls(phonemes=tuple(phonemes))
