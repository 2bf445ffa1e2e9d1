import csv
from pathlib import Path
from typing import Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.exceptions import CorpusError
from app.core.schema import BaseSchema

MANIFEST_COLUMNS = ["id", "audio_path", "transcript"]
SECONDS_PER_HOUR = 3600.0


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    audio_path: str = Field(min_length=1)
    transcript: str

    def resolve(self, root: Path) -> Path:
        return Path(root) / self.audio_path


class CorpusManifest(BaseModel):
    """UTF-8 TSV ``id<TAB>path<TAB>transcript``, no header."""

    model_config = ConfigDict(frozen=True)

    entries: tuple[ManifestEntry, ...] = ()

    @field_validator("entries")
    @classmethod
    def check_unique(cls, v: tuple[ManifestEntry, ...]) -> tuple[ManifestEntry, ...]:
        seen: set[str] = set()
        for entry in v:
            if entry.id in seen:
                raise ValueError(f"duplicate utterance id {entry.id!r}")
            seen.add(entry.id)
        return v

    def __len__(self) -> int:
        return len(self.entries)

    def __add__(self, other: "CorpusManifest") -> "CorpusManifest":
        return CorpusManifest(entries=self.entries + other.entries)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    @classmethod
    def load(cls, path: Path) -> "CorpusManifest":
        path = Path(path)
        if not path.is_file():
            raise CorpusError(f"manifest not found: {path}")
        if path.stat().st_size == 0:
            return cls()
        try:
            frame = pd.read_csv(
                path,
                sep="\t",
                header=None,
                dtype=str,
                quoting=csv.QUOTE_NONE,
                keep_default_na=False,
                skip_blank_lines=True,
                encoding="utf-8",
                on_bad_lines="error",
            )
        except (pd.errors.ParserError, UnicodeDecodeError) as e:
            raise CorpusError(f"malformed manifest {path}: {e}") from e
        if frame.shape[1] != len(MANIFEST_COLUMNS) or frame.isna().to_numpy().any():
            raise CorpusError(f"malformed manifest {path}: expected {len(MANIFEST_COLUMNS)} tab-separated fields per line")
        frame.columns = MANIFEST_COLUMNS
        try:
            return cls(entries=tuple(ManifestEntry(**row) for row in frame.to_dict("records")))
        except ValueError as e:
            raise CorpusError(f"invalid manifest {path}: {e}") from e

    def dump(self, path: Path) -> None:
        lines = (f"{e.id}\t{e.audio_path}\t{e.transcript}\n" for e in self.entries)
        Path(path).write_text("".join(lines), encoding="utf-8", newline="\n")


class CorpusStats(BaseSchema):
    set_name: str | None = None
    n_samples: int = Field(0, ge=0)
    n_words: int = Field(0, ge=0)
    total_seconds: float = Field(0.0, ge=0)

    @property
    def total_hours(self) -> float:
        return self.total_seconds / SECONDS_PER_HOUR

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(
            set_name=self.set_name if self.set_name == other.set_name else None,
            n_samples=self.n_samples + other.n_samples,
            n_words=self.n_words + other.n_words,
            total_seconds=self.total_seconds + other.total_seconds,
        )

    def table_row(self) -> str:
        name = self.set_name or "-"
        return f"{name}\t{self.n_samples}\t{self.n_words / 1000:.1f} K\t{self.total_hours:.1f}"

    def report(self) -> dict:
        payload = self.model_dump(by_alias=True)
        payload["totalHours"] = self.total_hours
        return payload


class UtteranceResult(BaseSchema):
    id: str
    status: Literal["ok", "failed"] = "ok"
    stage: str | None = None
    message: str | None = None
    n_phonemes: int | None = None
    n_frames: int | None = None
    aligned: bool = False


class PipelineSummary(BaseSchema):
    stages: list[str]
    n_utterances: int
    n_succeeded: int
    n_failed: int
    norm_min: float | None = None
    norm_max: float | None = None
    utterances: list[UtteranceResult]

    @property
    def failures(self) -> list[UtteranceResult]:
        return [u for u in self.utterances if u.status == "failed"]
