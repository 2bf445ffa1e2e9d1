"""On-disk artifact formats.

Feature / posterior files: 4-byte magic, ``<u4`` rows, ``<u4`` columns, then
row-major ``<f4`` payload. Everything else is UTF-8 text with ``\\n`` endings.
"""

from pathlib import Path
from typing import Sequence

import numpy as np

from app.core.exceptions import ArtifactFormatError
from app.schema.align import DurationSequence
from app.schema.audio import NormStats
from app.schema.text import PhonemeSequence

FEATURE_MAGIC = b"MF01"
POSTERIOR_MAGIC = b"MP01"
HEADER_DTYPE = np.dtype("<u4")
PAYLOAD_DTYPE = np.dtype("<f4")
HEADER_SIZE = 4 + 2 * HEADER_DTYPE.itemsize


def encode_matrix(matrix: np.ndarray, magic: bytes = FEATURE_MAGIC) -> bytes:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ArtifactFormatError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ArtifactFormatError("non-finite values cannot be written")
    header = np.array(m.shape, dtype=HEADER_DTYPE).tobytes()
    return magic + header + np.ascontiguousarray(m, dtype=PAYLOAD_DTYPE).tobytes()


def decode_matrix(data: bytes, magic: bytes = FEATURE_MAGIC) -> np.ndarray:
    if len(data) < 4 or data[:4] != magic:
        raise ArtifactFormatError(f"bad magic: expected {magic.decode()}, got {data[:4]!r}")
    if len(data) < HEADER_SIZE:
        raise ArtifactFormatError("truncated header")
    rows, cols = (int(v) for v in np.frombuffer(data, dtype=HEADER_DTYPE, count=2, offset=4))
    expected = rows * cols * PAYLOAD_DTYPE.itemsize
    available = len(data) - HEADER_SIZE
    if available < expected:
        raise ArtifactFormatError(f"truncated payload: {available} of {expected} bytes")
    if available > expected:
        raise ArtifactFormatError(f"{available - expected} trailing bytes after payload")
    matrix = np.frombuffer(data, dtype=PAYLOAD_DTYPE, count=rows * cols, offset=HEADER_SIZE)
    matrix = matrix.reshape(rows, cols).astype(np.float32)
    if not np.all(np.isfinite(matrix)):
        raise ArtifactFormatError("non-finite values in payload")
    return matrix


def write_features(path: Path, matrix: np.ndarray) -> None:
    Path(path).write_bytes(encode_matrix(matrix, FEATURE_MAGIC))


def read_features(path: Path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes(), FEATURE_MAGIC)


def write_posteriors(path: Path, matrix: np.ndarray) -> None:
    Path(path).write_bytes(encode_matrix(matrix, POSTERIOR_MAGIC))


def read_posteriors(path: Path) -> np.ndarray:
    return decode_matrix(Path(path).read_bytes(), POSTERIOR_MAGIC)


def write_text(path: Path, text: str) -> None:
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")


def write_norm_stats(path: Path, stats: NormStats) -> None:
    # repr round-trips a float exactly
    Path(path).write_text(
        f"min={stats.min_val!r}\nmax={stats.max_val!r}\n", encoding="utf-8", newline="\n"
    )


def read_norm_stats(path: Path) -> NormStats:
    values: dict[str, float] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, sep, raw = line.partition("=")
        if not sep or key.strip() not in ("min", "max"):
            raise ArtifactFormatError(f"malformed norm stats line: {line!r}")
        try:
            values[key.strip()] = float(raw)
        except ValueError as e:
            raise ArtifactFormatError(f"malformed norm stats value: {raw!r}") from e
    if set(values) != {"min", "max"}:
        raise ArtifactFormatError("norm stats need both min= and max=")
    try:
        return NormStats(min_val=values["min"], max_val=values["max"])
    except ValueError as e:
        raise ArtifactFormatError(str(e)) from e


def write_phonemes(path: Path, seq: PhonemeSequence) -> None:
    write_text(path, seq.to_line())


def read_phonemes(path: Path) -> PhonemeSequence:
    try:
        return PhonemeSequence.from_line(Path(path).read_text(encoding="utf-8").strip("\n"))
    except ValueError as e:
        raise ArtifactFormatError(f"malformed phoneme file {path}: {e}") from e


def format_durations(symbols: Sequence[str], durations: DurationSequence) -> str:
    if len(symbols) != len(durations):
        raise ArtifactFormatError(f"{len(durations)} durations for {len(symbols)} symbols")
    return "".join(f"{s}\t{int(d)}\n" for s, d in zip(symbols, durations.durations))


def write_durations(path: Path, symbols: Sequence[str], durations: DurationSequence) -> None:
    Path(path).write_text(format_durations(symbols, durations), encoding="utf-8", newline="\n")


def read_durations(path: Path) -> tuple[list[str], DurationSequence]:
    symbols: list[str] = []
    counts: list[int] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        symbol, sep, raw = line.partition("\t")
        if not sep or not raw.isdigit():
            raise ArtifactFormatError(f"malformed durations line: {line!r}")
        symbols.append(symbol)
        counts.append(int(raw))
    return symbols, DurationSequence(durations=np.asarray(counts, dtype=np.int64))
