import math

import numpy as np
from pydantic import field_validator, model_validator

from app.core.schema import ArrayModel, as_float_matrix

MIN_DEFAULT_RANGE = 0.1


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


class HiddenSequence(ArrayModel):
    """N x D phoneme-level vectors."""

    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def check_shape(cls, v) -> np.ndarray:
        arr = as_float_matrix(v, "vectors")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"hidden sequence must be N x D with N, D >= 1, got {arr.shape}")
        return arr

    def __len__(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


class FrameSequence(ArrayModel):
    """T x D frame-level vectors."""

    vectors: np.ndarray

    @field_validator("vectors", mode="before")
    @classmethod
    def check_shape(cls, v) -> np.ndarray:
        return as_float_matrix(v, "vectors")

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


class UpsampleSpec(ArrayModel):
    """Per-phoneme durations d_i and Gaussian ranges sigma_i, in frames."""

    durations: np.ndarray
    ranges: np.ndarray

    @field_validator("durations", "ranges", mode="before")
    @classmethod
    def check_positive(cls, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("expected a non-empty 1-D sequence")
        if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("every value must be positive and finite")
        return arr

    @model_validator(mode="after")
    def check_lengths(self) -> "UpsampleSpec":
        if self.durations.shape != self.ranges.shape:
            raise ValueError(f"{self.ranges.size} ranges for {self.durations.size} durations")
        return self

    @classmethod
    def from_durations(cls, durations, ranges=None) -> "UpsampleSpec":
        """Default ranges are max(d_i / 3, 0.1)."""
        d = np.asarray(durations, dtype=np.float64)
        if ranges is None:
            ranges = np.maximum(d / 3.0, MIN_DEFAULT_RANGE)
        return cls(durations=d, ranges=ranges)

    def __len__(self) -> int:
        return int(self.durations.shape[0])

    @property
    def centers(self) -> np.ndarray:
        return np.cumsum(self.durations) - self.durations / 2.0

    @property
    def n_frames(self) -> int:
        return round_half_up(float(self.durations.sum()))
