import numpy as np
from pydantic import field_validator, model_validator

from app.core.schema import ArrayModel, as_float_matrix
from app.schema.config import FeatureConfig


class Waveform(ArrayModel):
    samples: np.ndarray
    sample_rate: int

    @field_validator("samples", mode="before")
    @classmethod
    def check_mono(cls, v) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"mono waveform expected, got shape {arr.shape}")
        return arr

    @field_validator("sample_rate")
    @classmethod
    def check_rate(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("sample_rate must be positive")
        return v

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


class MelSpectrogram(ArrayModel):
    """T x M log-mel matrix; rows are frames."""

    values: np.ndarray
    normalized: bool = False
    config: FeatureConfig = FeatureConfig()

    @field_validator("values", mode="before")
    @classmethod
    def check_matrix(cls, v) -> np.ndarray:
        return as_float_matrix(v, "values")

    @model_validator(mode="after")
    def check_bins(self) -> "MelSpectrogram":
        if self.values.shape[1] != self.config.n_mels:
            raise ValueError(
                f"expected {self.config.n_mels} mel bins, got {self.values.shape[1]}"
            )
        return self

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_mels(self) -> int:
        return int(self.values.shape[1])


class NormStats(ArrayModel):
    min_val: float
    max_val: float

    @model_validator(mode="after")
    def check_order(self) -> "NormStats":
        if not (np.isfinite(self.min_val) and np.isfinite(self.max_val)):
            raise ValueError("norm stats must be finite")
        if not self.min_val < self.max_val:
            raise ValueError(f"degenerate norm stats: min={self.min_val} max={self.max_val}")
        return self
