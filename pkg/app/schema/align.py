import numpy as np
from pydantic import field_validator

from app.core.schema import ArrayModel, as_float_matrix

ROW_NORM_TOLERANCE = 1e-4


class PosteriorGram(ArrayModel):
    """T x (V+1) per-frame log-probabilities; the last column is the CTC blank."""

    log_probs: np.ndarray

    @field_validator("log_probs", mode="before")
    @classmethod
    def check_rows(cls, v) -> np.ndarray:
        arr = as_float_matrix(v, "log_probs")
        if arr.shape[1] < 2:
            raise ValueError("posteriorgram needs at least one phoneme class plus blank")
        if arr.shape[0] and np.any(np.isnan(arr)):
            raise ValueError("posteriorgram contains NaN")
        if arr.shape[0]:
            with np.errstate(divide="ignore"):
                peak = arr.max(axis=1, keepdims=True)
                totals = peak[:, 0] + np.log(np.exp(arr - peak).sum(axis=1))
            if np.any(np.abs(totals) > ROW_NORM_TOLERANCE):
                worst = int(np.argmax(np.abs(totals)))
                raise ValueError(f"row {worst} is not a log-probability distribution")
        return arr

    @property
    def n_frames(self) -> int:
        return int(self.log_probs.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.log_probs.shape[1])

    @property
    def blank_id(self) -> int:
        return self.n_classes - 1


class AlignmentPath(ArrayModel):
    """Frame -> label-position assignment of a monotonic segmentation."""

    assignment: np.ndarray
    score: float = 0.0

    @field_validator("assignment", mode="before")
    @classmethod
    def check_vector(cls, v) -> np.ndarray:
        arr = np.asarray(v)
        if arr.ndim != 1:
            raise ValueError("assignment must be a 1-D index sequence")
        return arr.astype(np.int64)

    @property
    def n_frames(self) -> int:
        return int(self.assignment.shape[0])


class DurationSequence(ArrayModel):
    durations: np.ndarray

    @field_validator("durations", mode="before")
    @classmethod
    def check_counts(cls, v) -> np.ndarray:
        arr = np.asarray(v)
        if arr.ndim != 1:
            raise ValueError("durations must be a 1-D sequence")
        if arr.size and np.any(arr < 0):
            raise ValueError("durations must be non-negative")
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("durations must be whole frame counts")
        return arr.astype(np.int64)

    def __len__(self) -> int:
        return int(self.durations.shape[0])

    @property
    def total(self) -> int:
        return int(self.durations.sum())
