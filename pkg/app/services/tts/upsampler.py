"""Phoneme-to-frame expansion: repetition, Gaussian upsampling, positional embeddings."""

from typing import Literal, Sequence

import numpy as np
from pydantic import ValidationError
from scipy.special import softmax

from app.core.exceptions import UpsampleError
from app.schema.align import DurationSequence
from app.schema.upsample import FrameSequence, HiddenSequence, UpsampleSpec

POSITION_BASE = 10000.0

HiddenLike = HiddenSequence | np.ndarray
DurationLike = DurationSequence | Sequence[int] | np.ndarray


def make_spec(durations: Sequence[float], ranges: Sequence[float] | None = None) -> UpsampleSpec:
    try:
        return UpsampleSpec.from_durations(durations, ranges)
    except ValidationError as e:
        raise UpsampleError(f"invalid upsampling spec: {e.errors()[0]['msg']}") from e


def _hidden(h: HiddenLike) -> HiddenSequence:
    if isinstance(h, HiddenSequence):
        return h
    try:
        return HiddenSequence(vectors=h)
    except ValidationError as e:
        raise UpsampleError(e.errors()[0]["msg"]) from e


def _durations(d: DurationLike) -> np.ndarray:
    if isinstance(d, DurationSequence):
        return d.durations
    try:
        return DurationSequence(durations=d).durations
    except ValidationError as e:
        raise UpsampleError(e.errors()[0]["msg"]) from e


def repeat_upsample(h: HiddenLike, d: DurationLike) -> FrameSequence:
    """Length regulator: row i of ``h`` repeated d_i times."""
    hidden = _hidden(h)
    counts = _durations(d)
    if counts.size != len(hidden):
        raise UpsampleError(f"{counts.size} durations for {len(hidden)} phonemes")
    return FrameSequence(vectors=np.repeat(hidden.vectors, counts, axis=0))


def _offsets(spec: UpsampleSpec, n_frames: int) -> np.ndarray:
    positions = np.arange(n_frames, dtype=np.float64) + 0.5
    return positions[:, None] - spec.centers[None, :]


def gaussian_weights(spec: UpsampleSpec) -> np.ndarray:
    """T x N softmax-normalized Gaussian weights at frame centres t + 0.5."""
    n_frames = spec.n_frames
    if n_frames < 1:
        raise UpsampleError("total duration rounds to zero frames")
    offsets = _offsets(spec, n_frames)
    logits = -(offsets**2) / (2.0 * spec.ranges[None, :] ** 2)
    return softmax(logits, axis=1)


def gaussian_upsample(h: HiddenLike, spec: UpsampleSpec) -> tuple[FrameSequence, np.ndarray]:
    hidden = _hidden(h)
    if len(spec) != len(hidden):
        raise UpsampleError(f"{len(spec)} durations for {len(hidden)} phonemes")
    weights = gaussian_weights(spec)
    return FrameSequence(vectors=weights @ hidden.vectors), weights


def gaussian_upsample_backward(
    h: HiddenLike, spec: UpsampleSpec, grad_frames: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vector-Jacobian product of ``gaussian_upsample`` for (h, durations, ranges).

    ``grad_frames`` is dF/du for the T x D output; the frame count is held fixed.
    """
    hidden = _hidden(h).vectors
    weights = gaussian_weights(spec)
    g = np.asarray(grad_frames, dtype=np.float64)
    if g.shape != (weights.shape[0], hidden.shape[1]):
        raise UpsampleError(f"grad_frames shape {g.shape} does not match output")

    grad_h = weights.T @ g
    grad_w = g @ hidden.T
    grad_logits = weights * (grad_w - np.sum(weights * grad_w, axis=1, keepdims=True))

    sigma = spec.ranges
    offsets = _offsets(spec, weights.shape[0])
    grad_centers = np.sum(grad_logits * offsets, axis=0) / sigma**2
    grad_sigma = np.sum(grad_logits * offsets**2, axis=0) / sigma**3
    # c_i = sum_{j<i} d_j + d_i / 2
    later = np.cumsum(grad_centers[::-1])[::-1] - grad_centers
    grad_d = later + 0.5 * grad_centers
    return grad_h, grad_d, grad_sigma


def phoneme_relative_positions(d: DurationLike) -> np.ndarray:
    counts = _durations(d)
    if counts.size == 0:
        raise UpsampleError("empty duration sequence")
    if np.any(counts < 1):
        raise UpsampleError("phoneme-relative positions need every duration >= 1")
    starts = np.cumsum(counts) - counts
    return np.arange(int(counts.sum()), dtype=np.int64) - np.repeat(starts, counts)


def sinusoidal_embedding(positions: Sequence[int], dim: int) -> np.ndarray:
    if dim <= 0 or dim % 2:
        raise UpsampleError(f"embedding dim must be a positive even integer, got {dim}")
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 1:
        raise UpsampleError("positions must be 1-D")
    if pos.size and np.any(pos < 0):
        raise UpsampleError("positions must be non-negative")
    rates = POSITION_BASE ** (-np.arange(0, dim, 2, dtype=np.float64) / dim)
    angles = pos[:, None] * rates[None, :]
    out = np.empty((pos.size, dim))
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def attach_positional_embeddings(
    frames: FrameSequence | np.ndarray,
    d: DurationLike,
    dim: int | None = None,
    mode: Literal["add", "concat"] = "add",
) -> FrameSequence:
    """Sum or concatenate phoneme-relative embeddings onto upsampled frames.

    Positions come from the hard segment assignment even after Gaussian upsampling.
    """
    values = frames.vectors if isinstance(frames, FrameSequence) else np.asarray(frames, dtype=np.float64)
    positions = phoneme_relative_positions(d)
    if positions.size != values.shape[0]:
        raise UpsampleError(f"{positions.size} positions for {values.shape[0]} frames")
    if mode == "add":
        if dim is not None and dim != values.shape[1]:
            raise UpsampleError("additive embeddings must match the frame dimension")
        return FrameSequence(vectors=values + sinusoidal_embedding(positions, values.shape[1]))
    if mode == "concat":
        if dim is None:
            raise UpsampleError("concatenated embeddings need an explicit dim")
        embedded = np.concatenate([values, sinusoidal_embedding(positions, dim)], axis=1)
        return FrameSequence(vectors=embedded)
    raise UpsampleError(f"unknown composition mode {mode!r}")


def durations_from_log_predictions(pred_log: Sequence[float]) -> DurationSequence:
    """Invert the ln(1 + d) duration target to whole frame counts."""
    p = np.asarray(pred_log, dtype=np.float64)
    frames = np.floor(np.expm1(p) + 0.5)
    return DurationSequence(durations=np.maximum(frames, 0).astype(np.int64))
