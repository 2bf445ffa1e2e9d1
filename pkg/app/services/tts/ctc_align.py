"""CTC loss over phoneme posteriorgrams and monotonic duration extraction.

All recursions run in log space; impossible transitions are ``-inf``.
"""

from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from app.core.exceptions import (
    AlignmentError,
    InvalidPathError,
    NoAdmissibleAlignmentError,
)
from app.schema.align import AlignmentPath, DurationSequence, PosteriorGram
from app.schema.text import PhonemeInventory, PhonemeSequence

NEG_INF = -np.inf


def _label_ids(
    labels: PhonemeSequence | Sequence[int], inventory: PhonemeInventory | None
) -> np.ndarray:
    if isinstance(labels, PhonemeSequence):
        inventory = inventory or PhonemeInventory()
        return np.asarray(inventory.encode(labels.phonemes), dtype=np.int64)
    return np.asarray(list(labels), dtype=np.int64)


def _as_posterior(posterior: PosteriorGram | np.ndarray) -> np.ndarray:
    if isinstance(posterior, PosteriorGram):
        return posterior.log_probs
    return PosteriorGram(log_probs=posterior).log_probs


def min_ctc_frames(labels: np.ndarray) -> int:
    """|y| plus one separating blank per equal adjacent pair."""
    if labels.size == 0:
        return 0
    return int(labels.size + np.count_nonzero(labels[1:] == labels[:-1]))


def _extended(labels: np.ndarray, blank: int) -> np.ndarray:
    ext = np.full(2 * labels.size + 1, blank, dtype=np.int64)
    ext[1::2] = labels
    return ext


def _skip_allowed(ext: np.ndarray, blank: int) -> np.ndarray:
    """s may be entered from s-2: a label differing from the previous label."""
    allowed = np.zeros(ext.size, dtype=bool)
    allowed[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])
    return allowed


def _shift_right(x: np.ndarray, k: int) -> np.ndarray:
    out = np.full_like(x, NEG_INF)
    if k < x.size:
        out[k:] = x[: x.size - k]
    return out


def _shift_left(x: np.ndarray, k: int) -> np.ndarray:
    out = np.full_like(x, NEG_INF)
    if k < x.size:
        out[: x.size - k] = x[k:]
    return out


def _forward(emit: np.ndarray, skip: np.ndarray) -> np.ndarray:
    n_frames, n_states = emit.shape
    alpha = np.full((n_frames, n_states), NEG_INF)
    alpha[0, 0] = emit[0, 0]
    if n_states > 1:
        alpha[0, 1] = emit[0, 1]
    for t in range(1, n_frames):
        prev = alpha[t - 1]
        stay_or_step = np.logaddexp(prev, _shift_right(prev, 1))
        jump = np.where(skip, _shift_right(prev, 2), NEG_INF)
        alpha[t] = np.logaddexp(stay_or_step, jump) + emit[t]
    return alpha


def _backward(emit: np.ndarray, skip: np.ndarray) -> np.ndarray:
    """beta[t, s]: log-probability of finishing from state s at t, emissions after t."""
    n_frames, n_states = emit.shape
    beta = np.full((n_frames, n_states), NEG_INF)
    beta[-1, -1] = 0.0
    if n_states > 1:
        beta[-1, -2] = 0.0
    # jump[s] is allowed into s+2 when skip[s+2]
    skip_from = np.zeros_like(skip)
    skip_from[: max(skip.size - 2, 0)] = skip[2:]
    for t in range(n_frames - 2, -1, -1):
        nxt = beta[t + 1] + emit[t + 1]
        stay_or_step = np.logaddexp(nxt, _shift_left(nxt, 1))
        jump = np.where(skip_from, _shift_left(nxt, 2), NEG_INF)
        beta[t] = np.logaddexp(stay_or_step, jump)
    return beta


def ctc_loss(
    posterior: PosteriorGram | np.ndarray,
    labels: PhonemeSequence | Sequence[int],
    with_grad: bool = False,
    inventory: PhonemeInventory | None = None,
) -> tuple[float, np.ndarray | None]:
    """Negative log-likelihood of ``labels`` under CTC, and d loss / d log_probs.

    The gradient treats every log-probability entry as a free variable. To get
    the gradient with respect to pre-softmax activations, project it with
    ``grad - exp(log_probs) * grad.sum(axis=1, keepdims=True)``.
    """
    log_probs = _as_posterior(posterior)
    n_frames, n_classes = log_probs.shape
    blank = n_classes - 1
    y = _label_ids(labels, inventory)
    if y.size and (y.min() < 0 or y.max() >= blank):
        raise AlignmentError(f"label id outside inventory of {blank} phonemes")
    needed = max(min_ctc_frames(y), 1)
    if n_frames < needed:
        raise NoAdmissibleAlignmentError(n_frames, needed)

    ext = _extended(y, blank)
    skip = _skip_allowed(ext, blank)
    emit = log_probs[:, ext]
    alpha = _forward(emit, skip)
    tail = alpha[-1, -2:] if ext.size > 1 else alpha[-1, -1:]
    log_likelihood = float(logsumexp(tail))
    if not np.isfinite(log_likelihood):
        raise NoAdmissibleAlignmentError(n_frames, needed)
    loss = -log_likelihood
    if not with_grad:
        return loss, None

    beta = _backward(emit, skip)
    occupancy = alpha + beta - log_likelihood
    grad = np.zeros_like(log_probs)
    with np.errstate(divide="ignore", under="ignore"):
        for k in np.unique(ext):
            grad[:, k] = -np.exp(logsumexp(occupancy[:, ext == k], axis=1))
    return loss, grad


def best_monotonic_path(
    posterior: PosteriorGram | np.ndarray,
    labels: PhonemeSequence | Sequence[int],
    inventory: PhonemeInventory | None = None,
) -> AlignmentPath:
    """Most likely segmentation of the frames into |labels| non-empty runs.

    Scores are raw target log-probabilities; the blank column is ignored.
    Among equal-score segmentations the lexicographically smallest assignment
    wins, so earlier phonemes absorb ties.
    """
    log_probs = _as_posterior(posterior)
    n_frames = log_probs.shape[0]
    y = _label_ids(labels, inventory)
    n_labels = y.size
    if n_labels == 0:
        raise AlignmentError("empty label sequence")
    if y.min() < 0 or y.max() >= log_probs.shape[1] - 1:
        raise AlignmentError("label id outside inventory")
    if n_frames < n_labels:
        raise AlignmentError(f"insufficient frames: {n_frames} frames for {n_labels} phonemes")

    emit = log_probs[:, y]
    # suffix[t, i]: best score of frames t.. given frame t sits on label i
    suffix = np.full((n_frames, n_labels), NEG_INF)
    suffix[-1, -1] = emit[-1, -1]
    for t in range(n_frames - 2, -1, -1):
        nxt = suffix[t + 1]
        advance = _shift_left(nxt, 1)
        suffix[t] = np.maximum(nxt, advance) + emit[t]

    assignment = np.zeros(n_frames, dtype=np.int64)
    i = 0
    for t in range(1, n_frames):
        # staying wins ties, unless the remaining frames cannot cover the remaining labels
        must_advance = n_frames - t < n_labels - i
        if i + 1 < n_labels and (must_advance or suffix[t, i + 1] > suffix[t, i]):
            i += 1
        assignment[t] = i
    score = float(emit[np.arange(n_frames), assignment].sum())
    return AlignmentPath(assignment=assignment, score=score)


def validate_path(path: AlignmentPath, n_labels: int | None = None) -> None:
    a = path.assignment
    if a.size == 0:
        raise InvalidPathError("empty path")
    if a[0] != 0:
        raise InvalidPathError("path must start at phoneme 0")
    steps = np.diff(a)
    if np.any(steps < 0):
        raise InvalidPathError("path is not monotonic")
    if np.any(steps > 1):
        t = int(np.flatnonzero(steps > 1)[0]) + 1
        raise InvalidPathError(f"phoneme index skipped at frame {t}")
    if n_labels is not None and a[-1] != n_labels - 1:
        raise InvalidPathError(f"path ends at phoneme {a[-1]}, expected {n_labels - 1}")


def durations_from_path(path: AlignmentPath, n_labels: int | None = None) -> DurationSequence:
    validate_path(path, n_labels)
    counts = np.bincount(path.assignment, minlength=int(path.assignment[-1]) + 1)
    return DurationSequence(durations=counts)


def align_durations(
    posterior: PosteriorGram | np.ndarray,
    labels: PhonemeSequence | Sequence[int],
    inventory: PhonemeInventory | None = None,
) -> DurationSequence:
    y = _label_ids(labels, inventory)
    path = best_monotonic_path(posterior, y)
    return durations_from_path(path, n_labels=y.size)
