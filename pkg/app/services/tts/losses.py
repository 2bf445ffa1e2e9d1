"""Training objectives with analytic gradients.

Every ``with_grad`` variant returns d loss / d prediction alongside the value.
"""

from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import ndimage

from app.core.exceptions import LossError
from app.schema.align import DurationSequence, PosteriorGram
from app.schema.audio import MelSpectrogram
from app.schema.config import LossConfig
from app.schema.loss import AcousticGradients, AlignerLossBreakdown, LossBreakdown
from app.schema.text import PhonemeInventory, PhonemeSequence
from app.services.tts.ctc_align import ctc_loss

MelLike = MelSpectrogram | np.ndarray


def _values(m: MelLike) -> np.ndarray:
    values = m.values if isinstance(m, MelSpectrogram) else np.asarray(m, dtype=np.float64)
    if values.ndim != 2:
        raise LossError(f"expected a 2-D spectrogram, got shape {values.shape}")
    return values


def _pair(pred: MelLike, target: MelLike) -> tuple[np.ndarray, np.ndarray]:
    x, y = _values(pred), _values(target)
    if x.shape != y.shape:
        raise LossError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size == 0:
        raise LossError("empty spectrogram")
    return x, y


def l1_loss(pred: MelLike, target: MelLike, with_grad: bool = False) -> tuple[float, np.ndarray | None]:
    x, y = _pair(pred, target)
    diff = x - y
    loss = float(np.mean(np.abs(diff)))
    if not with_grad:
        return loss, None
    return loss, np.sign(diff) / diff.size


@lru_cache(maxsize=64)
def _filter_matrix(n: int, window: int, sigma: float) -> np.ndarray:
    """n x n matrix applying the normalized Gaussian window with reflect borders."""
    offsets = np.arange(window, dtype=np.float64) - (window - 1) / 2.0
    weights = np.exp(-(offsets**2) / (2.0 * sigma**2))
    weights /= weights.sum()
    matrix = ndimage.correlate1d(np.eye(n), weights, axis=0, mode="reflect")
    matrix.setflags(write=False)
    return matrix


class _GaussianFilter:
    def __init__(self, shape: tuple[int, int], cfg: LossConfig):
        self.rows = _filter_matrix(shape[0], cfg.ssim_window, cfg.ssim_sigma)
        self.cols = _filter_matrix(shape[1], cfg.ssim_window, cfg.ssim_sigma)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.rows @ x @ self.cols.T

    def adjoint(self, g: np.ndarray) -> np.ndarray:
        return self.rows.T @ g @ self.cols


def ssim_map(pred: MelLike, target: MelLike, cfg: LossConfig | None = None) -> np.ndarray:
    return _ssim(*_pair(pred, target), cfg or LossConfig())[0]


def _ssim(x: np.ndarray, y: np.ndarray, cfg: LossConfig):
    if min(x.shape) < cfg.ssim_window:
        raise LossError(f"spectrogram {x.shape} is smaller than the {cfg.ssim_window}-point window")
    blur = _GaussianFilter(x.shape, cfg)
    mu_x, mu_y = blur(x), blur(y)
    var_x = blur(x * x) - mu_x * mu_x
    var_y = blur(y * y) - mu_y * mu_y
    cov = blur(x * y) - mu_x * mu_y

    a1 = 2.0 * mu_x * mu_y + cfg.c1
    a2 = 2.0 * cov + cfg.c2
    b1 = mu_x * mu_x + mu_y * mu_y + cfg.c1
    b2 = var_x + var_y + cfg.c2
    # a1 == b1 and a2 == b2 bit for bit when x is y, so the map is exactly 1
    s = (a1 * a2) / (b1 * b2)
    return s, (blur, mu_x, mu_y, a1, a2, b1, b2)


def ssim_loss(
    pred: MelLike, target: MelLike, cfg: LossConfig | None = None, with_grad: bool = False
) -> tuple[float, np.ndarray | None]:
    """1 - mean single-scale SSIM; the gradient is taken with respect to ``pred``."""
    cfg = cfg or LossConfig()
    x, y = _pair(pred, target)
    s, (blur, mu_x, mu_y, a1, a2, b1, b2) = _ssim(x, y, cfg)
    loss = float(1.0 - np.mean(s))
    if not with_grad:
        return loss, None

    scale = -1.0 / s.size
    d_mu = scale * s * (2.0 * mu_y / a1 - 2.0 * mu_y / a2 - 2.0 * mu_x / b1 + 2.0 * mu_x / b2)
    d_sq = scale * (-s / b2)
    d_cross = scale * (2.0 * s / a2)
    grad = blur.adjoint(d_mu) + 2.0 * x * blur.adjoint(d_sq) + y * blur.adjoint(d_cross)
    return loss, grad


def huber_log_duration_loss(
    pred_log: Sequence[float],
    target: DurationSequence | Sequence[int],
    delta: float = 1.0,
    with_grad: bool = False,
) -> tuple[float, np.ndarray | None]:
    """Mean Huber loss between predicted log durations and ln(1 + d)."""
    if delta <= 0:
        raise LossError("huber delta must be positive")
    p = np.asarray(pred_log, dtype=np.float64)
    d = target.durations if isinstance(target, DurationSequence) else np.asarray(target, dtype=np.float64)
    if p.ndim != 1 or p.shape != d.shape:
        raise LossError(f"length mismatch: {p.size} predictions for {d.size} durations")
    if p.size == 0:
        raise LossError("empty duration sequence")
    if np.any(d < 0):
        raise LossError("target durations must be non-negative")

    e = p - np.log1p(d)
    abs_e = np.abs(e)
    quadratic = abs_e <= delta
    per_item = np.where(quadratic, 0.5 * e * e, delta * (abs_e - 0.5 * delta))
    loss = float(np.mean(per_item))
    if not with_grad:
        return loss, None
    grad = np.where(quadratic, e, delta * np.sign(e)) / p.size
    return loss, grad


def combined_acoustic_loss(
    pred_mel: MelLike,
    target_mel: MelLike,
    pred_log_dur: Sequence[float],
    target_dur: DurationSequence | Sequence[int],
    cfg: LossConfig | None = None,
    with_grad: bool = False,
) -> tuple[float, LossBreakdown, AcousticGradients | None]:
    cfg = cfg or LossConfig()
    l1, g_l1 = l1_loss(pred_mel, target_mel, with_grad)
    ssim, g_ssim = ssim_loss(pred_mel, target_mel, cfg, with_grad)
    dur, g_dur = huber_log_duration_loss(pred_log_dur, target_dur, cfg.huber_delta, with_grad)
    total = cfg.lambda_l1 * l1 + cfg.lambda_ssim * ssim + cfg.lambda_dur * dur
    breakdown = LossBreakdown(l1=l1, ssim=ssim, duration=dur, total=total)
    if not with_grad:
        return total, breakdown, None
    grads = AcousticGradients(
        mel=cfg.lambda_l1 * g_l1 + cfg.lambda_ssim * g_ssim,
        log_duration=cfg.lambda_dur * g_dur,
    )
    return total, breakdown, grads


def aligner_loss(
    posterior: PosteriorGram | np.ndarray,
    labels: PhonemeSequence | Sequence[int],
    recon_mel: MelLike,
    target_mel: MelLike,
    inventory: PhonemeInventory | None = None,
) -> tuple[float, AlignerLossBreakdown]:
    """Autoencoder objective: CTC on the recognizer posteriors plus reconstruction MAE."""
    ctc, _ = ctc_loss(posterior, labels, inventory=inventory)
    mae, _ = l1_loss(recon_mel, target_mel)
    total = ctc + mae
    return total, AlignerLossBreakdown(ctc=ctc, mae=mae, total=total)
