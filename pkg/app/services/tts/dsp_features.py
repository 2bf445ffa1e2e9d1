"""Audio -> normalized log-mel features.

load_wav -> resample -> trim_silence -> mel_spectrogram -> normalize_mel
"""

import io
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import librosa
import numpy as np
import soundfile as sf
from pydantic import ValidationError
from scipy import signal

from app.core.exceptions import AudioFormatError, FeatureError
from app.core.logger import get_logger
from app.schema.audio import MelSpectrogram, NormStats, Waveform
from app.schema.config import FeatureConfig

logger = get_logger(__name__)

PCM16_SCALE = 32768.0
TRIM_FRAME_SECONDS = 0.010
# FIR half length, in units of the larger rate factor
RESAMPLE_HALF_LEN = 10
RESAMPLE_WINDOW = ("kaiser", 5.0)
# WAVEX is RIFF/WAVE with the extensible format header
WAV_FORMATS = ("WAV", "WAVEX")


def _riff_data_declared(data: bytes) -> tuple[int, int] | None:
    """(declared size, available bytes) of the ``data`` chunk, if one is found."""
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        size = int(np.frombuffer(data[pos + 4 : pos + 8], dtype="<u4")[0])
        body = pos + 8
        if chunk_id == b"data":
            return size, len(data) - body
        pos = body + size + (size & 1)
    return None


def load_wav(data: bytes) -> Waveform:
    """Decode a mono PCM-16 RIFF/WAVE byte string; samples scale by 1/32768."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioFormatError("not a RIFF/WAVE container")
    declared = _riff_data_declared(data)
    if declared is None:
        raise AudioFormatError("truncated data: no data chunk")
    size, available = declared
    if available < size:
        raise AudioFormatError(f"truncated data: {available} of {size} data bytes present")
    try:
        info = sf.info(io.BytesIO(data))
    except (RuntimeError, TypeError) as e:
        raise AudioFormatError(f"unreadable WAVE header: {e}") from e
    if info.format not in WAV_FORMATS:
        raise AudioFormatError(f"RIFF/WAVE required, got {info.format}")
    if info.channels != 1:
        raise AudioFormatError(f"mono required, got {info.channels} channels")
    if info.subtype != "PCM_16":
        raise AudioFormatError(f"non-PCM or non-16-bit data: {info.subtype}")
    if size % 2:
        raise AudioFormatError("truncated data: odd number of PCM-16 bytes")
    # decode raw integers so the 1/32768 scaling is exact
    pcm, rate = sf.read(io.BytesIO(data), dtype="int16", always_2d=False)
    return Waveform(samples=pcm.astype(np.float64) / PCM16_SCALE, sample_rate=int(rate))


def read_wav(path: Path) -> Waveform:
    return load_wav(Path(path).read_bytes())


def encode_wav(w: Waveform) -> bytes:
    """PCM-16 mono encoding; values are clipped to the int16 range."""
    pcm = np.clip(np.round(w.samples * PCM16_SCALE), -32768, 32767).astype(np.int16)
    buf = io.BytesIO()
    sf.write(buf, pcm, w.sample_rate, format="WAV", subtype="PCM_16")
    return buf.getvalue()


def _polyphase_filter(up: int, down: int) -> np.ndarray:
    max_rate = max(up, down)
    half_len = RESAMPLE_HALF_LEN * max_rate
    h = signal.firwin(2 * half_len + 1, 1.0 / max_rate, window=RESAMPLE_WINDOW)
    # each output phase sees one residue class of taps; give each unit DC gain
    for phase in range(up):
        h[phase::up] /= h[phase::up].sum()
    return h


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Polyphase windowed-sinc resampling at the reduced rational ratio."""
    if target_rate <= 0:
        raise FeatureError("target_rate must be positive")
    if target_rate == w.sample_rate or len(w) == 0:
        return Waveform(samples=w.samples.copy(), sample_rate=target_rate)
    ratio = Fraction(target_rate, w.sample_rate)
    up, down = ratio.numerator, ratio.denominator
    # resample_poly scales an explicit filter by up
    h = _polyphase_filter(up, down) / up
    y = signal.resample_poly(w.samples, up, down, window=h)
    return Waveform(samples=y, sample_rate=target_rate)


def trim_silence(w: Waveform, threshold_db: float) -> Waveform:
    """Drop leading/trailing 10 ms frames whose peak is below the relative threshold."""
    if threshold_db >= 0:
        raise FeatureError("threshold_db must be negative")
    n = len(w)
    if n == 0:
        return w
    abs_samples = np.abs(w.samples)
    peak = float(abs_samples.max())
    if peak == 0.0:
        return Waveform(samples=np.zeros(0), sample_rate=w.sample_rate)
    threshold = peak * 10.0 ** (threshold_db / 20.0)
    frame = max(1, int(w.sample_rate * TRIM_FRAME_SECONDS))
    n_frames = -(-n // frame)
    padded = np.zeros(n_frames * frame)
    padded[:n] = abs_samples
    frame_peaks = padded.reshape(n_frames, frame).max(axis=1)
    loud = np.flatnonzero(frame_peaks >= threshold)
    start = int(loud[0]) * frame
    stop = min(n, (int(loud[-1]) + 1) * frame)
    return Waveform(samples=w.samples[start:stop].copy(), sample_rate=w.sample_rate)


def mel_filterbank(cfg: FeatureConfig) -> np.ndarray:
    """HTK-scale triangular filters (n_mels x n_fft/2+1), area-normalized."""
    return librosa.filters.mel(
        sr=cfg.target_rate,
        n_fft=cfg.n_fft,
        n_mels=cfg.n_mels,
        fmin=cfg.fmin,
        fmax=cfg.fmax,
        htk=True,
        norm="slaney",
        dtype=np.float64,
    )


def mel_center_frequencies(cfg: FeatureConfig) -> np.ndarray:
    edges = librosa.mel_frequencies(n_mels=cfg.n_mels + 2, fmin=cfg.fmin, fmax=cfg.fmax, htk=True)
    return edges[1:-1]


def mel_spectrogram(w: Waveform, cfg: FeatureConfig) -> MelSpectrogram:
    if w.sample_rate != cfg.target_rate:
        raise FeatureError(f"waveform at {w.sample_rate} Hz, features expect {cfg.target_rate} Hz")
    if len(w) < cfg.hop_length:
        raise FeatureError(f"waveform of {len(w)} samples is shorter than one hop ({cfg.hop_length})")
    padded = np.pad(w.samples, cfg.n_fft // 2, mode="reflect")
    stft = librosa.stft(
        padded,
        n_fft=cfg.n_fft,
        hop_length=cfg.hop_length,
        win_length=cfg.win_length,
        window="hann",
        center=False,
    )
    n_frames = 1 + len(w) // cfg.hop_length
    magnitude = np.abs(stft[:, :n_frames])
    mel = mel_filterbank(cfg) @ magnitude
    values = np.log(np.maximum(mel, cfg.log_floor)).T
    return MelSpectrogram(values=values, normalized=False, config=cfg)


def _check_stats(stats: NormStats) -> None:
    if not stats.min_val < stats.max_val:
        raise FeatureError(f"degenerate norm stats: min={stats.min_val} max={stats.max_val}")


def make_norm_stats(min_val: float, max_val: float) -> NormStats:
    try:
        return NormStats(min_val=float(min_val), max_val=float(max_val))
    except ValidationError as e:
        raise FeatureError(f"degenerate norm stats: min={min_val} max={max_val}") from e


def compute_norm_stats(mels: Iterable[MelSpectrogram | np.ndarray]) -> NormStats:
    lo, hi = math.inf, -math.inf
    seen = False
    for m in mels:
        values = m.values if isinstance(m, MelSpectrogram) else np.asarray(m)
        if values.size == 0:
            continue
        seen = True
        lo = min(lo, float(values.min()))
        hi = max(hi, float(values.max()))
    if not seen:
        raise FeatureError("no spectrogram values to compute norm stats from")
    return make_norm_stats(lo, hi)


def normalize_mel(m: MelSpectrogram, stats: NormStats) -> MelSpectrogram:
    _check_stats(stats)
    cfg = m.config
    span = stats.max_val - stats.min_val
    clamped = np.clip(m.values, stats.min_val, stats.max_val)
    scaled = cfg.norm_lo + (cfg.norm_hi - cfg.norm_lo) * (clamped - stats.min_val) / span
    # keep the range law exact under rounding
    scaled = np.clip(scaled, cfg.norm_lo, cfg.norm_hi)
    return MelSpectrogram(values=scaled, normalized=True, config=cfg)


def denormalize_mel(m: MelSpectrogram, stats: NormStats) -> MelSpectrogram:
    _check_stats(stats)
    cfg = m.config
    span = stats.max_val - stats.min_val
    values = stats.min_val + (m.values - cfg.norm_lo) * span / (cfg.norm_hi - cfg.norm_lo)
    return MelSpectrogram(values=values, normalized=False, config=cfg)


def extract_features(data: bytes, cfg: FeatureConfig) -> tuple[MelSpectrogram, float]:
    """Unnormalized mel plus post-trim duration in seconds."""
    w = load_wav(data)
    w = resample(w, cfg.target_rate)
    w = trim_silence(w, cfg.trim_threshold_db)
    if len(w) == 0:
        raise FeatureError("recording is silent after trimming")
    logger.debug(
        "extracted waveform",
        extra={"extra": {"samples": len(w), "rate": w.sample_rate}},
    )
    return mel_spectrogram(w, cfg), w.duration
