import io

import numpy as np
import pytest
import soundfile as sf
from scipy import signal

from app.core.exceptions import AudioFormatError, FeatureError
from app.schema.audio import MelSpectrogram, NormStats, Waveform
from app.schema.config import FeatureConfig
from app.services.tts.dsp_features import (
    compute_norm_stats,
    denormalize_mel,
    encode_wav,
    extract_features,
    load_wav,
    mel_center_frequencies,
    mel_filterbank,
    mel_spectrogram,
    normalize_mel,
    resample,
    trim_silence,
)

CFG = FeatureConfig()


def _sine(freq: float, seconds: float, rate: int, amp: float = 0.5) -> np.ndarray:
    t = np.arange(int(seconds * rate)) / rate
    return amp * np.sin(2 * np.pi * freq * t)


def _wav_bytes_as(samples: np.ndarray, rate: int, fmt: str, subtype: str = "PCM_16") -> bytes:
    buf = io.BytesIO()
    sf.write(buf, samples, rate, format=fmt, subtype=subtype)
    return buf.getvalue()


def _wav_bytes(samples: np.ndarray, rate: int, subtype: str = "PCM_16") -> bytes:
    return _wav_bytes_as(samples, rate, "WAV", subtype)


def test_load_wav_scales_pcm16_exactly() -> None:
    pcm = np.array([0, 1, -1, 16384, -32768, 32767], dtype=np.int16)
    w = load_wav(_wav_bytes(pcm, 16000))
    assert w.sample_rate == 16000
    np.testing.assert_array_equal(w.samples, pcm.astype(np.float64) / 32768.0)


def test_encode_wav_round_trip() -> None:
    w = Waveform(samples=np.arange(-5, 5) / 32768.0, sample_rate=22050)
    decoded = load_wav(encode_wav(w))
    assert decoded.sample_rate == w.sample_rate
    np.testing.assert_array_equal(decoded.samples, w.samples)


def test_load_wav_accepts_extensible_header() -> None:
    pcm = np.array([0, 7, -7, 32767], dtype=np.int16)
    data = _wav_bytes_as(pcm, 16000, "WAVEX")
    w = load_wav(data)
    np.testing.assert_array_equal(w.samples, pcm.astype(np.float64) / 32768.0)


def test_load_wav_rejects_stereo() -> None:
    data = _wav_bytes(np.zeros((100, 2), dtype=np.int16), 16000)
    with pytest.raises(AudioFormatError, match="mono required"):
        load_wav(data)


@pytest.mark.parametrize("subtype", ["PCM_24", "FLOAT", "PCM_U8"])
def test_load_wav_rejects_other_encodings(subtype: str) -> None:
    data = _wav_bytes(np.zeros(100), 16000, subtype=subtype)
    with pytest.raises(AudioFormatError, match="non-PCM or non-16-bit"):
        load_wav(data)


def test_load_wav_rejects_truncated_data() -> None:
    data = _wav_bytes(np.zeros(1000, dtype=np.int16), 16000)
    with pytest.raises(AudioFormatError, match="truncated"):
        load_wav(data[:-10])


def test_load_wav_rejects_non_riff() -> None:
    with pytest.raises(AudioFormatError, match="RIFF/WAVE"):
        load_wav(b"definitely not a wave file")


def test_resample_length_law() -> None:
    w = Waveform(samples=np.zeros(3200), sample_rate=48000)
    assert len(resample(w, 22050)) == 1470


@pytest.mark.parametrize("n", [1, 7, 480, 3201, 44101])
def test_resample_length_is_ceiling(n: int) -> None:
    w = Waveform(samples=np.zeros(n), sample_rate=48000)
    assert len(resample(w, 22050)) == -(-n * 147 // 320)


def test_resample_identity_rate_copies() -> None:
    w = Waveform(samples=np.linspace(-1, 1, 50), sample_rate=22050)
    out = resample(w, 22050)
    np.testing.assert_array_equal(out.samples, w.samples)
    assert out.samples is not w.samples


def test_resample_preserves_dc() -> None:
    w = Waveform(samples=np.full(9600, 0.5), sample_rate=48000)
    out = resample(w, 22050)
    np.testing.assert_allclose(out.samples[200:-200], 0.5, atol=1e-9)


def test_upsampling_preserves_dc() -> None:
    w = Waveform(samples=np.full(8000, 0.5), sample_rate=16000)
    out = resample(w, 22050)
    assert len(out) == 11025
    np.testing.assert_allclose(out.samples[200:-200], 0.5, atol=1e-9)


def test_resample_preserves_tone_frequency() -> None:
    w = Waveform(samples=_sine(1000.0, 1.0, 48000), sample_rate=48000)
    out = resample(w, 22050)
    assert len(out) == 22050
    spectrum = np.abs(np.fft.rfft(out.samples))
    # 1 Hz bins over one second
    assert int(np.argmax(spectrum)) == 1000


def test_trim_silence_drops_quiet_edges() -> None:
    rate = 48000
    tone = _sine(440.0, 0.1, rate)
    w = Waveform(samples=np.concatenate([np.zeros(4800), tone, np.zeros(4800)]), sample_rate=rate)
    trimmed = trim_silence(w, -40.0)
    assert len(trimmed) == len(tone)
    np.testing.assert_array_equal(trimmed.samples, tone)


@pytest.mark.parametrize("quiet_db, kept", [(-60.0, False), (-30.0, True)])
def test_trim_silence_threshold_is_relative_to_peak(quiet_db: float, kept: bool) -> None:
    rate = 22050
    # 10 ms frames are 220 samples; the quiet lead is exactly ten of them
    quiet = 0.5 * 10.0 ** (quiet_db / 20.0) * np.sin(2 * np.pi * 441.0 * np.arange(2200) / rate)
    loud = _sine(441.0, 0.1, rate)
    w = Waveform(samples=np.concatenate([quiet, loud]), sample_rate=rate)
    trimmed = trim_silence(w, -40.0)
    if kept:
        assert len(trimmed) == len(w)
    else:
        np.testing.assert_array_equal(trimmed.samples, loud)


def test_trim_silence_all_silent_is_empty() -> None:
    w = Waveform(samples=np.zeros(1000), sample_rate=22050)
    assert len(trim_silence(w, -40.0)) == 0


def test_trim_silence_keeps_everything_loud() -> None:
    w = Waveform(samples=_sine(300.0, 0.5, 22050), sample_rate=22050)
    assert len(trim_silence(w, -40.0)) == len(w)


def test_trim_silence_rejects_non_negative_threshold() -> None:
    w = Waveform(samples=np.ones(10), sample_rate=22050)
    with pytest.raises(FeatureError):
        trim_silence(w, 0.0)


def test_frame_count_law() -> None:
    rng = np.random.default_rng(7)
    for n in rng.integers(CFG.hop_length, 40000, size=100):
        w = Waveform(samples=rng.uniform(-0.5, 0.5, int(n)), sample_rate=CFG.target_rate)
        mel = mel_spectrogram(w, CFG)
        assert mel.n_frames == 1 + int(n) // 276
        assert mel.n_mels == 100


def test_short_input_is_reflect_padded() -> None:
    rng = np.random.default_rng(5)
    samples = rng.uniform(-0.5, 0.5, 300)
    mel = mel_spectrogram(Waveform(samples=samples, sample_rate=CFG.target_rate), CFG)

    padded = np.pad(samples, CFG.n_fft // 2, mode="reflect")
    window = signal.get_window("hann", CFG.n_fft)
    frames = np.stack([padded[t * CFG.hop_length : t * CFG.hop_length + CFG.n_fft] for t in range(2)])
    magnitude = np.abs(np.fft.rfft(frames * window, axis=1))
    expected = np.log(np.maximum(magnitude @ mel_filterbank(CFG).T, CFG.log_floor))
    assert mel.n_frames == 2
    np.testing.assert_allclose(mel.values, expected, rtol=1e-6, atol=1e-9)


def test_zero_input_hits_log_floor() -> None:
    w = Waveform(samples=np.zeros(5000), sample_rate=CFG.target_rate)
    mel = mel_spectrogram(w, CFG)
    np.testing.assert_array_equal(mel.values, np.full(mel.values.shape, np.log(1e-5)))


def test_mel_rejects_wrong_rate_and_short_input() -> None:
    with pytest.raises(FeatureError):
        mel_spectrogram(Waveform(samples=np.zeros(5000), sample_rate=16000), CFG)
    with pytest.raises(FeatureError):
        mel_spectrogram(Waveform(samples=np.zeros(100), sample_rate=CFG.target_rate), CFG)


def test_tone_peaks_in_bracketing_mel_bin() -> None:
    w = Waveform(samples=_sine(1000.0, 1.0, CFG.target_rate), sample_rate=CFG.target_rate)
    mel = mel_spectrogram(w, CFG)
    centers = mel_center_frequencies(CFG)
    below = int(np.flatnonzero(centers <= 1000.0)[-1])
    peaks = np.argmax(mel.values[2:-2], axis=1)
    assert np.isin(peaks, [below, below + 1]).all()


def test_normalize_range_and_round_trip() -> None:
    rng = np.random.default_rng(3)
    values = rng.normal(-4.0, 2.0, size=(40, 100))
    mel = MelSpectrogram(values=values, config=CFG)
    stats = compute_norm_stats([mel])
    normalized = normalize_mel(mel, stats)
    assert normalized.normalized
    assert normalized.values.min() >= 0.0
    assert normalized.values.max() <= 4.0
    assert normalized.values.min() == 0.0
    assert normalized.values.max() == 4.0
    restored = denormalize_mel(normalized, stats)
    np.testing.assert_allclose(restored.values, values, atol=1e-6)


def test_normalize_clamps_outside_stats() -> None:
    mel = MelSpectrogram(values=np.linspace(-20, 20, 200).reshape(2, 100), config=CFG)
    out = normalize_mel(mel, NormStats(min_val=-10.0, max_val=10.0))
    assert out.values.min() == 0.0
    assert out.values.max() == 4.0


def test_norm_stats_reject_degenerate_and_empty() -> None:
    with pytest.raises(FeatureError):
        compute_norm_stats([np.full((3, 100), -2.0)])
    with pytest.raises(FeatureError):
        compute_norm_stats([])


def test_extract_features_chain() -> None:
    rate = 48000
    samples = np.concatenate([np.zeros(4800), _sine(440.0, 0.5, rate), np.zeros(4800)])
    data = encode_wav(Waveform(samples=samples, sample_rate=rate))
    mel, seconds = extract_features(data, CFG)
    assert mel.n_mels == 100
    assert not mel.normalized
    assert seconds == pytest.approx(0.5, abs=0.02)
    assert mel.n_frames == 1 + round(seconds * CFG.target_rate) // CFG.hop_length


def test_extract_features_rejects_silence() -> None:
    data = encode_wav(Waveform(samples=np.zeros(4800), sample_rate=48000))
    with pytest.raises(FeatureError, match="silent"):
        extract_features(data, CFG)
