"""Deterministic toy corpus: tones with Spanish transcripts and matching posteriorgrams."""

from pathlib import Path

import numpy as np
from scipy.special import log_softmax

from app.core.logger import get_logger
from app.schema.config import FeatureConfig
from app.schema.corpus import CorpusManifest, ManifestEntry
from app.schema.audio import Waveform
from app.schema.text import PhonemeInventory
from app.services.tts.dsp_features import encode_wav, extract_features
from app.services.tts.text_frontend import text_to_phonemes
from app.utils import artifacts

logger = get_logger(__name__)

SYNTH_RATE = 48000
SYNTH_AMPLITUDE = 0.5
SYNTH_PADDING_SECONDS = 0.15
TARGET_LOGIT = 4.0

TRANSCRIPTS = (
    "Hola mundo.",
    "El perro corre por la calle.",
    "Tengo 25 años.",
    "¿Qué hora es?",
    "La guitarra suena bien.",
    "Llueve en Zaragoza.",
    "Mañana compraré 3 churros.",
)


def synth_tone(index: int) -> Waveform:
    freq = 220.0 + 55.0 * index
    seconds = 1.2 + 0.2 * (index % 4)
    t = np.arange(int(seconds * SYNTH_RATE)) / SYNTH_RATE
    # light second harmonic and a fade so the envelope is not flat
    tone = np.sin(2 * np.pi * freq * t) + 0.3 * np.sin(4 * np.pi * freq * t)
    fade = np.minimum(1.0, np.minimum(t, t[-1] - t) / 0.02)
    tone = SYNTH_AMPLITUDE * tone * fade / 1.3
    pad = np.zeros(int(SYNTH_PADDING_SECONDS * SYNTH_RATE))
    return Waveform(samples=np.concatenate([pad, tone, pad]), sample_rate=SYNTH_RATE)


def synth_posteriorgram(labels: np.ndarray, n_frames: int, n_classes: int) -> np.ndarray:
    """Peaked log-probabilities along an even segmentation of the frames."""
    logits = np.zeros((n_frames, n_classes))
    for label, frames in zip(labels, np.array_split(np.arange(n_frames), labels.size)):
        logits[frames, label] = TARGET_LOGIT
    return log_softmax(logits, axis=1)


def build_synthetic_corpus(
    root: Path,
    n: int = 5,
    cfg: FeatureConfig | None = None,
    inventory: PhonemeInventory | None = None,
) -> CorpusManifest:
    """Write ``wavs/``, ``posteriors/`` and ``manifest.tsv`` under ``root``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    cfg = cfg or FeatureConfig()
    inventory = inventory or PhonemeInventory()
    root = Path(root)
    (root / "wavs").mkdir(parents=True, exist_ok=True)
    (root / "posteriors").mkdir(parents=True, exist_ok=True)

    entries = []
    for i in range(n):
        utt_id = f"synth_{i:03d}"
        transcript = TRANSCRIPTS[i % len(TRANSCRIPTS)]
        wav_bytes = encode_wav(synth_tone(i))
        (root / "wavs" / f"{utt_id}.wav").write_bytes(wav_bytes)

        # frame count comes from the same chain the pipeline runs
        mel, _ = extract_features(wav_bytes, cfg)
        labels = np.asarray(inventory.encode(text_to_phonemes(transcript, inventory).phonemes))
        posterior = synth_posteriorgram(labels, mel.n_frames, inventory.n_classes)
        artifacts.write_posteriors(root / "posteriors" / f"{utt_id}.mp", posterior)
        entries.append(ManifestEntry(id=utt_id, audio_path=f"wavs/{utt_id}.wav", transcript=transcript))

    manifest = CorpusManifest(entries=tuple(entries))
    manifest.dump(root / "manifest.tsv")
    logger.info("synthetic corpus written", extra={"extra": {"root": str(root), "utterances": n}})
    return manifest
