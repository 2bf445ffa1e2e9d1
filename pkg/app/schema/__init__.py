from .align import AlignmentPath, DurationSequence, PosteriorGram
from .audio import MelSpectrogram, NormStats, Waveform
from .config import FeatureConfig, LossConfig, RunConfig
from .corpus import CorpusManifest, CorpusStats, ManifestEntry, PipelineSummary, UtteranceResult
from .loss import AcousticGradients, AlignerLossBreakdown, LossBreakdown
from .text import NormalizedText, PhonemeInventory, PhonemeSequence
from .upsample import FrameSequence, HiddenSequence, UpsampleSpec

__all__ = [
    "AlignmentPath",
    "DurationSequence",
    "PosteriorGram",
    "MelSpectrogram",
    "NormStats",
    "Waveform",
    "FeatureConfig",
    "LossConfig",
    "RunConfig",
    "CorpusManifest",
    "CorpusStats",
    "ManifestEntry",
    "PipelineSummary",
    "UtteranceResult",
    "AcousticGradients",
    "AlignerLossBreakdown",
    "LossBreakdown",
    "NormalizedText",
    "PhonemeInventory",
    "PhonemeSequence",
    "FrameSequence",
    "HiddenSequence",
    "UpsampleSpec",
]
