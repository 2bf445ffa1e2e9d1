"""Two-pass corpus pipeline: normalize -> g2p -> features -> align.

Pass 1 runs per utterance and keeps unnormalized mels in memory. The corpus
min/max is computed at the barrier, then pass 2 writes every artifact.
Results are always merged in manifest order.
"""

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence, TypeVar

from pydantic import ValidationError
from tqdm import tqdm

from app.core.exceptions import ConfigError, CorpusError, TTSCoreError
from app.core.logger import get_logger
from app.schema.align import PosteriorGram
from app.schema.audio import MelSpectrogram, NormStats
from app.schema.config import FeatureConfig, LossConfig, RunConfig
from app.schema.corpus import CorpusManifest, CorpusStats, ManifestEntry, PipelineSummary, UtteranceResult
from app.schema.text import NormalizedText, PhonemeInventory, PhonemeSequence
from app.services.tts.ctc_align import align_durations
from app.services.tts.dsp_features import (
    compute_norm_stats,
    extract_features,
    normalize_mel,
    read_wav,
    trim_silence,
)
from app.services.tts.text_frontend import grapheme_to_phoneme, normalize_text
from app.utils import artifacts

logger = get_logger(__name__)

STAGES = ("normalize", "g2p", "features", "align")
POSTERIOR_SUFFIX = ".mp"
FEATURE_SUFFIX = ".mf"

T = TypeVar("T")
R = TypeVar("R")


def _config_keys() -> dict[str, str]:
    keys = {name: "feature" for name in FeatureConfig.model_fields}
    keys.update({name: "loss" for name in LossConfig.model_fields})
    keys["workers"] = "run"
    return keys


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        values[key] = value
    return values


def load_run_config(path: Path | None = None, overrides: Mapping[str, str] | None = None) -> RunConfig:
    raw: dict[str, str] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        raw.update(parse_config_text(text, str(path)))
    raw.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})

    known = _config_keys()
    sections: dict[str, dict[str, str]] = {"feature": {}, "loss": {}, "run": {}}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        sections[known[key]][key] = value
    try:
        return RunConfig(
            feature=FeatureConfig(**sections["feature"]),
            loss=LossConfig(**sections["loss"]),
            **sections["run"],
        )
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int, desc: str, progress: bool) -> list[R]:
    """``map`` over a thread pool; results come back in input order."""
    disable = not progress or not sys.stderr.isatty()
    if workers <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=disable)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(fn, items), total=len(items), desc=desc, disable=disable))


def _count_words(entry: ManifestEntry) -> int:
    return len(normalize_text(entry.transcript).words)


def utterance_stats(entry: ManifestEntry, root: Path, cfg: FeatureConfig, set_name: str | None = None) -> CorpusStats:
    try:
        w = trim_silence(read_wav(entry.resolve(root)), cfg.trim_threshold_db)
        n_words = _count_words(entry)
    except (TTSCoreError, OSError) as e:
        raise CorpusError(str(e), utt_id=entry.id) from e
    return CorpusStats(set_name=set_name, n_samples=1, n_words=n_words, total_seconds=w.duration)


def corpus_stats(
    manifest: CorpusManifest,
    root: Path,
    cfg: FeatureConfig | None = None,
    set_name: str | None = None,
    workers: int = 1,
    progress: bool = False,
) -> CorpusStats:
    """Sample count, normalized word count and post-trim duration, at each file's native rate."""
    cfg = cfg or FeatureConfig()
    parts = ordered_map(
        lambda e: utterance_stats(e, root, cfg, set_name),
        list(manifest.entries),
        workers,
        "stats",
        progress,
    )
    total = CorpusStats(set_name=set_name)
    for part in parts:
        total = total + part
    return total


@dataclass
class _Utterance:
    entry: ManifestEntry
    text: NormalizedText | None = None
    phonemes: PhonemeSequence | None = None
    mel: MelSpectrogram | None = None
    n_frames: int | None = None
    aligned: bool = False
    failed_stage: str | None = None
    message: str | None = None
    written: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    def fail(self, stage: str, error: BaseException) -> None:
        self.failed_stage = stage
        self.message = str(error)
        logger.warning(
            "utterance failed",
            extra={"extra": {"utt_id": self.entry.id, "stage": stage, "error": str(error)}},
        )

    def result(self) -> UtteranceResult:
        return UtteranceResult(
            id=self.entry.id,
            status="ok" if self.ok else "failed",
            stage=self.failed_stage,
            message=self.message,
            n_phonemes=len(self.phonemes) if self.phonemes is not None else None,
            n_frames=self.n_frames,
            aligned=self.aligned,
        )


class CorpusPipeline:
    def __init__(
        self,
        manifest: CorpusManifest,
        root: Path,
        out_dir: Path,
        config: RunConfig | None = None,
        stages: Iterable[str] = STAGES,
        posteriors_dir: Path | None = None,
        inventory: PhonemeInventory | None = None,
        workers: int | None = None,
        progress: bool = True,
    ) -> None:
        self.manifest = manifest
        self.root = Path(root)
        self.out_dir = Path(out_dir)
        self.config = config or RunConfig()
        requested = set(stages)
        unknown = requested - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown stages: {sorted(unknown)}")
        self.stages = tuple(s for s in STAGES if s in requested)
        if "align" in self.stages and posteriors_dir is None:
            raise ConfigError("the align stage needs a posteriors directory")
        self.posteriors_dir = Path(posteriors_dir) if posteriors_dir is not None else None
        self.inventory = inventory or PhonemeInventory()
        self.workers = workers or self.config.workers
        self.progress = progress
        self.norm_stats: NormStats | None = None

    def _wants(self, stage: str) -> bool:
        return stage in self.stages

    def _dir(self, name: str) -> Path:
        path = self.out_dir / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    def _prepare(self, entry: ManifestEntry) -> _Utterance:
        utt = _Utterance(entry=entry)
        stage = "normalize"
        try:
            utt.text = normalize_text(entry.transcript)
            if self._wants("g2p") or self._wants("align"):
                stage = "g2p"
                utt.phonemes = grapheme_to_phoneme(utt.text, self.inventory)
            if self._wants("features"):
                stage = "features"
                data = entry.resolve(self.root).read_bytes()
                utt.mel, _ = extract_features(data, self.config.feature)
                utt.n_frames = utt.mel.n_frames
        except (TTSCoreError, OSError) as e:
            utt.fail(stage, e)
        return utt

    def _posterior_path(self, utt_id: str) -> Path | None:
        if self.posteriors_dir is None:
            return None
        path = self.posteriors_dir / f"{utt_id}{POSTERIOR_SUFFIX}"
        return path if path.is_file() else None

    def _align(self, utt: _Utterance, path: Path) -> None:
        posterior = PosteriorGram(log_probs=artifacts.read_posteriors(path))
        if utt.n_frames is not None and posterior.n_frames != utt.n_frames:
            raise CorpusError(
                f"posteriorgram has {posterior.n_frames} frames, features have {utt.n_frames}",
                utt_id=utt.entry.id,
            )
        if posterior.n_classes != self.inventory.n_classes:
            raise CorpusError(
                f"posteriorgram has {posterior.n_classes} classes, inventory has {self.inventory.n_classes}",
                utt_id=utt.entry.id,
            )
        durations = align_durations(posterior, utt.phonemes, self.inventory)
        target = self._dir("durations") / f"{utt.entry.id}.tsv"
        artifacts.write_durations(target, utt.phonemes.phonemes, durations)
        utt.aligned = True
        utt.written.append(target)

    def _write(self, utt: _Utterance) -> _Utterance:
        if not utt.ok:
            return utt
        uid = utt.entry.id
        stage = "normalize"
        try:
            target = self._dir("text") / f"{uid}.txt"
            artifacts.write_text(target, str(utt.text))
            utt.written.append(target)
            if self._wants("g2p"):
                stage = "g2p"
                target = self._dir("phonemes") / f"{uid}.txt"
                artifacts.write_phonemes(target, utt.phonemes)
                utt.written.append(target)
            if self._wants("features"):
                stage = "features"
                normalized = normalize_mel(utt.mel, self.norm_stats)
                target = self._dir("features") / f"{uid}{FEATURE_SUFFIX}"
                artifacts.write_features(target, normalized.values)
                utt.written.append(target)
                utt.mel = None
            if self._wants("align"):
                stage = "align"
                posterior_path = self._posterior_path(uid)
                if posterior_path is not None:
                    self._align(utt, posterior_path)
        except (TTSCoreError, OSError) as e:
            utt.fail(stage, e)
        return utt

    def run(self) -> PipelineSummary:
        entries = list(self.manifest.entries)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        logger.info(
            "pipeline started",
            extra={"extra": {"utterances": len(entries), "stages": ",".join(self.stages), "workers": self.workers}},
        )

        prepared = ordered_map(self._prepare, entries, self.workers, "pass 1", self.progress)

        if self._wants("g2p"):
            self.inventory.dump(self.out_dir / "inventory.txt")
        if self._wants("features"):
            mels = [u.mel for u in prepared if u.ok]
            if mels:
                self.norm_stats = compute_norm_stats(mels)
                artifacts.write_norm_stats(self.out_dir / "norm_stats.txt", self.norm_stats)
                logger.info(
                    "norm stats computed",
                    extra={"extra": {"min": self.norm_stats.min_val, "max": self.norm_stats.max_val}},
                )

        written = ordered_map(self._write, prepared, self.workers, "pass 2", self.progress)
        results = [u.result() for u in written]
        n_failed = sum(r.status == "failed" for r in results)
        summary = PipelineSummary(
            stages=list(self.stages),
            n_utterances=len(results),
            n_succeeded=len(results) - n_failed,
            n_failed=n_failed,
            norm_min=self.norm_stats.min_val if self.norm_stats else None,
            norm_max=self.norm_stats.max_val if self.norm_stats else None,
            utterances=results,
        )
        logger.info(
            "pipeline finished",
            extra={"extra": {"succeeded": summary.n_succeeded, "failed": summary.n_failed}},
        )
        return summary


def write_summary(summary: PipelineSummary, out_dir: Path) -> Path:
    path = Path(out_dir) / "summary.json"
    path.write_text(summary.to_json() + "\n", encoding="utf-8", newline="\n")
    return path


def run_pipeline(
    manifest: CorpusManifest,
    root: Path,
    config: RunConfig | None,
    out_dir: Path,
    stages: Iterable[str] = STAGES,
    posteriors_dir: Path | None = None,
    workers: int | None = None,
    progress: bool = True,
    summary: bool = True,
) -> PipelineSummary:
    pipeline = CorpusPipeline(
        manifest,
        root,
        out_dir,
        config=config,
        stages=stages,
        posteriors_dir=posteriors_dir,
        workers=workers,
        progress=progress,
    )
    result = pipeline.run()
    if summary:
        write_summary(result, out_dir)
    return result


def exit_code(summary: PipelineSummary) -> int:
    return 1 if summary.n_failed else 0


__all__ = [
    "STAGES",
    "CorpusPipeline",
    "corpus_stats",
    "exit_code",
    "load_run_config",
    "parse_config_text",
    "run_pipeline",
    "utterance_stats",
    "write_summary",
]
