import json
import os
from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import ConfigError, CorpusError
from app.schema.audio import Waveform
from app.schema.corpus import CorpusManifest, CorpusStats, ManifestEntry
from app.schema.text import PhonemeInventory
from app.services.corpus.pipeline import (
    CorpusPipeline,
    corpus_stats,
    load_run_config,
    parse_config_text,
    run_pipeline,
)
from app.services.corpus.synthetic import build_synthetic_corpus
from app.services.tts.dsp_features import encode_wav
from app.utils import artifacts
from scripts.run import main


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _run_all(corpus: Path, out: Path, *extra: str) -> int:
    return main(
        [
            "all",
            "--manifest", str(corpus / "manifest.tsv"),
            "--root", str(corpus),
            "--out", str(out),
            "--posteriors", str(corpus / "posteriors"),
            "--quiet",
            *extra,
        ]
    )


@pytest.fixture(scope="module")
def corpus(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("synth")
    build_synthetic_corpus(root, n=5)
    return root


def test_synthetic_corpus_layout(corpus: Path) -> None:
    manifest = CorpusManifest.load(corpus / "manifest.tsv")
    assert manifest.ids == [f"synth_{i:03d}" for i in range(5)]
    for uid in manifest.ids:
        assert (corpus / "wavs" / f"{uid}.wav").is_file()
        assert (corpus / "posteriors" / f"{uid}.mp").is_file()


def test_all_writes_four_artifacts_per_utterance(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert _run_all(corpus, out) == 0

    for sub, suffix in [("text", ".txt"), ("phonemes", ".txt"), ("features", ".mf"), ("durations", ".tsv")]:
        assert sorted(p.name for p in (out / sub).iterdir()) == [f"synth_{i:03d}{suffix}" for i in range(5)]
    assert (out / "inventory.txt").is_file()
    assert (out / "norm_stats.txt").is_file()

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["nUtterances"] == 5
    assert summary["nSucceeded"] == 5
    assert summary["nFailed"] == 0
    assert [u["id"] for u in summary["utterances"]] == [f"synth_{i:03d}" for i in range(5)]
    assert all(u["aligned"] for u in summary["utterances"])
    assert (out / "text" / "synth_002.txt").read_text(encoding="utf-8") == "tengo veinticinco años\n"


def test_durations_sum_to_feature_frames(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path / "out"
    assert _run_all(corpus, out) == 0
    for i in range(5):
        uid = f"synth_{i:03d}"
        features = artifacts.read_features(out / "features" / f"{uid}.mf")
        symbols, durations = artifacts.read_durations(out / "durations" / f"{uid}.tsv")
        assert durations.total == features.shape[0]
        assert symbols == artifacts.read_phonemes(out / "phonemes" / f"{uid}.txt").phonemes
        assert features.min() >= 0.0
        assert features.max() <= 4.0


def test_reruns_are_byte_identical(corpus: Path, tmp_path: Path) -> None:
    assert _run_all(corpus, tmp_path / "a", "--workers", "1") == 0
    assert _run_all(corpus, tmp_path / "b", "--workers", "1") == 0
    assert _run_all(corpus, tmp_path / "c", "--workers", "4") == 0
    first = _tree(tmp_path / "a")
    assert first == _tree(tmp_path / "b")
    assert first == _tree(tmp_path / "c")


def test_missing_wav_is_reported_by_id(corpus: Path, tmp_path: Path, capsys) -> None:
    manifest = CorpusManifest.load(corpus / "manifest.tsv") + CorpusManifest(
        entries=(ManifestEntry(id="ghost", audio_path="wavs/ghost.wav", transcript="hola"),)
    )
    manifest.dump(tmp_path / "manifest.tsv")
    out = tmp_path / "out"
    code = main(
        [
            "all",
            "--manifest", str(tmp_path / "manifest.tsv"),
            "--root", str(corpus),
            "--out", str(out),
            "--posteriors", str(corpus / "posteriors"),
            "--quiet",
        ]
    )
    assert code == 1
    assert "FAILED ghost [features]" in capsys.readouterr().err

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    ids = [u["id"] for u in summary["utterances"]]
    assert sorted(ids) == sorted(manifest.ids)
    assert len(set(ids)) == len(ids)
    (ghost,) = [u for u in summary["utterances"] if u["status"] == "failed"]
    assert ghost["id"] == "ghost"
    assert not (out / "text" / "ghost.txt").exists()


def test_mismatched_posteriorgram_fails_alignment(corpus: Path, tmp_path: Path) -> None:
    posteriors = tmp_path / "posteriors"
    posteriors.mkdir()
    for p in (corpus / "posteriors").iterdir():
        (posteriors / p.name).write_bytes(p.read_bytes())
    n_classes = PhonemeInventory().n_classes
    artifacts.write_posteriors(posteriors / "synth_001.mp", np.full((3, n_classes), -np.log(n_classes)))

    summary = run_pipeline(
        CorpusManifest.load(corpus / "manifest.tsv"),
        corpus,
        None,
        tmp_path / "out",
        posteriors_dir=posteriors,
        progress=False,
    )
    assert summary.n_failed == 1
    (failure,) = summary.failures
    assert (failure.id, failure.stage) == ("synth_001", "align")
    assert "frames" in failure.message


def test_missing_posteriorgram_skips_durations(corpus: Path, tmp_path: Path) -> None:
    posteriors = tmp_path / "posteriors"
    posteriors.mkdir()
    summary = run_pipeline(
        CorpusManifest.load(corpus / "manifest.tsv"),
        corpus,
        None,
        tmp_path / "out",
        posteriors_dir=posteriors,
        progress=False,
        summary=False,
    )
    assert summary.n_failed == 0
    assert not any(u.aligned for u in summary.utterances)
    assert not (tmp_path / "out" / "durations").exists()
    assert not (tmp_path / "out" / "summary.json").exists()


def test_g2p_subcommand_writes_text_and_phonemes_only(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path / "out"
    code = main(
        ["g2p", "--manifest", str(corpus / "manifest.tsv"), "--root", str(corpus), "--out", str(out), "--quiet"]
    )
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["inventory.txt", "phonemes", "text"]
    assert (out / "phonemes" / "synth_000.txt").read_text(encoding="utf-8") == "ˈo l a # m ˈu n d o\n"


def test_pipeline_rejects_bad_stage_setup(corpus: Path, tmp_path: Path) -> None:
    manifest = CorpusManifest.load(corpus / "manifest.tsv")
    with pytest.raises(ConfigError, match="unknown stages"):
        CorpusPipeline(manifest, corpus, tmp_path, stages=["normalize", "vocode"])
    with pytest.raises(ConfigError, match="posteriors"):
        CorpusPipeline(manifest, corpus, tmp_path, stages=["align"])


def test_usage_and_config_errors_exit_two(corpus: Path, tmp_path: Path) -> None:
    assert main(["align", "--manifest", "m.tsv", "--root", ".", "--out", str(tmp_path)]) == 2
    assert main(["bogus"]) == 2

    bad = tmp_path / "bad.conf"
    bad.write_text("hop_length = 256\nwarp_factor = 9\n", encoding="utf-8")
    assert _run_all(corpus, tmp_path / "out", "--config", str(bad)) == 2

    invalid = tmp_path / "invalid.conf"
    invalid.write_text("n_mels = -3\n", encoding="utf-8")
    assert _run_all(corpus, tmp_path / "out", "--config", str(invalid)) == 2

    missing = main(
        ["features", "--manifest", str(tmp_path / "nope.tsv"), "--root", str(corpus), "--out", str(tmp_path / "o")]
    )
    assert missing == 2


def test_config_file_and_overrides(tmp_path: Path) -> None:
    path = tmp_path / "run.conf"
    path.write_text("# feature settings\nhop_length = 256\nlambda_ssim = 0.5  # weight\n\nworkers = 3\n", encoding="utf-8")
    config = load_run_config(path)
    assert config.feature.hop_length == 256
    assert config.loss.lambda_ssim == 0.5
    assert config.workers == 3

    overridden = load_run_config(path, {"hop_length": "200", "n_mels": "80"})
    assert overridden.feature.hop_length == 200
    assert overridden.feature.n_mels == 80
    assert overridden.loss.lambda_ssim == 0.5


@pytest.mark.parametrize("text", ["hop_length 256\n", "= 3\n", "n_mels =\n"])
def test_malformed_config_lines(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_cli_override_reaches_features(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path / "out"
    code = main(
        [
            "features",
            "--manifest", str(corpus / "manifest.tsv"),
            "--root", str(corpus),
            "--out", str(out),
            "--n_mels", "80",
            "--quiet",
        ]
    )
    assert code == 0
    assert artifacts.read_features(out / "features" / "synth_000.mf").shape[1] == 80


def _write_tone(path: Path, n_samples: int, rate: int) -> None:
    t = np.arange(n_samples) / rate
    path.write_bytes(encode_wav(Waveform(samples=0.5 * np.sin(2 * np.pi * 300.0 * t), sample_rate=rate)))


def test_corpus_stats_counts(tmp_path: Path) -> None:
    _write_tone(tmp_path / "a.wav", 22050, 22050)
    _write_tone(tmp_path / "b.wav", 22050, 22050)
    manifest = CorpusManifest(
        entries=(
            ManifestEntry(id="a", audio_path="a.wav", transcript="hola mundo"),
            ManifestEntry(id="b", audio_path="b.wav", transcript="adiós"),
        )
    )
    stats = corpus_stats(manifest, tmp_path)
    assert (stats.n_samples, stats.n_words) == (2, 3)
    assert stats.total_hours == pytest.approx(2 / 3600, abs=1e-6)


def test_corpus_stats_of_empty_manifest() -> None:
    stats = corpus_stats(CorpusManifest(), Path("."))
    assert (stats.n_samples, stats.n_words, stats.total_hours) == (0, 0, 0.0)


def test_corpus_stats_are_additive(corpus: Path) -> None:
    manifest = CorpusManifest.load(corpus / "manifest.tsv")
    head = CorpusManifest(entries=manifest.entries[:2])
    tail = CorpusManifest(entries=manifest.entries[2:])
    whole = corpus_stats(head + tail, corpus)
    parts = corpus_stats(head, corpus) + corpus_stats(tail, corpus)
    assert (whole.n_samples, whole.n_words) == (parts.n_samples, parts.n_words) == (5, 18)
    assert whole.total_seconds == pytest.approx(parts.total_seconds, abs=1e-9)


def test_corpus_stats_name_unreadable_file(tmp_path: Path) -> None:
    (tmp_path / "broken.wav").write_bytes(b"RIFF----WAVEjunk")
    manifest = CorpusManifest(entries=(ManifestEntry(id="broken", audio_path="broken.wav", transcript="hola"),))
    with pytest.raises(CorpusError) as exc:
        corpus_stats(manifest, tmp_path)
    assert exc.value.utt_id == "broken"
    assert "broken" in str(exc.value)


def test_stats_subcommand_prints_table(corpus: Path, tmp_path: Path, capsys) -> None:
    code = main(
        [
            "stats",
            "--manifest", str(corpus / "manifest.tsv"),
            "--root", str(corpus),
            "--set-name", "synth",
            "--out", str(tmp_path),
            "--quiet",
        ]
    )
    assert code == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header == "Set\tSamples\tNumber of words\tDuration (hours)"
    assert row.startswith("synth\t5\t0.0 K\t")
    report = json.loads((tmp_path / "corpus_stats.json").read_text(encoding="utf-8"))
    assert report["nSamples"] == 5
    assert report["setName"] == "synth"


def test_manifest_rejects_duplicates_and_bad_rows(tmp_path: Path) -> None:
    dup = tmp_path / "dup.tsv"
    dup.write_text("a\ta.wav\thola\na\tb.wav\tadiós\n", encoding="utf-8")
    with pytest.raises(CorpusError, match="duplicate"):
        CorpusManifest.load(dup)
    ragged = tmp_path / "ragged.tsv"
    ragged.write_text("a\ta.wav\thola\textra\n", encoding="utf-8")
    with pytest.raises(CorpusError):
        CorpusManifest.load(ragged)


def test_stats_table_row_formatting() -> None:
    stats = CorpusStats(set_name="SH1", n_samples=4920, n_words=50012, total_seconds=5.2 * 3600)
    assert stats.table_row() == "SH1\t4920\t50.0 K\t5.2"


SH1_MANIFEST = os.environ.get("SH1_MANIFEST")
SH1_ROOT = os.environ.get("SH1_ROOT")


@pytest.mark.corpus
@pytest.mark.skipif(not (SH1_MANIFEST and SH1_ROOT), reason="SH1 corpus not available")
def test_sh1_corpus_stats() -> None:
    stats = corpus_stats(CorpusManifest.load(Path(SH1_MANIFEST)), Path(SH1_ROOT), workers=os.cpu_count() or 1)
    assert stats.n_samples == 4920
    assert stats.n_words == pytest.approx(50_000, rel=0.01)
    assert stats.total_hours == pytest.approx(5.2, rel=0.02)
