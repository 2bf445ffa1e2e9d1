import argparse
import json
import os
import sys
from pathlib import Path

try:
    base = Path(__file__).resolve().parent
except NameError:
    base = Path.cwd()

sys.path.insert(0, os.path.abspath(os.path.dirname(base)))


from app.core.exceptions import ConfigError, CorpusError, TTSCoreError  # noqa: E402
from app.core.logger import configure_logger, get_logger, logger_exception  # noqa: E402
from app.schema.config import FeatureConfig, LossConfig  # noqa: E402
from app.schema.corpus import CorpusManifest  # noqa: E402
from app.services.corpus.pipeline import (  # noqa: E402
    corpus_stats,
    exit_code,
    load_run_config,
    run_pipeline,
)
from app.services.corpus.synthetic import build_synthetic_corpus  # noqa: E402
from config import settings  # noqa: E402

logger = get_logger("tts-core")

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2

SUBCOMMAND_STAGES = {
    "normalize": ("normalize",),
    "g2p": ("normalize", "g2p"),
    "features": ("normalize", "features"),
    "align": ("normalize", "g2p", "align"),
    "all": ("normalize", "g2p", "features", "align"),
}
CONFIG_KEYS = [*FeatureConfig.model_fields, *LossConfig.model_fields]
STATS_HEADER = "Set\tSamples\tNumber of words\tDuration (hours)"


def _add_common(p: argparse.ArgumentParser, needs_out: bool = True) -> None:
    p.add_argument("--manifest", type=Path, required=True, help="UTF-8 TSV: id, wav path, transcript")
    p.add_argument("--root", type=Path, required=True, help="directory the wav paths are relative to")
    p.add_argument("--out", type=Path, required=needs_out, help="output directory")
    p.add_argument("--config", type=Path, help="flat 'key = value' config file")
    p.add_argument("--workers", type=int, default=None, help=f"parallel workers, default {settings.WORKERS}")
    p.add_argument("--quiet", action="store_true", help="no progress bars")
    group = p.add_argument_group("config overrides")
    for key in CONFIG_KEYS:
        group.add_argument(f"--{key}", dest=f"cfg_{key}", metavar="VALUE", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tts-core", description="Spanish TTS corpus preprocessing")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in SUBCOMMAND_STAGES:
        p = sub.add_parser(name, help=f"run stages: {', '.join(SUBCOMMAND_STAGES[name])}")
        _add_common(p)
        p.add_argument(
            "--posteriors",
            type=Path,
            required=name == "align",
            help="directory of <id>.mp posteriorgram files",
        )

    p = sub.add_parser("stats", help="sample, word and post-trim duration counts")
    _add_common(p, needs_out=False)
    p.add_argument("--set-name", default=None, help="label for the stats row")

    p = sub.add_parser("synth", help="write the bundled synthetic corpus")
    p.add_argument("--root", type=Path, required=True)
    p.add_argument("-n", type=int, default=5, help="number of utterances")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    return {key: getattr(args, f"cfg_{key}") for key in CONFIG_KEYS if getattr(args, f"cfg_{key}") is not None}


def _run_stats(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, _overrides(args))
    manifest = CorpusManifest.load(args.manifest)
    try:
        stats = corpus_stats(
            manifest,
            args.root,
            config.feature,
            set_name=args.set_name,
            workers=args.workers or config.workers,
            progress=not args.quiet,
        )
    except CorpusError as e:
        logger.error("stats failed", extra={"extra": {"utt_id": e.utt_id, "error": str(e)}})
        return EXIT_FAILURES
    print(STATS_HEADER)
    print(stats.table_row())
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "corpus_stats.json").write_text(
            json.dumps(stats.report(), indent=2) + "\n", encoding="utf-8", newline="\n"
        )
    return EXIT_OK


def _run_stages(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, _overrides(args))
    manifest = CorpusManifest.load(args.manifest)
    stages = SUBCOMMAND_STAGES[args.command]
    if args.command == "all" and args.posteriors is None:
        stages = tuple(s for s in stages if s != "align")
    summary = run_pipeline(
        manifest,
        args.root,
        config,
        args.out,
        stages=stages,
        posteriors_dir=args.posteriors,
        workers=args.workers,
        progress=not args.quiet,
        summary=args.command == "all",
    )
    for failure in summary.failures:
        print(f"FAILED {failure.id} [{failure.stage}]: {failure.message}", file=sys.stderr)
    return exit_code(summary)


def main(argv: list[str] | None = None) -> int:
    configure_logger(
        level=settings.LOG_LEVEL,
        log_file=settings.LOG_FILE or None,
        use_json=settings.LOG_JSON,
        sentry_dsn=settings.SENTRY_DSN or None,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        if args.command == "synth":
            build_synthetic_corpus(args.root, n=args.n)
            return EXIT_OK
        if args.command == "stats":
            return _run_stats(args)
        return _run_stages(args)
    except ConfigError as e:
        logger.error("configuration error", extra={"extra": {"error": str(e)}})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CorpusError as e:
        # manifest-level problems: nothing was processed
        logger.error("corpus error", extra={"extra": {"error": str(e)}})
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TTSCoreError, OSError) as e:
        logger_exception(e)
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
