"""Command-line entry point: ``wikipaths <command> [options]``."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from wikipaths import __version__
from wikipaths.config import (
    CrawlConfig,
    EvalConfig,
    FeatureConfig,
    ModelConfig,
    SourceConfig,
    TrainConfig,
    get_settings,
    load_config_file,
)
from wikipaths.core import constants
from wikipaths.core.exceptions import WikipathsError
from wikipaths.core.log_config import configure_logging
from wikipaths.jobs.dataset_builder import (
    build_dataset,
    density_summary,
    load_documents,
    write_dataset_bundle,
)
from wikipaths.jobs.experiment_matrix import (
    aggregate_runs,
    directional_check,
    format_table,
    run_experiment_matrix,
    write_reports_tsv,
)
from wikipaths.models.trajectory import to_queries
from wikipaths.services.corpus_source import (
    LiveFetchSource,
    LocalSnapshotSource,
    SyntheticCorpusSource,
    decode_link,
)
from wikipaths.services.dataset_store import dataset_hash, load_dataset, split_dataset
from wikipaths.services.features import (
    FEATURE_CONFIGS,
    FeatureScaling,
    FeatureSet,
    build_feature_set,
    config_for_columns,
)
from wikipaths.services.gretel import GretelModel, rank_suffixes
from wikipaths.services.metrics import evaluate_model
from wikipaths.services.pathgen import generate_dataset
from wikipaths.services.prometheus_metrics import write_metrics
from wikipaths.services.rate_limiter import RateLimiter
from wikipaths.services.trainer import load_checkpoint, save_checkpoint, train
from wikipaths.services.wikispeedia import load_wikispeedia

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

MANIFEST_FILE = "manifest.json"
CHECKPOINT_FILE = "checkpoint.json"


class UsageError(Exception):
    """Bad invocation or a missing prerequisite artifact."""


def _int_list(text: str) -> List[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _float_tuple(text: str):
    return tuple(float(part) for part in text.split(",") if part.strip())


def _str_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _require_path(path: Optional[Path], what: str, directory: bool = False) -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    ok = path.is_dir() if directory else path.exists()
    if not ok:
        raise UsageError(f"{what} not found: {path}")
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_manifest(output_dir: Path, command: str, args: argparse.Namespace, **outputs: Any) -> Path:
    """Resolved configuration plus outputs; sorted keys and no timestamps so reruns match byte for byte."""
    options = {k: v for k, v in vars(args).items() if k not in {"handler", "command"}}
    manifest = {
        "command": command,
        "version": __version__,
        "config": _jsonable(options),
        "outputs": _jsonable(outputs),
    }
    path = Path(output_dir) / MANIFEST_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


# Shared option groups


def _add_split_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--split-ratios", type=_float_tuple, default=constants.DEFAULT_SPLIT_RATIOS)
    parser.add_argument("--split-seed", type=int, default=constants.DEFAULT_SPLIT_SEED)


def _add_model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--diffusion-depth", type=int, default=constants.DEFAULT_DIFFUSION_DEPTH)
    parser.add_argument("--decay", type=float, default=constants.DEFAULT_DECAY)
    parser.add_argument(
        "--hidden-widths",
        type=_int_list,
        default=list(constants.DEFAULT_HIDDEN_WIDTHS),
        help="comma-separated hidden layer widths; empty string for a linear model",
    )
    parser.add_argument("--projection", choices=["head", "pinv"], default="head")


def _add_train_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--learning-rate", type=float, default=constants.DEFAULT_LEARNING_RATE)
    parser.add_argument("--epochs", type=int, default=constants.DEFAULT_EPOCHS)
    parser.add_argument("--patience", type=int, default=constants.DEFAULT_PATIENCE)
    parser.add_argument("--chunk-size", type=int, default=constants.DEFAULT_CHUNK_SIZE)
    parser.add_argument("--optimizer", choices=["sgd", "adam"], default="sgd")


def _add_eval_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--degree-mode", choices=["out", "total"], default="out")
    parser.add_argument("--target-mode", choices=["mass", "support"], default="mass")


def _model_config(args) -> ModelConfig:
    return ModelConfig(
        diffusion_depth=args.diffusion_depth,
        decay=args.decay,
        hidden_widths=tuple(args.hidden_widths),
        projection=args.projection,
    )


def _train_config(args, seed: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        patience=args.patience,
        seed=seed,
        chunk_size=args.chunk_size,
        optimizer=args.optimizer,
    )


def _eval_config(args) -> EvalConfig:
    return EvalConfig(degree_mode=args.degree_mode, target_mode=args.target_mode)


def _split(args, trajectories):
    feature_config = FeatureConfig(split_ratios=args.split_ratios, split_seed=args.split_seed)
    return split_dataset(trajectories, feature_config.split_ratios, feature_config.split_seed)


# Commands


def cmd_build_dataset(args) -> int:
    crawl = CrawlConfig(
        seed_title=args.seed_title,
        num_paths=args.paths,
        min_len=args.min_len,
        max_len=args.max_len,
        policy=args.policy,
        dense_window=args.dense_window,
        rng_seed=args.seed,
        window_before_filter=args.window_before_filter,
        restart_from_random_node=args.restart_from_random_node,
        observed=args.observed,
    )
    if args.categorize and not args.allow_network:
        raise UsageError("--categorize queries DBpedia and needs --allow-network")

    limiter = RateLimiter(args.politeness_delay)
    if args.synthetic:
        source = SyntheticCorpusSource(args.synthetic, args.synthetic_links, seed=args.synthetic_seed)
        if args.seed_title not in source.titles:
            crawl = crawl.model_copy(update={"seed_title": source.titles[0]})
    elif args.corpus is not None:
        source = LocalSnapshotSource(_require_path(args.corpus, "corpus directory", directory=True))
    elif args.allow_network:
        source_config = SourceConfig(
            kind="live-fetch", politeness_delay=args.politeness_delay, user_agent=args.user_agent
        )
        source = LiveFetchSource(
            get_settings().CACHE_DIR,
            politeness_delay=source_config.politeness_delay,
            user_agent=source_config.user_agent,
            rate_limiter=limiter,
        )
    else:
        raise UsageError("one of --corpus, --synthetic or --allow-network is required")

    summary = build_dataset(source, crawl, args.output, categorize=args.categorize, rate_limiter=limiter)
    write_manifest(args.output, "build-dataset", args, **summary)
    print(density_summary_line(summary))
    return EXIT_OK


def density_summary_line(summary: Dict[str, Any]) -> str:
    value = summary["density"]
    shown = "undefined" if value is None else f"{value:.6g}"
    return f"nodes={summary['nodes']} edges={summary['edges']} paths={summary['paths']} density={shown}"


def cmd_import_wikispeedia(args) -> int:
    paths_file = _require_path(args.paths_file, "Wikispeedia paths file")
    links_file = _require_path(args.links_file, "Wikispeedia links file") if args.links_file else None
    graph, trajectories = load_wikispeedia(paths_file, links_file, observed=args.observed)
    summary = write_dataset_bundle(graph, trajectories, {}, {}, args.output)
    write_manifest(args.output, "import-wikispeedia", args, **summary)
    print(density_summary(graph))
    return EXIT_OK


def cmd_extract_features(args) -> int:
    dataset_dir = _require_path(args.dataset, "dataset directory", directory=True)
    if args.features not in FEATURE_CONFIGS:
        raise UsageError(f"unknown feature configuration {args.features!r}; choose from {sorted(FEATURE_CONFIGS)}")
    graph, trajectories, _ = load_dataset(dataset_dir)
    split = _split(args, trajectories)
    documents = load_documents(dataset_dir, args.corpus)
    feature_set = build_feature_set(graph, documents, split.train, args.features)
    feature_set.save(args.output)
    write_manifest(
        args.output,
        "extract-features",
        args,
        dataset_hash=dataset_hash(dataset_dir),
        edge_columns=list(feature_set.edge.columns),
        edge_width=feature_set.edge.width,
    )
    print(f"features={args.features} edge_width={feature_set.edge.width}")
    return EXIT_OK


def _load_inputs(args):
    dataset_dir = _require_path(args.dataset, "dataset directory", directory=True)
    features_dir = _require_path(args.features_dir, "features directory", directory=True)
    graph, trajectories, _ = load_dataset(dataset_dir)
    features = FeatureSet.load(features_dir)
    features.check_graph(graph)
    return dataset_dir, graph, trajectories, features


def cmd_train(args) -> int:
    dataset_dir, graph, trajectories, features = _load_inputs(args)
    split = _split(args, trajectories)
    scaling = FeatureScaling.fit(features, graph, split.train)
    model = GretelModel(graph, features, _model_config(args), seed=args.seed, scaling=scaling)
    result = train(model, to_queries(split.train), to_queries(split.validation), _train_config(args, args.seed))

    output = Path(args.output)
    output.mkdir(parents=True, exist_ok=True)
    save_checkpoint(model, output / CHECKPOINT_FILE, seed=args.seed)
    history = pd.DataFrame([record.model_dump() for record in result.history], columns=["epoch", "train_loss", "validation_loss"])
    history.to_csv(output / "history.tsv", sep="\t", index=False, float_format="%.17g", na_rep="NA", lineterminator="\n")
    write_manifest(
        output,
        "train",
        args,
        dataset_hash=dataset_hash(dataset_dir),
        best_epoch=result.best_epoch,
        best_validation_loss=result.best_validation_loss,
        epochs_run=len(result.history),
    )
    print(f"best_epoch={result.best_epoch} best_loss={result.best_validation_loss}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    checkpoint = _require_path(args.checkpoint, "checkpoint")
    dataset_dir, graph, trajectories, features = _load_inputs(args)
    split = _split(args, trajectories)
    model = load_checkpoint(checkpoint, graph, features)
    run = evaluate_model(model, to_queries(split.test), _eval_config(args))
    config_name = config_for_columns(features.edge.columns) or "custom"
    report = aggregate_runs(config_name, args.dataset_label or dataset_dir.name, (args.seed,), [run])

    output = Path(args.output)
    output.mkdir(parents=True, exist_ok=True)
    write_reports_tsv([report], output / "report.tsv")
    table = format_table([report])
    (output / "report.txt").write_text(table, encoding="utf-8")
    write_manifest(output, "evaluate", args, dataset_hash=dataset_hash(dataset_dir), report=report.model_dump())
    sys.stdout.write(table)
    return EXIT_OK


def cmd_predict(args) -> int:
    checkpoint = _require_path(args.checkpoint, "checkpoint")
    _, graph, _, features = _load_inputs(args)
    model = load_checkpoint(checkpoint, graph, features)
    prefix = [graph.node_id(decode_link(title.strip())) for title in args.prefix.split(",") if title.strip()]
    if not prefix:
        raise UsageError("--prefix needs at least one title")
    ranked = rank_suffixes(model, prefix, args.horizon, top=args.top)
    lines = ["suffix\tprobability"]
    for suffix, probability in ranked:
        lines.append(f"{' -> '.join(graph.title(v) for v in suffix)}\t{probability:.6f}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_experiment(args) -> int:
    unknown = [c for c in args.configs if c not in FEATURE_CONFIGS]
    if unknown:
        raise UsageError(f"unknown feature configurations {unknown}; choose from {sorted(FEATURE_CONFIGS)}")

    if args.dataset is not None:
        dataset_dir = _require_path(args.dataset, "dataset directory", directory=True)
        graph, trajectories, _ = load_dataset(dataset_dir)
        documents = load_documents(dataset_dir, args.corpus)
        label = args.dataset_label or dataset_dir.name
        data_hash = dataset_hash(dataset_dir)
    elif args.synthetic_paths:
        source = SyntheticCorpusSource(args.synthetic_articles, args.synthetic_links, seed=args.synthetic_seed)
        crawl = CrawlConfig(seed_title=source.titles[0], num_paths=args.synthetic_paths, rng_seed=args.synthetic_seed)
        graph, trajectories = generate_dataset(source, crawl)
        documents = source.documents_for(graph.titles)
        label = args.dataset_label or f"synthetic-{args.synthetic_paths}"
        bundle = write_dataset_bundle(graph, trajectories, {}, documents, Path(args.output) / "dataset")
        data_hash = bundle["dataset_hash"]
    else:
        raise UsageError("one of --dataset or --synthetic-paths is required")

    reports = run_experiment_matrix(
        graph,
        trajectories,
        documents,
        configs=args.configs,
        seeds=args.seeds,
        dataset_label=label,
        model_config=_model_config(args),
        train_config=_train_config(args),
        eval_config=_eval_config(args),
        split_ratios=FeatureConfig(split_ratios=args.split_ratios).split_ratios,
        split_seed=args.split_seed,
    )
    output = Path(args.output)
    output.mkdir(parents=True, exist_ok=True)
    write_reports_tsv(reports, output / "reports.tsv")
    table = format_table(reports, label)
    (output / "table.txt").write_text(table, encoding="utf-8")
    write_manifest(
        output,
        "experiment",
        args,
        dataset_hash=data_hash,
        dht_beats_original_precision_top5=directional_check(reports),
        reports=[r.model_dump() for r in reports],
    )
    sys.stdout.write(table)
    return EXIT_OK


# Parser


def _global_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, help="flat key=value file supplying option defaults")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--metrics-file", type=Path, help="write Prometheus textfile metrics here on exit")
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wikipaths",
        parents=[_global_options()],
        description="Build navigation-path datasets, extract dual-hypergraph features, train and evaluate path extrapolation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    build = sub.add_parser("build-dataset", help="generate a dataset by random walks over a corpus")
    build.add_argument("--corpus", type=Path, help="local snapshot directory")
    build.add_argument("--synthetic", type=int, default=0, help="use a seeded synthetic corpus of this many articles")
    build.add_argument("--synthetic-links", type=int, default=4)
    build.add_argument("--synthetic-seed", type=int, default=0)
    build.add_argument("--allow-network", action="store_true", help="permit live fetching and category lookups")
    build.add_argument("--output", type=Path, required=True)
    build.add_argument("--seed-title", default=CrawlConfig().seed_title)
    build.add_argument("--paths", type=int, default=constants.DEFAULT_NUM_PATHS)
    build.add_argument("--min-len", type=int, default=constants.DEFAULT_MIN_LEN)
    build.add_argument("--max-len", type=int, default=constants.DEFAULT_MAX_LEN)
    build.add_argument("--policy", choices=["dense", "sparse"], default="sparse")
    build.add_argument("--dense-window", type=int, default=constants.DEFAULT_DENSE_WINDOW)
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--window-before-filter", action="store_true")
    build.add_argument("--restart-from-random-node", action="store_true")
    build.add_argument("--observed", type=int, default=constants.DEFAULT_OBSERVED)
    build.add_argument("--categorize", action="store_true", help="look up DBpedia categories")
    build.add_argument("--politeness-delay", type=float, default=constants.DEFAULT_POLITENESS_DELAY)
    build.add_argument("--user-agent", default=None)
    build.set_defaults(handler=cmd_build_dataset)

    wiki = sub.add_parser("import-wikispeedia", help="convert Wikispeedia paths into a dataset")
    wiki.add_argument("--paths-file", type=Path, required=True)
    wiki.add_argument("--links-file", type=Path)
    wiki.add_argument("--output", type=Path, required=True)
    wiki.add_argument("--observed", type=int, default=constants.DEFAULT_OBSERVED)
    wiki.set_defaults(handler=cmd_import_wikispeedia)

    feats = sub.add_parser("extract-features", help="compute node and edge feature matrices")
    feats.add_argument("--dataset", type=Path, required=True)
    feats.add_argument("--corpus", type=Path, help="article documents; defaults to the dataset's copy")
    feats.add_argument("--features", default="both", help=f"one of {', '.join(FEATURE_CONFIGS)}")
    feats.add_argument("--output", type=Path, required=True)
    _add_split_options(feats)
    feats.set_defaults(handler=cmd_extract_features)

    for name, handler, help_text in (
        ("train", cmd_train, "train a model and write a checkpoint"),
        ("evaluate", cmd_evaluate, "evaluate a checkpoint on the test split"),
        ("predict", cmd_predict, "rank likely suffixes for a prefix"),
    ):
        command = sub.add_parser(name, help=help_text)
        command.add_argument("--dataset", type=Path, required=True)
        command.add_argument("--features-dir", type=Path, required=True)
        command.add_argument("--seed", type=int, default=0)
        _add_split_options(command)
        if name == "train":
            command.add_argument("--output", type=Path, required=True)
            _add_model_options(command)
            _add_train_options(command)
        else:
            command.add_argument("--checkpoint", type=Path)
        if name == "evaluate":
            command.add_argument("--output", type=Path, required=True)
            command.add_argument("--dataset-label")
            _add_eval_options(command)
        if name == "predict":
            command.add_argument("--prefix", required=True, help="comma-joined article titles")
            command.add_argument("--horizon", type=int, default=1)
            command.add_argument("--top", type=int, default=5)
        command.set_defaults(handler=handler)

    experiment = sub.add_parser("experiment", help="run every feature configuration over several seeds")
    experiment.add_argument("--dataset", type=Path)
    experiment.add_argument("--corpus", type=Path)
    experiment.add_argument("--synthetic-paths", type=int, default=0)
    experiment.add_argument("--synthetic-articles", type=int, default=50)
    experiment.add_argument("--synthetic-links", type=int, default=4)
    experiment.add_argument("--synthetic-seed", type=int, default=0)
    experiment.add_argument("--dataset-label")
    experiment.add_argument("--configs", type=_str_list, default=list(FEATURE_CONFIGS))
    experiment.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    experiment.add_argument("--output", type=Path, required=True)
    _add_split_options(experiment)
    _add_model_options(experiment)
    _add_train_options(experiment)
    _add_eval_options(experiment)
    experiment.set_defaults(handler=cmd_experiment)
    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, values: Dict[str, str]) -> None:
    """Config file values become defaults of every subcommand that has the option."""
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for command in subparsers.choices.values():
        updates = {}
        for action in command._actions:
            if action.dest not in values:
                continue
            raw = values[action.dest]
            if action.nargs == 0:
                updates[action.dest] = raw.strip().lower() in {"1", "true", "yes", "on"}
            elif action.type is not None:
                updates[action.dest] = action.type(raw)
            else:
                updates[action.dest] = raw
            action.required = False
        command.set_defaults(**updates)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = _global_options().parse_known_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(pre.log_level)
    try:
        if pre.config is not None:
            _apply_config_defaults(parser, load_config_file(_require_path(pre.config, "config file")))
        args = parser.parse_args(argv)
        return args.handler(args)
    except SystemExit as e:
        return int(e.code or 0)
    except WikipathsError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"wikipaths: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except (UsageError, ValidationError, ValueError) as e:
        print(f"wikipaths: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if pre.metrics_file is not None:
            write_metrics(pre.metrics_file)
