import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from wikipaths.config import EvalConfig, ModelConfig, TrainConfig
from wikipaths.core.constants import DEFAULT_SPLIT_RATIOS, DEFAULT_SPLIT_SEED
from wikipaths.core.exceptions import EmptyQuerySetError
from wikipaths.models.corpus import ArticleDocument
from wikipaths.models.graph import NavGraph
from wikipaths.models.report import FEATURE_LABELS, METRIC_ROWS, MetricsReport
from wikipaths.models.trajectory import Trajectory, to_queries
from wikipaths.services.dataset_store import split_dataset
from wikipaths.services.features import FEATURE_CONFIGS, FeatureScaling, build_feature_set
from wikipaths.services.gretel import GretelModel
from wikipaths.services.metrics import evaluate_model
from wikipaths.services.trainer import train

logger = logging.getLogger(__name__)

METRIC_NAMES = ("target_probability", "target_support", "choice_accuracy", "precision_top1", "precision_top5")


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    array = np.clip(np.asarray(values, dtype=np.float64), 0.0, 100.0)
    return float(array.mean()), float(array.std(ddof=0))


def aggregate_runs(config: str, dataset: str, seeds: Sequence[int], runs: Sequence[Mapping[str, Optional[float]]]):
    """Mean and population std across seeded runs; choice accuracy over the runs that define it."""
    fields: Dict[str, Any] = {}
    for name in METRIC_NAMES:
        values = [run[name] for run in runs if run[name] is not None]
        if name == "choice_accuracy" and not values:
            fields[name] = None
            continue
        fields[name] = _mean_std(values)
    return MetricsReport(config=config, dataset=dataset, runs=len(runs), seeds=tuple(seeds), **fields)


class ExperimentRunner:
    """Trains and evaluates one model per (feature configuration, seed) on a fixed split."""

    def __init__(
        self,
        graph: NavGraph,
        trajectories: Sequence[Trajectory],
        documents: Mapping[str, ArticleDocument],
        dataset_label: str,
        model_config: Optional[ModelConfig] = None,
        train_config: Optional[TrainConfig] = None,
        eval_config: Optional[EvalConfig] = None,
        split_ratios: Tuple[float, float, float] = DEFAULT_SPLIT_RATIOS,
        split_seed: int = DEFAULT_SPLIT_SEED,
    ):
        self.graph = graph
        self.documents = documents
        self.dataset_label = dataset_label
        self.model_config = model_config or ModelConfig()
        self.train_config = train_config or TrainConfig()
        self.eval_config = eval_config or EvalConfig()
        self.split = split_dataset(trajectories, split_ratios, split_seed)
        if not self.split.test:
            raise EmptyQuerySetError("The split left no test trajectories")
        self.metrics = {"runs_completed": 0, "configs_completed": 0}

    def get_stats(self) -> Dict[str, Any]:
        return {"metrics": dict(self.metrics), "split_sizes": self.split.sizes()}

    def run_config(self, config: str, seeds: Sequence[int]) -> MetricsReport:
        features = build_feature_set(self.graph, self.documents, self.split.train, config)
        scaling = FeatureScaling.fit(features, self.graph, self.split.train)
        train_queries = to_queries(self.split.train)
        validation_queries = to_queries(self.split.validation)
        test_queries = to_queries(self.split.test)

        runs = []
        for seed in seeds:
            model = GretelModel(self.graph, features, self.model_config, seed=seed, scaling=scaling)
            train(model, train_queries, validation_queries, self.train_config.model_copy(update={"seed": seed}))
            runs.append(evaluate_model(model, test_queries, self.eval_config, self.train_config.chunk_size))
            self.metrics["runs_completed"] += 1
            logger.info(f"Finished run config={config} seed={seed}: {runs[-1]}")

        self.metrics["configs_completed"] += 1
        return aggregate_runs(config, self.dataset_label, seeds, runs)

    def run(self, configs: Sequence[str], seeds: Sequence[int]) -> List[MetricsReport]:
        return [self.run_config(config, seeds) for config in configs]


def run_experiment_matrix(
    graph: NavGraph,
    trajectories: Sequence[Trajectory],
    documents: Mapping[str, ArticleDocument],
    configs: Sequence[str] = tuple(FEATURE_CONFIGS),
    seeds: Sequence[int] = (0, 1, 2),
    dataset_label: str = "dataset",
    **runner_options,
) -> List[MetricsReport]:
    runner = ExperimentRunner(graph, trajectories, documents, dataset_label, **runner_options)
    return runner.run(configs, seeds)


def reports_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    """One row per (configuration, metric) with mean and std."""
    rows = []
    for report in reports:
        for name in METRIC_NAMES:
            value = getattr(report, name)
            rows.append(
                {
                    "dataset": report.dataset,
                    "config": report.config,
                    "label": report.label,
                    "metric": name,
                    "mean": None if value is None else value[0],
                    "std": None if value is None else value[1],
                    "runs": report.runs,
                }
            )
    return pd.DataFrame(rows, columns=["dataset", "config", "label", "metric", "mean", "std", "runs"])


def write_reports_tsv(reports: Sequence[MetricsReport], path: Path) -> Path:
    reports_frame(reports).to_csv(path, sep="\t", index=False, float_format="%.10g", na_rep="NA", lineterminator="\n")
    return Path(path)


def _cell(value: Optional[Tuple[float, float]]) -> str:
    return "undefined" if value is None else f"{value[0]:.2f} ± {value[1]:.4f}"


def format_table(reports: Sequence[MetricsReport], dataset_label: Optional[str] = None) -> str:
    """Metrics as rows, feature configurations as columns."""
    dataset_label = dataset_label or (reports[0].dataset if reports else "")
    header = ["Metric"] + [FEATURE_LABELS.get(r.config, r.config) for r in reports]
    body = [[label] + [_cell(getattr(r, name)) for r in reports] for name, label in METRIC_ROWS]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

    def _line(cells):
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()

    lines = [f"Performance Metrics (%) on {dataset_label}", _line(header), _line(["-" * w for w in widths])]
    lines.extend(_line(row) for row in body)
    return "\n".join(lines) + "\n"


def directional_check(reports: Sequence[MetricsReport]) -> Optional[bool]:
    """Whether any dual-hypergraph configuration beats original edges on precision top5."""
    by_config = {r.config: r for r in reports}
    if "original" not in by_config or len(by_config) < 2:
        return None
    baseline = by_config["original"].precision_top5[0]
    return any(r.precision_top5[0] > baseline for name, r in by_config.items() if name != "original")
