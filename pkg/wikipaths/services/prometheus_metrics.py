from pathlib import Path
from typing import Dict

from prometheus_client import CollectorRegistry, Counter, Gauge, write_to_textfile

REGISTRY = CollectorRegistry()

# Corpus metrics
PAGES_FETCHED = Counter(
    "wikipaths_pages_fetched_total",
    "Articles fetched from the live source",
    registry=REGISTRY,
)

FETCH_ERRORS = Counter(
    "wikipaths_fetch_errors_total",
    "Failed article fetch attempts, retried or not",
    registry=REGISTRY,
)

CATEGORY_FALLBACKS = Counter(
    "wikipaths_category_fallbacks_total",
    "Category lookups answered with the fallback category",
    ["reason"],
    registry=REGISTRY,
)

# Path generation metrics
PATHS_GENERATED = Counter(
    "wikipaths_paths_generated_total",
    "Paths accepted into a dataset",
    ["policy"],
    registry=REGISTRY,
)

PATHS_DISCARDED = Counter(
    "wikipaths_paths_discarded_total",
    "Walks discarded for being shorter than the minimum length",
    ["policy"],
    registry=REGISTRY,
)

# Retry logger metrics
RETRY_ATTEMPTS = Counter(
    "wikipaths_retry_attempts_total",
    "Total number of retry attempts",
    ["job_name"],
    registry=REGISTRY,
)

RETRY_FAILURES = Counter(
    "wikipaths_retry_failures_total",
    "Total number of retry failures",
    ["job_name"],
    registry=REGISTRY,
)

# Training metrics
TRAINING_EPOCHS = Counter(
    "wikipaths_training_epochs_total",
    "Gradient descent epochs completed",
    registry=REGISTRY,
)

TRAIN_LOSS = Gauge(
    "wikipaths_train_loss",
    "Training loss after the most recent epoch",
    registry=REGISTRY,
)

VALIDATION_LOSS = Gauge(
    "wikipaths_validation_loss",
    "Validation loss after the most recent epoch",
    registry=REGISTRY,
)


def write_metrics(path: Path) -> Path:
    """Dump the registry in node-exporter textfile format."""
    write_to_textfile(str(path), REGISTRY)
    return Path(path)


def collect_metrics() -> Dict[str, float]:
    """Flatten current sample values, keyed by sample name and labels."""
    values: Dict[str, float] = {}
    for metric in REGISTRY.collect():
        for sample in metric.samples:
            if sample.name.endswith("_created"):
                continue
            labels = ",".join(f"{k}={v}" for k, v in sorted(sample.labels.items()))
            key = f"{sample.name}{{{labels}}}" if labels else sample.name
            values[key] = sample.value
    return values
