from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_validator

FEATURE_LABELS = {
    "original": "Original Edges",
    "sim": "Similarity-Hyperedge",
    "dhnode": "DHnode-In-Out-Degree",
    "both": "Similarity-Hyperedge-DHnode-In-Out-Degree",
}

METRIC_ROWS = (
    ("target_probability", "target probability"),
    ("choice_accuracy", "choice accuracy"),
    ("precision_top1", "precision top1"),
    ("precision_top5", "precision top5"),
)


class MetricsReport(BaseModel):
    """Metrics (%) for one feature configuration, as mean and std across seeded runs.

    ``choice_accuracy`` is ``None`` when no run had a qualifying crossroad.
    """

    config: str
    dataset: str
    runs: int = Field(..., ge=1)
    seeds: Tuple[int, ...]
    target_probability: Tuple[float, float]
    target_support: Tuple[float, float]
    choice_accuracy: Optional[Tuple[float, float]]
    precision_top1: Tuple[float, float]
    precision_top5: Tuple[float, float]

    @field_validator("target_probability", "target_support", "precision_top1", "precision_top5")
    @classmethod
    def validate_percentage(cls, v):
        if not 0.0 <= v[0] <= 100.0:
            raise ValueError(f"percentage out of range: {v[0]}")
        return v

    @property
    def label(self) -> str:
        return FEATURE_LABELS.get(self.config, self.config)
