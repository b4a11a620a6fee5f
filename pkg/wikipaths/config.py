import logging
from functools import lru_cache
from pathlib import Path
from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from wikipaths.core.constants import (
    DEFAULT_CHUNK_SIZE,
    DEFAULT_DECAY,
    DEFAULT_DENSE_WINDOW,
    DEFAULT_DIFFUSION_DEPTH,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN_WIDTHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_LEN,
    DEFAULT_MIN_LEN,
    DEFAULT_NUM_PATHS,
    DEFAULT_OBSERVED,
    DEFAULT_PATIENCE,
    DEFAULT_POLITENESS_DELAY,
    DEFAULT_SPLIT_RATIOS,
    DEFAULT_SPLIT_SEED,
)

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Environment-backed settings. The cache directory is the only one."""

    model_config = SettingsConfigDict(env_prefix="WIKIPATHS_", env_file=".env", extra="ignore")

    CACHE_DIR: Path = Path.home() / ".cache" / "wikipaths"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


class CrawlConfig(BaseModel):
    seed_title: str = "Central Macedonia"
    num_paths: int = Field(default=DEFAULT_NUM_PATHS, ge=1)
    min_len: int = DEFAULT_MIN_LEN
    max_len: int = DEFAULT_MAX_LEN
    policy: Literal["dense", "sparse"] = "sparse"
    dense_window: int = DEFAULT_DENSE_WINDOW
    rng_seed: int = 0
    window_before_filter: bool = False
    restart_from_random_node: bool = False
    observed: int = Field(default=DEFAULT_OBSERVED, ge=1)

    @field_validator("dense_window")
    @classmethod
    def validate_dense_window(cls, v):
        if v < 1:
            raise ValueError("dense_window must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_lengths(self) -> "CrawlConfig":
        if not 2 <= self.min_len <= self.max_len:
            raise ValueError(f"need 2 <= min_len <= max_len, got {self.min_len}..{self.max_len}")
        return self


class SourceConfig(BaseModel):
    kind: Literal["local-snapshot", "live-fetch", "synthetic"] = "local-snapshot"
    politeness_delay: float = Field(default=DEFAULT_POLITENESS_DELAY, ge=0.0)
    user_agent: Optional[str] = None


class FeatureConfig(BaseModel):
    name: Literal["original", "sim", "dhnode", "both"] = "both"
    split_ratios: Tuple[float, float, float] = DEFAULT_SPLIT_RATIOS
    split_seed: int = DEFAULT_SPLIT_SEED

    @field_validator("split_ratios")
    @classmethod
    def validate_ratios(cls, v):
        if any(r <= 0 for r in v) or abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must be positive and sum to 1, got {v}")
        return v


class ModelConfig(BaseModel):
    diffusion_depth: int = Field(default=DEFAULT_DIFFUSION_DEPTH, ge=0)
    decay: float = DEFAULT_DECAY
    hidden_widths: Tuple[int, ...] = DEFAULT_HIDDEN_WIDTHS
    projection: Literal["head", "pinv"] = "head"

    @field_validator("decay")
    @classmethod
    def validate_decay(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError("decay must lie in (0, 1]")
        return v

    @field_validator("hidden_widths")
    @classmethod
    def validate_hidden(cls, v):
        if any(w < 1 for w in v):
            raise ValueError("hidden widths must be positive")
        return v


class TrainConfig(BaseModel):
    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0.0)
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=0)
    patience: int = Field(default=DEFAULT_PATIENCE, ge=1)
    seed: int = 0
    chunk_size: int = Field(default=DEFAULT_CHUNK_SIZE, ge=1)
    optimizer: Literal["sgd", "adam"] = "sgd"


class EvalConfig(BaseModel):
    degree_mode: Literal["out", "total"] = "out"
    target_mode: Literal["mass", "support"] = "mass"


def load_config_file(path: Path) -> Dict[str, str]:
    """Read a flat ``key=value`` file. Keys are normalised to flag names with underscores."""
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    logger.info(f"Loaded {len(values)} settings from {path}")
    return values
