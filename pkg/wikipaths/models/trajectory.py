from dataclasses import dataclass
from typing import List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from wikipaths.core.constants import DEFAULT_OBSERVED


def default_prefix_len(length: int, observed: int = DEFAULT_OBSERVED) -> int:
    """Observed prefix length for a path: ``min(observed, length - 1)``."""
    return max(1, min(observed, length - 1))


class Trajectory(BaseModel):
    """A navigation path split into an observed prefix and a suffix."""

    model_config = ConfigDict(frozen=True)

    path_id: int = Field(..., ge=0)
    node_ids: Tuple[int, ...]
    prefix_len: int

    @model_validator(mode="after")
    def validate_shape(self) -> "Trajectory":
        if len(self.node_ids) < 2:
            raise ValueError(f"path {self.path_id}: a trajectory needs at least 2 nodes")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ValueError(f"path {self.path_id}: revisits a node")
        if not 1 <= self.prefix_len <= len(self.node_ids) - 1:
            raise ValueError(
                f"path {self.path_id}: prefix length {self.prefix_len} outside 1..{len(self.node_ids) - 1}"
            )
        return self

    @property
    def length(self) -> int:
        return len(self.node_ids)

    @property
    def horizon(self) -> int:
        return len(self.node_ids) - self.prefix_len

    @property
    def prefix(self) -> Tuple[int, ...]:
        return self.node_ids[: self.prefix_len]

    @property
    def suffix(self) -> Tuple[int, ...]:
        return self.node_ids[self.prefix_len :]

    def steps(self) -> List[Tuple[int, int]]:
        return list(zip(self.node_ids[:-1], self.node_ids[1:]))


@dataclass(frozen=True)
class Query:
    """One extrapolation question: given the prefix, where is the agent after ``horizon`` steps."""

    trajectory: Trajectory
    prefix: Tuple[int, ...]
    suffix: Tuple[int, ...]

    @property
    def horizon(self) -> int:
        return len(self.suffix)

    @property
    def target(self) -> int:
        return self.suffix[-1]

    @property
    def current(self) -> int:
        return self.prefix[-1]

    @classmethod
    def from_trajectory(cls, trajectory: Trajectory) -> "Query":
        return cls(trajectory=trajectory, prefix=trajectory.prefix, suffix=trajectory.suffix)


def to_queries(trajectories: Sequence[Trajectory]) -> List[Query]:
    return [Query.from_trajectory(t) for t in trajectories]


class GeneratedPath(BaseModel):
    """Raw result of one random walk over a corpus, before id assignment."""

    titles: Tuple[str, ...]
    target_len: int
    early_terminated: bool

    @property
    def length(self) -> int:
        return len(self.titles)
