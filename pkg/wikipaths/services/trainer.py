import copy
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import torch
from pydantic import BaseModel, ConfigDict, Field

from wikipaths.config import ModelConfig, TrainConfig
from wikipaths.core.constants import CHECKPOINT_FORMAT_VERSION, DIVERGENCE_THRESHOLD
from wikipaths.core.exceptions import (
    EmptyTrainingSetError,
    NonFiniteError,
    SchemaMismatchError,
    SplitOverlapError,
    TrainingDivergedError,
)
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import Query
from wikipaths.services.features import FeatureScaling, FeatureSet
from wikipaths.services.gretel import DTYPE, GretelModel, accumulate_gradients, loss
from wikipaths.services.prometheus_metrics import TRAIN_LOSS, TRAINING_EPOCHS, VALIDATION_LOSS

logger = logging.getLogger(__name__)


class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    validation_loss: Optional[float] = None


class TrainingResult(BaseModel):
    history: List[EpochRecord] = Field(default_factory=list)
    best_epoch: int = 0
    best_validation_loss: Optional[float] = None
    stopped_early: bool = False


def _make_optimizer(model: GretelModel, config: TrainConfig) -> torch.optim.Optimizer:
    if config.optimizer == "adam":
        return torch.optim.Adam(model.network.parameters(), lr=config.learning_rate)
    return torch.optim.SGD(model.network.parameters(), lr=config.learning_rate)


def train(
    model: GretelModel,
    train_queries: Sequence[Query],
    validation_queries: Sequence[Query],
    config: Optional[TrainConfig] = None,
) -> TrainingResult:
    """Full-batch gradient descent with early stopping on validation loss.

    The model is left holding the parameters of the best validation epoch
    (epoch 0 is the initialisation). Without validation queries the
    training loss selects the best epoch.
    """
    config = config or TrainConfig()
    if not train_queries:
        raise EmptyTrainingSetError("Training needs at least one query")
    train_ids = {q.trajectory.path_id for q in train_queries}
    shared = train_ids & {q.trajectory.path_id for q in validation_queries}
    if shared:
        raise SplitOverlapError(shared)

    optimizer = _make_optimizer(model, config)
    selection = validation_queries or train_queries

    def _selection_loss() -> float:
        return loss(model, selection, config.chunk_size)

    result = TrainingResult()
    if config.epochs == 0:
        return result

    best_loss = _selection_loss()
    best_state = copy.deepcopy(model.network.state_dict())
    result.best_validation_loss = best_loss
    stale = 0

    for epoch in range(1, config.epochs + 1):
        optimizer.zero_grad(set_to_none=True)
        try:
            train_loss = accumulate_gradients(model, train_queries, config.chunk_size)
        except NonFiniteError as e:
            raise TrainingDivergedError(epoch, float("nan")) from e
        if not math.isfinite(train_loss) or train_loss > DIVERGENCE_THRESHOLD:
            raise TrainingDivergedError(epoch, train_loss)
        optimizer.step()

        selection_loss = _selection_loss()
        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            validation_loss=selection_loss if validation_queries else None,
        )
        result.history.append(record)
        TRAINING_EPOCHS.inc()
        TRAIN_LOSS.set(train_loss)
        if validation_queries:
            VALIDATION_LOSS.set(selection_loss)
        logger.debug(f"Epoch {epoch}: train={train_loss:.6f} selection={selection_loss:.6f}")

        if selection_loss < best_loss:
            best_loss = selection_loss
            best_state = copy.deepcopy(model.network.state_dict())
            result.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                result.stopped_early = True
                logger.info(f"Early stop at epoch {epoch}; best epoch {result.best_epoch}")
                break

    model.network.load_state_dict(best_state)
    result.best_validation_loss = best_loss
    logger.info(
        f"Training finished after {len(result.history)} epochs; best epoch {result.best_epoch}, loss {best_loss:.6f}"
    )
    return result


# Checkpoints


class ParameterBlock(BaseModel):
    shape: List[int]
    values: List[float]


class CheckpointSchema(BaseModel):
    node_columns: List[str]
    edge_columns: List[str]
    diffusion_depth: int
    decay: float
    hidden_widths: List[int]
    projection: str
    num_nodes: int
    num_edges: int


class Checkpoint(BaseModel):
    format_version: int = CHECKPOINT_FORMAT_VERSION
    schema_: CheckpointSchema = Field(..., alias="schema")
    seed: int = 0
    parameters: Dict[str, ParameterBlock]
    scaling: Optional[FeatureScaling] = None

    model_config = ConfigDict(populate_by_name=True)


def save_checkpoint(model: GretelModel, path: Path, seed: int = 0) -> Path:
    parameters = {
        name: ParameterBlock(shape=list(tensor.shape), values=tensor.detach().reshape(-1).tolist())
        for name, tensor in model.network.state_dict().items()
    }
    checkpoint = Checkpoint(
        schema=CheckpointSchema(**model.schema()), seed=seed, parameters=parameters, scaling=model.scaling
    )
    path = Path(path)
    path.write_text(checkpoint.model_dump_json(by_alias=True, indent=2) + "\n", encoding="utf-8")
    return path


def _require(field: str, expected, actual) -> None:
    if expected != actual:
        raise SchemaMismatchError(field, expected, actual)


def load_checkpoint(path: Path, graph: NavGraph, features: FeatureSet) -> GretelModel:
    """Rebuild a model from a checkpoint; refuses a graph or feature schema it was not trained on."""
    checkpoint = Checkpoint.model_validate_json(Path(path).read_text(encoding="utf-8"))
    _require("format_version", checkpoint.format_version, CHECKPOINT_FORMAT_VERSION)
    schema = checkpoint.schema_
    _require("num_nodes", schema.num_nodes, graph.n)
    _require("num_edges", schema.num_edges, graph.m)
    _require("node_columns", tuple(schema.node_columns), tuple(features.node.columns))
    _require("edge_columns", tuple(schema.edge_columns), tuple(features.edge.columns))

    config = ModelConfig(
        diffusion_depth=schema.diffusion_depth,
        decay=schema.decay,
        hidden_widths=tuple(schema.hidden_widths),
        projection=schema.projection,
    )
    model = GretelModel(graph, features, config, seed=checkpoint.seed, scaling=checkpoint.scaling)
    state = {}
    for name, tensor in model.network.state_dict().items():
        block = checkpoint.parameters.get(name)
        if block is None:
            raise SchemaMismatchError(f"parameter {name}", "present", "missing")
        _require(f"parameter {name} shape", block.shape, list(tensor.shape))
        state[name] = torch.tensor(block.values, dtype=DTYPE).reshape(block.shape)
    model.network.load_state_dict(state)
    return model
