"""Non-backtracking path extrapolation model.

An edge-logit network scores every edge from the agent's pseudo-coordinates
and the node/edge features; logits are softmax-normalized per source node
and drive a non-backtracking walk over edges. All tensors are float64 on CPU.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import torch
from torch import nn

from wikipaths.config import ModelConfig
from wikipaths.core.constants import DEFAULT_CHUNK_SIZE, INIT_SCALE, LIKELIHOOD_EPS, PINV_MAX_EDGES
from wikipaths.core.exceptions import (
    EmptyBatchError,
    NonFiniteError,
    OperatorSizeError,
    WidthMismatchError,
)
from wikipaths.models.graph import NavGraph
from wikipaths.models.trajectory import Query
from wikipaths.services.features import FeatureScaling, FeatureSet

logger = logging.getLogger(__name__)

DTYPE = torch.float64
COORD_WIDTH = 2


def _check_finite(tensor: torch.Tensor, stage: str) -> None:
    if not bool(torch.isfinite(tensor).all()):
        raise NonFiniteError(stage)


# Pseudo-coordinates


@dataclass(frozen=True)
class PseudoCoordinates:
    """n × 2: (diffused current position, diffused decayed prefix history)."""

    values: np.ndarray
    depth: int


def diffusion_operator(graph: NavGraph) -> sp.csr_matrix:
    """Row-normalized out-adjacency with self-connections."""
    n = graph.n
    rows = np.concatenate([graph.src, np.arange(n)])
    cols = np.concatenate([graph.dst, np.arange(n)])
    adjacency = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n), dtype=np.float64)
    row_sums = np.asarray(adjacency.sum(axis=1)).ravel()
    return sp.csr_matrix(sp.diags(1.0 / row_sums) @ adjacency)


def _seed_channels(n: int, prefixes: Sequence[Sequence[int]], decay: float) -> np.ndarray:
    """n × 2Q matrix: per prefix, the current one-hot then the decayed history."""
    seeds = np.zeros((n, 2 * len(prefixes)), dtype=np.float64)
    for q, prefix in enumerate(prefixes):
        t = len(prefix)
        seeds[prefix[-1], 2 * q] = 1.0
        for tau, node in enumerate(prefix, start=1):
            seeds[node, 2 * q + 1] += decay ** (t - tau)
    return seeds


def _diffuse(operator_t: sp.csr_matrix, seeds: np.ndarray, depth: int) -> np.ndarray:
    out = seeds
    for _ in range(depth):
        out = operator_t @ out
    return np.asarray(out)


def pseudo_coordinates(graph: NavGraph, prefix: Sequence[int], depth: int, decay: float) -> PseudoCoordinates:
    if not prefix:
        raise ValueError("prefix must be nonempty")
    if depth < 0:
        raise ValueError("diffusion depth must be nonnegative")
    if not 0.0 < decay <= 1.0:
        raise ValueError("decay must lie in (0, 1]")
    seeds = _seed_channels(graph.n, [prefix], decay)
    values = _diffuse(diffusion_operator(graph).T.tocsr(), seeds, depth)
    return PseudoCoordinates(values=values, depth=depth)


# Edge-logit network


class EdgeLogitNetwork(nn.Module):
    """MLP over (c_src, c_dst, f_src, f_dst, f_edge) with tanh hidden layers and a scalar output.

    ``hidden_widths=()`` gives a linear model.
    """

    def __init__(self, input_width: int, hidden_widths: Sequence[int] = (16, 16)):
        super().__init__()
        self.input_width = input_width
        self.hidden_widths = tuple(hidden_widths)
        layers: List[nn.Module] = []
        previous = input_width
        for width in self.hidden_widths:
            layers.append(nn.Linear(previous, width, dtype=DTYPE))
            layers.append(nn.Tanh())
            previous = width
        layers.append(nn.Linear(previous, 1, dtype=DTYPE))
        self.layers = nn.Sequential(*layers)

    def reset_parameters(self, seed: int, scale: float = INIT_SCALE) -> None:
        """Seeded uniform initialisation in [-scale, scale]."""
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for param in self.parameters():
                param.copy_(torch.rand(param.shape, generator=generator, dtype=DTYPE) * (2 * scale) - scale)

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        if inputs.shape[-1] != self.input_width:
            raise WidthMismatchError(self.input_width, inputs.shape[-1])
        return self.layers(inputs).squeeze(-1)


def input_width(node_width: int, edge_width: int) -> int:
    return 2 * COORD_WIDTH + 2 * node_width + edge_width


def edge_logits(
    network: EdgeLogitNetwork,
    coords: torch.Tensor,
    node_features: torch.Tensor,
    edge_features: torch.Tensor,
    src: torch.Tensor,
    dst: torch.Tensor,
) -> torch.Tensor:
    """Logits for every edge; ``coords`` is n × 2 or Q × n × 2, the result m or Q × m."""
    squeeze = coords.dim() == 2
    if squeeze:
        coords = coords.unsqueeze(0)
    batch = coords.shape[0]
    static = torch.cat([node_features[src], node_features[dst], edge_features], dim=1)
    inputs = torch.cat(
        [coords[:, src], coords[:, dst], static.unsqueeze(0).expand(batch, -1, -1)],
        dim=2,
    )
    logits = network(inputs)
    _check_finite(logits, "logits")
    return logits.squeeze(0) if squeeze else logits


def normalize_weights(logits: torch.Tensor, src: torch.Tensor, n: int) -> torch.Tensor:
    """Softmax over each node's outgoing edges; accepts m or Q × m logits."""
    squeeze = logits.dim() == 1
    if squeeze:
        logits = logits.unsqueeze(0)
    batch = logits.shape[0]
    index = src.unsqueeze(0).expand(batch, -1)
    peaks = torch.zeros(batch, n, dtype=logits.dtype).scatter_reduce(
        1, index, logits.detach(), reduce="amax", include_self=False
    )
    shifted = torch.exp(logits - peaks[:, src])
    totals = torch.zeros(batch, n, dtype=logits.dtype).index_add(1, src, shifted)
    weights = shifted / totals[:, src]
    _check_finite(weights, "weights")
    return weights.squeeze(0) if squeeze else weights


# Transition operators


@dataclass(frozen=True)
class NonBacktrackingPairs:
    """Every (e_in = i→j, e_out = j→l) with l ≠ i.

    ``trapped`` marks edges whose head has outgoing edges but only the
    backtrack; ``dead_end`` marks edges whose head has none.
    """

    pair_in: torch.Tensor
    pair_out: torch.Tensor
    trapped: np.ndarray
    dead_end: np.ndarray

    @property
    def size(self) -> int:
        return int(self.pair_in.shape[0])


def non_backtracking_pairs(graph: NavGraph) -> NonBacktrackingPairs:
    pair_in: List[int] = []
    pair_out: List[int] = []
    trapped = np.zeros(graph.m, dtype=bool)
    dead_end = np.zeros(graph.m, dtype=bool)
    for edge in graph.edges:
        successors = [f for f in graph.out_adjacency[edge.dst] if graph.dst[f] != edge.src]
        if not graph.out_adjacency[edge.dst]:
            dead_end[edge.id] = True
        elif not successors:
            trapped[edge.id] = True
        pair_in.extend([edge.id] * len(successors))
        pair_out.extend(successors)
    return NonBacktrackingPairs(
        pair_in=torch.tensor(pair_in, dtype=torch.long),
        pair_out=torch.tensor(pair_out, dtype=torch.long),
        trapped=trapped,
        dead_end=dead_end,
    )


def transition_values(weights: torch.Tensor, pairs: NonBacktrackingPairs) -> torch.Tensor:
    """P entries per pair: w(e_out) over the weight of e_in's non-backtracking successors."""
    squeeze = weights.dim() == 1
    if squeeze:
        weights = weights.unsqueeze(0)
    successor_w = weights[:, pairs.pair_out]
    totals = torch.zeros_like(weights).index_add(1, pairs.pair_in, successor_w)
    denom = totals[:, pairs.pair_in]
    values = successor_w / torch.where(denom > 0, denom, torch.ones_like(denom))
    _check_finite(values, "operators")
    return values.squeeze(0) if squeeze else values


@dataclass(frozen=True)
class TransitionOperators:
    """P (m × m, edge to edge) in pair form plus B (m × n, node to edge) as edge weights."""

    graph: NavGraph
    weights: torch.Tensor
    pairs: NonBacktrackingPairs
    values: torch.Tensor
    mode: Literal["head", "pinv"] = "head"

    @property
    def trapped(self) -> np.ndarray:
        return self.pairs.trapped

    def transition_matrix(self) -> torch.Tensor:
        m = self.graph.m
        return torch.zeros(m, m, dtype=DTYPE).index_put((self.pairs.pair_in, self.pairs.pair_out), self.values)


def build_operators(
    weights,
    graph: NavGraph,
    mode: Literal["head", "pinv"] = "head",
    pairs: Optional[NonBacktrackingPairs] = None,
) -> TransitionOperators:
    if mode == "pinv" and graph.m > PINV_MAX_EDGES:
        raise OperatorSizeError(graph.m, PINV_MAX_EDGES)
    weights = torch.as_tensor(weights, dtype=DTYPE)
    pairs = pairs or non_backtracking_pairs(graph)
    if pairs.trapped.any():
        logger.debug(f"{int(pairs.trapped.sum())} edges can only continue by backtracking; their rows are zero")
    return TransitionOperators(
        graph=graph, weights=weights, pairs=pairs, values=transition_values(weights, pairs), mode=mode
    )


# Propagation


@dataclass(frozen=True)
class AgentState:
    """Node distribution of the agent; ``degenerate`` when all mass was lost."""

    x: np.ndarray
    degenerate: bool = False

    @classmethod
    def one_hot(cls, n: int, node: int) -> "AgentState":
        x = np.zeros(n, dtype=np.float64)
        x[node] = 1.0
        return cls(x=x)

    @property
    def mass(self) -> float:
        return float(self.x.sum())


def _propagate_head(
    weights: torch.Tensor,
    values: torch.Tensor,
    pairs: NonBacktrackingPairs,
    src: torch.Tensor,
    dst: torch.Tensor,
    x: torch.Tensor,
    horizons: torch.Tensor,
) -> torch.Tensor:
    """S · P^(h-1) · B · x for a batch with per-row horizons."""
    batch, n = x.shape
    flow = weights * x[:, src]
    result = torch.zeros(batch, n, dtype=DTYPE)
    for step in range(1, int(horizons.max()) + 1):
        if step > 1:
            flow = torch.zeros_like(flow).index_add(1, pairs.pair_out, flow[:, pairs.pair_in] * values)
        landed = torch.zeros(batch, n, dtype=DTYPE).index_add(1, dst, flow)
        result = torch.where((horizons == step).unsqueeze(1), landed, result)
    return result


def _propagate_pinv(
    weights: torch.Tensor,
    values: torch.Tensor,
    pairs: NonBacktrackingPairs,
    src: torch.Tensor,
    x: torch.Tensor,
    horizons: torch.Tensor,
) -> torch.Tensor:
    """B⁺ (Pᵀ)^h B x, negatives clamped to zero and renormalized."""
    batch, n = x.shape
    m = weights.shape[1]
    rows = []
    for q in range(batch):
        to_edges = torch.zeros(m, n, dtype=DTYPE).index_put((torch.arange(m), src), weights[q])
        transition = torch.zeros(m, m, dtype=DTYPE).index_put((pairs.pair_in, pairs.pair_out), values[q])
        flow = to_edges @ x[q]
        for _ in range(int(horizons[q])):
            flow = transition.T @ flow
        estimate = torch.clamp(torch.linalg.pinv(to_edges) @ flow, min=0.0)
        total = estimate.sum()
        rows.append(torch.where(total > 0, estimate / torch.where(total > 0, total, torch.ones_like(total)), estimate))
    return torch.stack(rows) if rows else torch.zeros(0, n, dtype=DTYPE)


def propagate(operators: TransitionOperators, state: AgentState, h: int) -> AgentState:
    """Agent distribution after ``h`` non-backtracking steps."""
    if h < 1:
        raise ValueError("horizon must be at least 1")
    graph = operators.graph
    src = torch.from_numpy(np.array(graph.src))
    dst = torch.from_numpy(np.array(graph.dst))
    x = torch.as_tensor(state.x, dtype=DTYPE).unsqueeze(0)
    weights = operators.weights.unsqueeze(0)
    values = operators.values.unsqueeze(0)
    horizons = torch.tensor([h])
    with torch.no_grad():
        if operators.mode == "pinv":
            out = _propagate_pinv(weights, values, operators.pairs, src, x, horizons)
        else:
            out = _propagate_head(weights, values, operators.pairs, src, dst, x, horizons)
    _check_finite(out, "propagation")
    result = out.squeeze(0).numpy().copy()
    return AgentState(x=result, degenerate=bool(result.sum() == 0.0))


# Suffix likelihood


def suffix_likelihood(
    weights: np.ndarray,
    graph: NavGraph,
    prefix: Sequence[int],
    suffix: Sequence[int],
) -> float:
    """Probability of following ``suffix`` from the end of ``prefix`` without backtracking.

    The first step is conditioned on the prefix's last edge when the prefix
    has at least two nodes.
    """
    weights = np.asarray(weights, dtype=np.float64)
    previous = prefix[-2] if len(prefix) >= 2 else None
    current = prefix[-1]
    probability = 1.0
    for nxt in suffix:
        eid = graph.edge_id(current, nxt)
        if eid is None:
            logger.warning(f"Suffix step {current} -> {nxt} is not an edge; likelihood is 0")
            return 0.0
        if nxt == previous:
            return 0.0
        if previous is None:
            probability *= weights[eid]
        else:
            allowed = [f for f in graph.out_adjacency[current] if graph.dst[f] != previous]
            denom = float(weights[allowed].sum())
            if denom <= 0.0:
                return 0.0
            probability *= weights[eid] / denom
        previous, current = current, nxt
    return float(probability)


# Model


class GretelModel(nn.Module):
    """Edge-logit network bound to a graph and its standardized features.

    ``scaling`` holds the column statistics, normally fitted on the training
    split; without it every row of ``features`` is the reference.
    """

    def __init__(
        self,
        graph: NavGraph,
        features: FeatureSet,
        config: Optional[ModelConfig] = None,
        seed: int = 0,
        scaling: Optional[FeatureScaling] = None,
    ):
        super().__init__()
        features.check_graph(graph)
        self.graph = graph
        self.config = config or ModelConfig()
        if self.config.projection == "pinv" and graph.m > PINV_MAX_EDGES:
            raise OperatorSizeError(graph.m, PINV_MAX_EDGES)
        self.node_columns = features.node.columns
        self.edge_columns = features.edge.columns
        self.scaling = scaling or FeatureScaling.fit(features, graph)
        node_matrix, edge_matrix = self.scaling.apply(features)
        self.register_buffer("node_features", torch.from_numpy(node_matrix).to(DTYPE))
        self.register_buffer("edge_features", torch.from_numpy(edge_matrix).to(DTYPE))
        self.src = torch.from_numpy(np.array(graph.src))
        self.dst = torch.from_numpy(np.array(graph.dst))
        self.pairs = non_backtracking_pairs(graph)
        self._diffusion_t = diffusion_operator(graph).T.tocsr()
        self.network = EdgeLogitNetwork(
            input_width(features.node.width, features.edge.width), self.config.hidden_widths
        )
        self.network.reset_parameters(seed)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return self.graph.m

    def schema(self) -> Dict[str, object]:
        return {
            "node_columns": list(self.node_columns),
            "edge_columns": list(self.edge_columns),
            "diffusion_depth": self.config.diffusion_depth,
            "decay": self.config.decay,
            "hidden_widths": list(self.config.hidden_widths),
            "projection": self.config.projection,
            "num_nodes": self.n,
            "num_edges": self.m,
        }

    def coordinates(self, prefixes: Sequence[Sequence[int]]) -> torch.Tensor:
        """Q × n × 2 pseudo-coordinates; constant with respect to the parameters."""
        seeds = _seed_channels(self.n, prefixes, self.config.decay)
        diffused = _diffuse(self._diffusion_t, seeds, self.config.diffusion_depth)
        coords = diffused.reshape(self.n, len(prefixes), COORD_WIDTH).transpose(1, 0, 2)
        return torch.from_numpy(np.ascontiguousarray(coords)).to(DTYPE)

    def edge_weights(self, prefixes: Sequence[Sequence[int]]) -> torch.Tensor:
        logits = edge_logits(
            self.network, self.coordinates(prefixes), self.node_features, self.edge_features, self.src, self.dst
        )
        return normalize_weights(logits, self.src, self.n)

    def forward(self, prefixes: Sequence[Sequence[int]], horizons: Sequence[int]) -> torch.Tensor:
        """Q × n predicted distributions after each query's horizon."""
        if not prefixes:
            raise EmptyBatchError("No queries to evaluate")
        weights = self.edge_weights(prefixes)
        values = transition_values(weights, self.pairs)
        start = torch.zeros(len(prefixes), self.n, dtype=DTYPE)
        start[torch.arange(len(prefixes)), torch.tensor([p[-1] for p in prefixes])] = 1.0
        steps = torch.tensor(list(horizons), dtype=torch.long)
        if int(steps.min()) < 1:
            raise ValueError("every horizon must be at least 1")
        if self.config.projection == "pinv":
            predictions = _propagate_pinv(weights, values, self.pairs, self.src, start, steps)
        else:
            predictions = _propagate_head(weights, values, self.pairs, self.src, self.dst, start, steps)
        _check_finite(predictions, "propagation")
        return predictions

    def predict(self, queries: Sequence[Query]) -> torch.Tensor:
        return self(list(q.prefix for q in queries), [q.horizon for q in queries])

    def query_nll(self, queries: Sequence[Query]) -> torch.Tensor:
        """Per-query −ln(x̂[target] + ε)."""
        predictions = self.predict(queries)
        targets = torch.tensor([q.target for q in queries], dtype=torch.long)
        mass = predictions[torch.arange(len(queries)), targets]
        degenerate = int((predictions.sum(dim=1) == 0).sum())
        if degenerate:
            logger.debug(f"{degenerate} of {len(queries)} queries lost all mass during propagation")
        nll = -torch.log(mass + LIKELIHOOD_EPS)
        _check_finite(nll, "loss")
        return nll

    def weights_for_prefix(self, prefix: Sequence[int]) -> np.ndarray:
        with torch.no_grad():
            return self.edge_weights([tuple(prefix)])[0].numpy().copy()


def _chunks(queries: Sequence[Query], size: int):
    for start in range(0, len(queries), size):
        yield queries[start : start + size]


def loss(model: GretelModel, queries: Sequence[Query], chunk_size: int = DEFAULT_CHUNK_SIZE) -> float:
    """Mean negative log target likelihood."""
    if not queries:
        raise EmptyBatchError("Loss needs at least one query")
    total = 0.0
    with torch.no_grad():
        for chunk in _chunks(queries, chunk_size):
            total += float(model.query_nll(chunk).sum())
    return total / len(queries)


def accumulate_gradients(model: GretelModel, queries: Sequence[Query], chunk_size: int = DEFAULT_CHUNK_SIZE) -> float:
    """Add d(loss)/dφ to every parameter's ``.grad`` chunk by chunk; returns the loss."""
    if not queries:
        raise EmptyBatchError("Gradient needs at least one query")
    total = 0.0
    for chunk in _chunks(queries, chunk_size):
        chunk_sum = model.query_nll(chunk).sum()
        (chunk_sum / len(queries)).backward()
        total += float(chunk_sum.detach())
    for name, param in model.network.named_parameters():
        if param.grad is not None:
            _check_finite(param.grad, "gradient")
    return total / len(queries)


def gradient(
    model: GretelModel, queries: Sequence[Query], chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Dict[str, np.ndarray]:
    """Exact gradient of ``loss`` with respect to every network parameter."""
    model.network.zero_grad(set_to_none=True)
    accumulate_gradients(model, queries, chunk_size)
    grads = {}
    for name, param in model.network.named_parameters():
        grad = param.grad if param.grad is not None else torch.zeros_like(param)
        grads[name] = grad.detach().numpy().copy()
    model.network.zero_grad(set_to_none=True)
    return grads


# Prediction


def rank_suffixes(
    model: GretelModel,
    prefix: Sequence[int],
    horizon: int,
    top: int = 5,
    beam_width: Optional[int] = None,
) -> List[Tuple[Tuple[int, ...], float]]:
    """Most likely non-backtracking continuations of ``prefix`` with their probabilities.

    Beam search; exact whenever the beam never has to drop a candidate.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    graph = model.graph
    weights = model.weights_for_prefix(prefix)
    width = beam_width or max(top, 64)
    previous = prefix[-2] if len(prefix) >= 2 else None
    beams: List[Tuple[Tuple[int, ...], float, Optional[int], int]] = [((), 1.0, previous, prefix[-1])]
    for _ in range(horizon):
        expanded = []
        for suffix, probability, prev, current in beams:
            allowed = [(f, int(graph.dst[f])) for f in graph.out_adjacency[current] if graph.dst[f] != prev]
            denom = 1.0 if prev is None else float(sum(weights[f] for f, _ in allowed))
            if denom <= 0.0:
                continue
            for eid, nxt in allowed:
                expanded.append((suffix + (nxt,), probability * weights[eid] / denom, current, nxt))
        expanded.sort(key=lambda beam: (-beam[1], beam[0]))
        beams = expanded[:width]
        if not beams:
            break
    return [(suffix, float(probability)) for suffix, probability, _, _ in beams[:top]]
