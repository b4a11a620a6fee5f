from typing import Optional


class WikipathsError(Exception):
    """Base class for every error raised by the pipeline."""


# Graph and dataset errors


class GraphError(WikipathsError):
    pass


class UnknownTitleError(GraphError):
    def __init__(self, title: str, context: str = "edge endpoint"):
        self.title = title
        self.context = context
        super().__init__(f"Unknown title in {context}: {title!r}")


class InvalidEdgeError(GraphError):
    def __init__(self, src: str, dst: str, reason: str):
        self.src = src
        self.dst = dst
        super().__init__(f"Invalid edge {src!r} -> {dst!r}: {reason}")


class DuplicateTitleError(GraphError):
    def __init__(self, title: str):
        self.title = title
        super().__init__(f"Duplicate article title: {title!r}")


class DensityDomainError(GraphError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"Density requires at least 2 nodes, got n={n}")


class DatasetError(WikipathsError):
    pass


class DatasetFileMissingError(DatasetError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"Dataset file missing: {path}")


class DatasetFormatError(DatasetError):
    def __init__(self, file: str, line: int, reason: str):
        self.file = file
        self.line = line
        super().__init__(f"{file}:{line}: {reason}")


class DanglingIdError(DatasetError):
    def __init__(self, file: str, ident: int, kind: str = "node"):
        self.file = file
        self.ident = ident
        self.kind = kind
        super().__init__(f"{file} references unknown {kind} id {ident}")


class MissingEdgeError(DatasetError):
    def __init__(self, path_id: int, src: int, dst: int):
        self.path_id = path_id
        self.src = src
        self.dst = dst
        super().__init__(f"Path {path_id} steps {src} -> {dst}, which is not an edge")


class InconsistentDatasetError(DatasetError):
    def __init__(self, file: str, reason: str):
        self.file = file
        super().__init__(f"{file}: {reason}")


class SplitError(DatasetError):
    pass


# Corpus errors


class CorpusError(WikipathsError):
    pass


class ArticleNotFoundError(CorpusError):
    def __init__(self, title: str):
        self.title = title
        super().__init__(f"Article not found in corpus: {title!r}")


class CorpusExhaustedError(CorpusError):
    def __init__(self, seed_title: str, attempts: int):
        self.seed_title = seed_title
        self.attempts = attempts
        super().__init__(
            f"Could not produce a path of length >= 2 from {seed_title!r} after {attempts} attempts"
        )


class FetchError(CorpusError):
    pass


# Feature errors


class FeatureError(WikipathsError):
    pass


class DimensionMismatchError(FeatureError):
    def __init__(self, what: str, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


class UnknownFeatureConfigError(FeatureError):
    def __init__(self, name: str, known):
        self.name = name
        super().__init__(f"Unknown feature configuration {name!r}; expected one of {sorted(known)}")


# Model errors


class ModelError(WikipathsError):
    pass


class WidthMismatchError(ModelError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Edge-logit network expects input width {expected}, got {actual}")


class NonFiniteError(ModelError):
    def __init__(self, stage: str):
        self.stage = stage
        super().__init__(f"Non-finite values produced at stage '{stage}'")


class OperatorSizeError(ModelError):
    def __init__(self, num_edges: int, limit: int):
        self.num_edges = num_edges
        self.limit = limit
        super().__init__(f"Pseudoinverse projection is limited to {limit} edges, graph has {num_edges}")


class EmptyBatchError(ModelError):
    pass


class EmptyTrainingSetError(ModelError):
    pass


class SplitOverlapError(ModelError):
    def __init__(self, path_ids):
        self.path_ids = sorted(path_ids)
        super().__init__(f"Training and validation queries share path ids {self.path_ids[:10]}")


class SchemaMismatchError(ModelError):
    def __init__(self, field: str, expected, actual):
        self.field = field
        self.expected = expected
        self.actual = actual
        super().__init__(f"Checkpoint schema mismatch on {field}: checkpoint has {expected}, data has {actual}")


class TrainingDivergedError(ModelError):
    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"Training diverged at epoch {epoch}: loss={loss}")


# Evaluation errors


class EvaluationError(WikipathsError):
    pass


class EmptyQuerySetError(EvaluationError):
    pass


class OracleSizeError(EvaluationError):
    def __init__(self, n: int, h: int, max_n: int, max_h: Optional[int]):
        self.n = n
        self.h = h
        super().__init__(f"Walk oracle limited to n <= {max_n}, h <= {max_h}; got n={n}, h={h}")
