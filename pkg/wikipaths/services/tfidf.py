import logging
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.feature_extraction.text import TfidfVectorizer

logger = logging.getLogger(__name__)

# Lowercased runs of letters and digits.
TOKEN_PATTERN = r"(?u)[^\W_]+"


class TfidfModel:
    """TF-IDF over a fixed document list.

    tf is the raw count, idf = ln((1 + N) / (1 + df)) + 1, rows are L2
    normalized; an empty document keeps a zero row.
    """

    def __init__(self):
        self._vectorizer = TfidfVectorizer(
            lowercase=True,
            token_pattern=TOKEN_PATTERN,
            smooth_idf=True,
            sublinear_tf=False,
            norm="l2",
        )
        self.vectors: sp.csr_matrix = sp.csr_matrix((0, 0))
        self.vocabulary: dict = {}
        self.idf: np.ndarray = np.zeros(0)

    def fit(self, documents: Sequence[str]) -> "TfidfModel":
        try:
            self.vectors = sp.csr_matrix(self._vectorizer.fit_transform(documents), dtype=np.float64)
            self.vocabulary = dict(self._vectorizer.vocabulary_)
            self.idf = np.asarray(self._vectorizer.idf_, dtype=np.float64)
        except ValueError:
            # every document is empty
            logger.warning(f"TF-IDF vocabulary is empty over {len(documents)} documents")
            self.vectors = sp.csr_matrix((len(documents), 0), dtype=np.float64)
            self.vocabulary = {}
            self.idf = np.zeros(0)
        return self

    @property
    def num_documents(self) -> int:
        return self.vectors.shape[0]

    def similarity(self, src_doc: int, dst_doc: int) -> float:
        """Cosine of two fitted documents, clamped to [0, 1]."""
        return float(self.pair_similarities(np.array([src_doc]), np.array([dst_doc]))[0])

    def pair_similarities(self, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        if self.vectors.shape[1] == 0:
            return np.zeros(len(src), dtype=np.float64)
        dots = np.asarray(self.vectors[src].multiply(self.vectors[dst]).sum(axis=1)).ravel()
        return np.clip(dots, 0.0, 1.0)
