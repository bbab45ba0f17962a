"""k-nearest-neighbour voting, cross-validation folds and per-class F1 reports."""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np
from sklearn.metrics import confusion_matrix
from sklearn.model_selection import KFold

from data.errors import EmptyDocumentError, InvalidArgumentError
from data.models import Document
from data.seeds import SEQUENTIAL, derive_seed
from documents.wmd import bow_distance_matrix, nbow, wmd
from embeddings.store import EmbeddingMatrix

logger = logging.getLogger(__name__)

WMD = "wmd"
BOW = "bow"
METRICS = (WMD, BOW)

Seed = Union[int, str]


@dataclass
class FoldPlan:
    assignments: np.ndarray  # fold index per document
    n_folds: int
    seed: Seed = SEQUENTIAL

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def sizes(self) -> List[int]:
        return [int(np.sum(self.assignments == f)) for f in range(self.n_folds)]


def make_folds(docs: Union[int, Sequence], n_folds: int = 4, seed: Seed = SEQUENTIAL) -> FoldPlan:
    """
    Split documents into n_folds folds whose sizes differ by at most one.
    "sequential" gives contiguous blocks in dataset order; an integer seed
    shuffles positions with the "folds" random stream first.
    """
    n = docs if isinstance(docs, int) else len(docs)
    if n_folds < 2:
        raise InvalidArgumentError(f"n_folds must be >= 2, got {n_folds}")
    if n_folds > n:
        raise InvalidArgumentError(f"cannot split {n} documents into {n_folds} folds")

    if seed == SEQUENTIAL:
        kfold = KFold(n_splits=n_folds)
    elif isinstance(seed, (int, np.integer)) and not isinstance(seed, bool):
        kfold = KFold(n_splits=n_folds, shuffle=True, random_state=derive_seed(int(seed), "folds") % 2**32)
    else:
        raise InvalidArgumentError(f"fold seed must be an integer or '{SEQUENTIAL}', got {seed!r}")

    assignments = np.empty(n, dtype=np.int64)
    for fold, (_, test) in enumerate(kfold.split(np.zeros((n, 1)))):
        assignments[test] = fold
    logger.debug("Split %d documents into %d folds (%s)", n, n_folds, seed)
    return FoldPlan(assignments=assignments, n_folds=n_folds, seed=seed)


def vote(distances: Sequence[float], labels: Sequence[Hashable], k: int) -> Hashable:
    """
    Majority label among the k nearest. Equal distances are ordered by position.
    Tied classes are separated by the smaller sum of their neighbours' ranks (used
    in place of summed distances), then by class name, so any monotone rescaling of
    the distances gives the same answer.
    """
    distances = np.asarray(distances, dtype=np.float64)
    if k < 1:
        raise InvalidArgumentError(f"k must be >= 1, got {k}")
    if len(labels) != distances.shape[0]:
        raise InvalidArgumentError(f"{distances.shape[0]} distances but {len(labels)} labels")
    if k > distances.shape[0]:
        raise InvalidArgumentError(f"k={k} exceeds the {distances.shape[0]} training documents")

    nearest = np.argsort(distances, kind="stable")[:k]
    votes: Dict[Hashable, int] = defaultdict(int)
    rank_sum: Dict[Hashable, int] = defaultdict(int)
    for rank, idx in enumerate(nearest):
        label = labels[idx]
        votes[label] += 1
        rank_sum[label] += rank
    return min(votes, key=lambda c: (-votes[c], rank_sum[c], str(c)))


def predict_from_distances(distances: np.ndarray, train_labels: Sequence[Hashable], k: int) -> List[Hashable]:
    return [vote(row, train_labels, k) for row in np.atleast_2d(distances)]


def query_distances(
    train: Sequence[Sequence[str]],
    query: Sequence[str],
    metric: str = WMD,
    embeddings: Optional[EmbeddingMatrix] = None,
) -> np.ndarray:
    if metric == BOW:
        return bow_distance_matrix([query], train, embeddings)[0]
    if metric != WMD:
        raise InvalidArgumentError(f"unknown metric '{metric}'")
    if embeddings is None:
        raise InvalidArgumentError("the wmd metric needs embeddings")
    q = nbow(query, embeddings)
    out = np.full(len(train), np.inf)
    for i, doc in enumerate(train):
        try:
            out[i] = wmd(q, nbow(doc, embeddings), embeddings)
        except EmptyDocumentError:
            continue
    return out


def knn_predict(
    train: Sequence[Document],
    query: Union[Document, Sequence[str]],
    k: int,
    task,
    metric: str = WMD,
    embeddings: Optional[EmbeddingMatrix] = None,
) -> str:
    """Label of `query` by k-NN vote. Training documents with no usable tokens are left out."""
    tokens = query.tokens if isinstance(query, Document) else list(query)
    if metric == BOW and not tokens:
        raise EmptyDocumentError("query document is empty")
    usable = [d for d in train if _has_tokens(d.tokens, embeddings)]
    if len(usable) < len(train):
        logger.warning("Excluding %d empty training documents", len(train) - len(usable))
    distances = query_distances([d.tokens for d in usable], tokens, metric, embeddings)
    return vote(distances, [d.label(task) for d in usable], k)


def _has_tokens(tokens: Sequence[str], embeddings: Optional[EmbeddingMatrix]) -> bool:
    if embeddings is not None:
        return any(t in embeddings for t in tokens)
    return len(tokens) > 0


def nearest_documents(
    query: Sequence[str],
    docs: Sequence[Sequence[str]],
    embeddings: EmbeddingMatrix,
    k: int = 5,
    exclude: Optional[int] = None,
) -> List[Tuple[int, float]]:
    """(index, WMD) of the k documents closest to `query`; documents without embedded words are skipped."""
    q = nbow(query, embeddings)
    scored = []
    for i, doc in enumerate(docs):
        if i == exclude:
            continue
        try:
            scored.append((i, wmd(q, nbow(doc, embeddings), embeddings)))
        except EmptyDocumentError:
            continue
    scored.sort(key=lambda item: (item[1], item[0]))
    return scored[:k]


@dataclass
class ClassReport:
    """Per-class scores in percent; support counts true observations."""

    classes: List[str]
    precision: Dict[str, float] = field(default_factory=dict)
    recall: Dict[str, float] = field(default_factory=dict)
    f1: Dict[str, float] = field(default_factory=dict)
    support: Dict[str, int] = field(default_factory=dict)
    micro_f1: float = 0.0

    @property
    def macro_f1(self) -> float:
        return float(np.mean([self.f1[c] for c in self.classes])) if self.classes else 0.0

    @property
    def n_observations(self) -> int:
        return sum(self.support.values())

    @classmethod
    def average(cls, reports: Sequence["ClassReport"]) -> "ClassReport":
        """Fold-level scores averaged per class; supports are summed."""
        classes = sorted({c for r in reports for c in r.classes})
        out = cls(classes=classes)
        for c in classes:
            present = [r for r in reports if c in r.classes]
            out.precision[c] = float(np.mean([r.precision[c] for r in present]))
            out.recall[c] = float(np.mean([r.recall[c] for r in present]))
            out.f1[c] = float(np.mean([r.f1[c] for r in present]))
            out.support[c] = sum(r.support[c] for r in present)
        out.micro_f1 = float(np.mean([r.micro_f1 for r in reports])) if reports else 0.0
        return out


def macro_f1(
    predictions: Sequence[str], truths: Sequence[str], class_set: Optional[Sequence[str]] = None
) -> ClassReport:
    if len(predictions) != len(truths):
        raise InvalidArgumentError(f"{len(predictions)} predictions but {len(truths)} truths")
    classes = sorted(set(class_set) if class_set is not None else set(truths) | set(predictions))
    if set(predictions) - set(classes) or set(truths) - set(classes):
        raise InvalidArgumentError("labels outside the class set")

    report = ClassReport(classes=list(classes))
    if not classes:
        return report
    cm = confusion_matrix(truths, predictions, labels=classes) if len(truths) else np.zeros((len(classes),) * 2, int)
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    actual = cm.sum(axis=1)
    for i, c in enumerate(classes):
        p = tp[i] / predicted[i] if predicted[i] > 0 else 0.0
        r = tp[i] / actual[i] if actual[i] > 0 else 0.0
        report.precision[c] = 100.0 * p
        report.recall[c] = 100.0 * r
        report.f1[c] = 100.0 * (2 * p * r / (p + r)) if p + r > 0 else 0.0
        report.support[c] = int(actual[i])
    # single-label, so micro F1 equals accuracy
    report.micro_f1 = 100.0 * float(tp.sum()) / len(truths) if len(truths) else 0.0
    return report
