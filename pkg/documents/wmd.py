"""
Word Mover's Distance between documents and the bag-of-words euclidean baseline.

A document is reduced to its normalized bag of words over the embedding
vocabulary; the distance between two documents is the cost of the optimal
transport of one bag onto the other with euclidean word-vector distances as
ground cost. The transport problem is solved exactly (network simplex, POT).
"""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import ot
from joblib import Parallel, delayed
from scipy.spatial.distance import cdist
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.metrics.pairwise import euclidean_distances

from data.errors import EmptyDocumentError, InvalidArgumentError, SitevecError
from embeddings.store import EmbeddingMatrix
from embeddings.vocab import Vocabulary

logger = logging.getLogger(__name__)

EMD_MAX_ITER = 1_000_000

VocabLike = Union[Vocabulary, EmbeddingMatrix]


@dataclass
class NBowVector:
    ids: np.ndarray  # sorted word ids
    weights: np.ndarray  # positive, sums to 1

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def as_dict(self) -> Dict[int, float]:
        return {int(i): float(w) for i, w in zip(self.ids, self.weights)}


@dataclass
class TransportPlan:
    flows: Dict[Tuple[int, int], float]  # (source word id, target word id) -> mass
    objective: float


def nbow(doc: Sequence[str], vocab: VocabLike) -> NBowVector:
    index = vocab.word_to_id
    counts = Counter(index[t] for t in doc if t in index)
    if not counts:
        raise EmptyDocumentError("document has no in-vocabulary tokens")
    ids = np.array(sorted(counts), dtype=np.int64)
    weights = np.array([counts[i] for i in ids], dtype=np.float64)
    return NBowVector(ids=ids, weights=weights / weights.sum())


def ground_cost(i: int, j: int, emb: EmbeddingMatrix) -> float:
    diff = emb.vectors[i].astype(np.float64) - emb.vectors[j].astype(np.float64)
    return float(np.sqrt(diff @ diff))


def centroid_distance(p1: NBowVector, p2: NBowVector, emb: EmbeddingMatrix) -> float:
    """Distance between the weighted mean word vectors; a lower bound on the WMD."""
    c1 = p1.weights @ emb.vectors[p1.ids].astype(np.float64)
    c2 = p2.weights @ emb.vectors[p2.ids].astype(np.float64)
    return float(np.linalg.norm(c1 - c2))


def _solve(p1: NBowVector, p2: NBowVector, emb: EmbeddingMatrix) -> Tuple[float, np.ndarray, np.ndarray]:
    if len(p1) == 0 or len(p2) == 0:
        raise EmptyDocumentError("cannot compute WMD with an empty document")
    x1 = emb.vectors[p1.ids].astype(np.float64)
    x2 = emb.vectors[p2.ids].astype(np.float64)
    cost = cdist(x1, x2, metric="euclidean")
    plan, log = ot.emd(p1.weights, p2.weights, cost, numItermax=EMD_MAX_ITER, log=True)
    if log.get("result_code", 1) != 1:
        raise SitevecError(f"transport solver did not converge: {log.get('warning')}")
    return float(np.sum(plan * cost)), plan, cost


def wmd(p1: NBowVector, p2: NBowVector, emb: EmbeddingMatrix, return_plan: bool = False):
    distance, plan, _ = _solve(p1, p2, emb)
    if not return_plan:
        return distance
    rows, cols = np.nonzero(plan > 0)
    flows = {(int(p1.ids[r]), int(p2.ids[c])): float(plan[r, c]) for r, c in zip(rows, cols)}
    return distance, TransportPlan(flows=flows, objective=distance)


def word_movers_distance(doc1: Sequence[str], doc2: Sequence[str], emb: EmbeddingMatrix) -> float:
    return wmd(nbow(doc1, emb), nbow(doc2, emb), emb)


def _bow_counts(docs_a: Sequence[Sequence[str]], docs_b: Sequence[Sequence[str]], vocab: Optional[VocabLike]):
    keep = None if vocab is None else vocab.word_to_id
    filtered_a = [[t for t in d if keep is None or t in keep] for d in docs_a]
    filtered_b = [[t for t in d if keep is None or t in keep] for d in docs_b]
    if not any(filtered_a) and not any(filtered_b):
        return None, None
    vectorizer = CountVectorizer(analyzer=lambda doc: doc, lowercase=False)
    vectorizer.fit(filtered_a + filtered_b)
    return vectorizer.transform(filtered_a), vectorizer.transform(filtered_b)


def bow_distance_matrix(
    docs_a: Sequence[Sequence[str]], docs_b: Sequence[Sequence[str]], vocab: Optional[VocabLike] = None
) -> np.ndarray:
    """Euclidean distances between raw word-count vectors (CountVectorizer + euclidean_distances)."""
    counts_a, counts_b = _bow_counts(docs_a, docs_b, vocab)
    if counts_a is None:
        return np.zeros((len(docs_a), len(docs_b)))
    return euclidean_distances(counts_a, counts_b)


def bow_euclidean(doc1: Sequence[str], doc2: Sequence[str], vocab: Optional[VocabLike] = None) -> float:
    return float(bow_distance_matrix([doc1], [doc2], vocab)[0, 0])


def _wmd_block(queries: List[NBowVector], targets: List[NBowVector], emb: EmbeddingMatrix) -> np.ndarray:
    out = np.empty((len(queries), len(targets)))
    for r, q in enumerate(queries):
        for c, t in enumerate(targets):
            out[r, c] = _solve(q, t, emb)[0]
    return out


def _pruned_wmd_block(
    queries: List[NBowVector], targets: List[NBowVector], emb: EmbeddingMatrix, keep: int
) -> np.ndarray:
    """
    Exact WMD only where it can matter for the `keep` nearest targets: targets are
    visited in order of centroid distance and the scan stops once that lower bound
    exceeds the current keep-th best distance. Skipped entries are +inf.
    """
    out = np.full((len(queries), len(targets)), np.inf)
    for r, q in enumerate(queries):
        bounds = np.array([centroid_distance(q, t, emb) for t in targets])
        best: List[float] = []
        for c in np.argsort(bounds, kind="stable"):
            if len(best) >= keep and bounds[c] > best[keep - 1]:
                break
            d = _solve(q, targets[c], emb)[0]
            out[r, c] = d
            best.append(d)
            best.sort()
    return out


def wmd_distance_matrix(
    docs_a: Sequence[Sequence[str]],
    docs_b: Sequence[Sequence[str]],
    emb: EmbeddingMatrix,
    workers: int = 1,
    prune_keep: Optional[int] = None,
) -> np.ndarray:
    """
    Pairwise WMD between two document lists, rows split across a joblib worker pool.
    With `prune_keep`, only entries that can rank among the prune_keep nearest of
    each row are computed exactly; the rest are +inf.
    """
    queries = [nbow(d, emb) for d in docs_a]
    targets = [nbow(d, emb) for d in docs_b]
    if not queries or not targets:
        return np.zeros((len(queries), len(targets)))
    if prune_keep is not None and prune_keep < 1:
        raise InvalidArgumentError(f"prune_keep must be >= 1, got {prune_keep}")

    n_blocks = max(1, min(len(queries), workers * 4))
    blocks = np.array_split(np.arange(len(queries)), n_blocks)
    logger.debug("WMD %dx%d in %d blocks over %d workers", len(queries), len(targets), n_blocks, workers)

    def run_block(idx):
        rows = [queries[i] for i in idx]
        if prune_keep is None:
            return _wmd_block(rows, targets, emb)
        return _pruned_wmd_block(rows, targets, emb, prune_keep)

    if workers == 1:
        parts = [run_block(idx) for idx in blocks]
    else:
        parts = Parallel(n_jobs=workers)(delayed(run_block)(idx) for idx in blocks)
    return np.vstack(parts)
