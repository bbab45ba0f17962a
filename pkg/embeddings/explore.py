"""Similarity queries over an embedding matrix: neighbours, mismatch, analogy and PCA."""

import csv
import math
from dataclasses import dataclass
from typing import Collection, List, Sequence, TextIO

import numpy as np

from data.errors import InvalidArgumentError, UndefinedSimilarityError
from embeddings.store import EmbeddingMatrix


@dataclass
class QueryResult:
    word: str
    score: float


@dataclass
class PcaProjection:
    words: List[str]
    coords: np.ndarray  # (n_words, dims)
    components: np.ndarray  # (dims, m), unit rows
    explained_variance: np.ndarray
    mean: np.ndarray


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise UndefinedSimilarityError("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


class EmbeddingExplorer:
    def __init__(self, matrix: EmbeddingMatrix):
        self.matrix = matrix
        vectors = matrix.vectors.astype(np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        # zero rows stay zero and score 0 against everything
        self.unit = np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)

    def _rank(self, target: np.ndarray, k: int, exclude: Collection[int]) -> List[QueryResult]:
        if k < 1:
            raise InvalidArgumentError(f"k must be >= 1, got {k}")
        norm = np.linalg.norm(target)
        if norm == 0.0:
            raise UndefinedSimilarityError("query vector is zero")
        scores = self.unit @ (target / norm)
        order = np.argsort(-scores, kind="stable")
        results = []
        for i in order:
            if i in exclude:
                continue
            results.append(QueryResult(self.matrix.words[i], float(scores[i])))
            if len(results) == k:
                break
        return results

    def nearest(self, word: str, k: int = 10) -> List[QueryResult]:
        (idx,) = self.matrix.ids([word])
        return self._rank(self.matrix.vectors[idx].astype(np.float64), k, {idx})

    def mismatch(self, words: Sequence[str]) -> str:
        """The word with the lowest mean cosine to the other words; ties go to the earliest."""
        if len(words) < 3:
            raise InvalidArgumentError(f"mismatch needs at least 3 words, got {len(words)}")
        ids = self.matrix.ids(words)
        unit = self.unit[ids]
        if not np.any(unit, axis=1).all():
            raise UndefinedSimilarityError("mismatch query contains a zero vector")
        sims = unit @ unit.T
        n = len(ids)
        means = [math.fsum(sims[i, j] for j in range(n) if j != i) / (n - 1) for i in range(n)]
        return words[int(np.argmin(means))]

    def analogy(self, a: str, b: str, c: str, k: int = 10, exclude_inputs: bool = True) -> List[QueryResult]:
        """a is to b as c is to ?, by ranking words against vec(b) - vec(a) + vec(c)."""
        ia, ib, ic = self.matrix.ids([a, b, c])
        v = self.matrix.vectors.astype(np.float64)
        target = v[ib] - v[ia] + v[ic]
        return self._rank(target, k, {ia, ib, ic} if exclude_inputs else set())

    def pca_project(self, words: Sequence[str], dims: int = 2, fit_global: bool = False) -> PcaProjection:
        if dims < 1:
            raise InvalidArgumentError(f"dims must be >= 1, got {dims}")
        ids = self.matrix.ids(words)
        if len(set(words)) < dims + 1:
            raise InvalidArgumentError(f"need at least {dims + 1} distinct words for {dims} components")
        selected = self.matrix.vectors[ids].astype(np.float64)
        basis = self.matrix.vectors.astype(np.float64) if fit_global else selected
        if dims > basis.shape[1]:
            raise InvalidArgumentError(f"dims ({dims}) exceeds embedding dimension ({basis.shape[1]})")

        mean = basis.mean(axis=0)
        centered = basis - mean
        cov = centered.T @ centered / max(1, centered.shape[0] - 1)
        evalues, evectors = np.linalg.eigh(cov)
        order = np.argsort(evalues)[::-1][:dims]
        components = evectors[:, order].T
        # fix signs so the largest-magnitude loading of each component is positive
        pivots = np.argmax(np.abs(components), axis=1)
        signs = np.sign(components[np.arange(dims), pivots])
        components *= np.where(signs == 0, 1.0, signs)[:, None]

        coords = (selected - mean) @ components.T
        return PcaProjection(
            words=list(words),
            coords=coords,
            components=components,
            explained_variance=np.maximum(evalues[order], 0.0),
            mean=mean,
        )


def write_pca_csv(projection: PcaProjection, out: TextIO, header: bool = False) -> None:
    writer = csv.writer(out, lineterminator="\n")
    if header:
        writer.writerow(["word"] + [f"pc{i + 1}" for i in range(projection.coords.shape[1])])
    for word, row in zip(projection.words, projection.coords):
        writer.writerow([word] + [f"{x:.6f}" for x in row])


def read_word_list(path: str) -> List[str]:
    """Whitespace-separated words, in file order."""
    with open(path, "r", encoding="utf-8") as f:
        return f.read().split()


def read_word_pairs(path: str) -> List[str]:
    """One 'source target' pair per line, flattened in order so pair i is rows 2i and 2i+1."""
    words: List[str] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise InvalidArgumentError(f"{path}:{lineno}: expected two words per line")
            words.extend(parts)
    return words


def nearest(matrix: EmbeddingMatrix, word: str, k: int = 10) -> List[QueryResult]:
    return EmbeddingExplorer(matrix).nearest(word, k)


def mismatch(matrix: EmbeddingMatrix, words: Sequence[str]) -> str:
    return EmbeddingExplorer(matrix).mismatch(words)


def analogy(matrix: EmbeddingMatrix, a: str, b: str, c: str, k: int = 10, exclude_inputs: bool = True) -> List[QueryResult]:
    return EmbeddingExplorer(matrix).analogy(a, b, c, k, exclude_inputs)


def pca_project(matrix: EmbeddingMatrix, words: Sequence[str], dims: int = 2, fit_global: bool = False) -> PcaProjection:
    return EmbeddingExplorer(matrix).pca_project(words, dims, fit_global)
