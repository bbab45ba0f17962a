import logging
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Union

import numpy as np

from data.errors import EmptyVocabularyError, FormatError, InvalidArgumentError
from data.models import TokenStream

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.75
DEFAULT_TABLE_SIZE = 100_000_000


@dataclass
class Vocabulary:
    words: List[str]
    counts: np.ndarray
    word_to_id: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (len(self.words),):
            raise InvalidArgumentError(f"{len(self.words)} words but {self.counts.shape[0]} counts")
        self.word_to_id = {w: i for i, w in enumerate(self.words)}
        if len(self.word_to_id) != len(self.words):
            raise InvalidArgumentError("vocabulary words must be unique")

    @property
    def total_tokens(self) -> int:
        return int(self.counts.sum())

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.word_to_id

    def ids(self, tokens: Iterable[str]) -> np.ndarray:
        """Map tokens to ids, -1 for out-of-vocabulary tokens."""
        get = self.word_to_id.get
        return np.fromiter((get(t, -1) for t in tokens), dtype=np.int32)


@dataclass
class SamplingTables:
    discard_prob: np.ndarray
    negative_table: np.ndarray
    alpha: float
    threshold: float

    def sample_negatives(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.negative_table[rng.integers(0, self.negative_table.shape[0], size=n)]


def build_vocab(stream: Union[TokenStream, Iterable[Sequence[str]]], min_count: int = 5) -> Vocabulary:
    if min_count < 1:
        raise InvalidArgumentError(f"min_count must be >= 1, got {min_count}")
    chunks = stream.chunks if isinstance(stream, TokenStream) else stream
    counter: Counter = Counter()
    for c in chunks:
        counter.update(c)
    if not counter:
        raise EmptyVocabularyError("cannot build a vocabulary from an empty token stream")

    kept = sorted(((w, n) for w, n in counter.items() if n >= min_count), key=lambda wn: (-wn[1], wn[0]))
    if not kept:
        raise EmptyVocabularyError(f"no token occurs at least {min_count} times")
    logger.info(
        "Vocabulary: %d of %d distinct tokens kept (min_count=%d)", len(kept), len(counter), min_count
    )
    return Vocabulary(words=[w for w, _ in kept], counts=np.array([n for _, n in kept], dtype=np.int64))


def discard_probability(count: int, total: int, t: float) -> float:
    if t <= 0:
        raise InvalidArgumentError(f"subsampling threshold must be > 0, got {t}")
    if count < 1 or total < count:
        raise InvalidArgumentError(f"need 1 <= count <= total, got count={count}, total={total}")
    f = count / total
    return max(0.0, 1.0 - math.sqrt(t / f))


def discard_probabilities(vocab: Vocabulary, t: float) -> np.ndarray:
    if t <= 0:
        raise InvalidArgumentError(f"subsampling threshold must be > 0, got {t}")
    freq = vocab.counts / vocab.total_tokens
    return np.maximum(0.0, 1.0 - np.sqrt(t / freq))


def build_negative_table(
    vocab: Vocabulary,
    alpha: float = DEFAULT_ALPHA,
    table_size: int = DEFAULT_TABLE_SIZE,
    threshold: float = 1e-5,
) -> SamplingTables:
    """
    Unigram^alpha table: word w fills a share of slots proportional to count(w)^alpha,
    so a uniform draw over the table samples w with that probability.
    """
    if len(vocab) == 0:
        raise EmptyVocabularyError("cannot build a negative table for an empty vocabulary")
    if table_size < len(vocab):
        raise InvalidArgumentError(f"table_size ({table_size}) must be >= vocabulary size ({len(vocab)})")

    weights = np.power(vocab.counts.astype(np.float64), alpha)
    edges = np.rint(np.cumsum(weights) / weights.sum() * table_size).astype(np.int64)
    edges[-1] = table_size
    sizes = np.diff(edges, prepend=0)
    table = np.repeat(np.arange(len(vocab), dtype=np.int32), sizes)
    return SamplingTables(
        discard_prob=discard_probabilities(vocab, threshold),
        negative_table=table,
        alpha=alpha,
        threshold=threshold,
    )


def save_vocab(vocab: Vocabulary, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for w, n in zip(vocab.words, vocab.counts):
            f.write(f"{w}\t{int(n)}\n")


def load_vocab(path: Union[str, os.PathLike]) -> Vocabulary:
    words: List[str] = []
    counts: List[int] = []
    offset = 0
    with open(path, "rb") as f:
        for raw in f:
            line = raw.decode("utf-8").rstrip("\n")
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0]:
                raise FormatError(offset, "expected 'word<TAB>count'", str(path))
            try:
                counts.append(int(parts[1]))
            except ValueError:
                raise FormatError(offset, f"bad count '{parts[1]}'", str(path)) from None
            words.append(parts[0])
            offset += len(raw)
    return Vocabulary(words=words, counts=np.array(counts, dtype=np.int64))
