"""
Skip-gram with negative sampling.

The corpus is a sequence of chunks; every chunk is a training sentence and no
context window crosses a chunk edge. Workers share the input/output matrices
and update rows without locks (asynchronous SGD). With workers=1 the chunk
loop runs in order and training is bitwise reproducible for a given seed.
"""

import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from data.errors import InvalidArgumentError, NumericalError
from data.models import TokenStream
from data.seeds import derive_seed, rng_for
from embeddings._jit import njit, prange, set_threads
from embeddings.store import EmbeddingMatrix
from embeddings.vocab import SamplingTables, Vocabulary
from monitoring.observability import track_training_run

logger = logging.getLogger(__name__)

_INV_2_53 = 1.0 / 9007199254740992.0


@dataclass
class TrainConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 3
    epochs: int = 10
    initial_lr: float = 0.025
    final_lr: float = 1e-4
    subsample_t: float = 1e-5
    seed: int = 1
    workers: int = 1
    report_every: int = 1000  # chunks between progress lines

    def validate(self) -> "TrainConfig":
        for name in ("dim", "window", "negatives", "workers", "report_every"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epochs < 0:
            raise InvalidArgumentError(f"epochs must be >= 0, got {self.epochs}")
        if not 0 < self.final_lr < self.initial_lr:
            raise InvalidArgumentError(
                f"need 0 < final_lr < initial_lr, got {self.final_lr} and {self.initial_lr}"
            )
        if self.subsample_t <= 0:
            raise InvalidArgumentError(f"subsample_t must be > 0, got {self.subsample_t}")
        return self


def sgns_gradients(
    center_vec: np.ndarray, context_vec: np.ndarray, negative_vecs: Optional[np.ndarray] = None
) -> Tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """
    Loss L = -log s(u_o.v_c) - sum_k log s(-u_k.v_c) and its gradients with respect to
    v_c, u_o and each u_k.
    """
    v = np.asarray(center_vec, dtype=np.float64)
    u_o = np.asarray(context_vec, dtype=np.float64)
    u_k = np.zeros((0, v.shape[0])) if negative_vecs is None else np.asarray(negative_vecs, dtype=np.float64)
    if u_k.ndim == 1:
        u_k = u_k.reshape(-1, v.shape[0]) if u_k.size else np.zeros((0, v.shape[0]))
    if v.ndim != 1 or u_o.shape != v.shape or u_k.shape[1:] != v.shape:
        raise InvalidArgumentError(
            f"dimension mismatch: center {v.shape}, context {u_o.shape}, negatives {u_k.shape}"
        )
    if not (np.isfinite(v).all() and np.isfinite(u_o).all() and np.isfinite(u_k).all()):
        raise NumericalError("non-finite value in sgns inputs")

    s_o = float(u_o @ v)
    s_k = u_k @ v
    loss = float(np.logaddexp(0.0, -s_o) + np.logaddexp(0.0, s_k).sum())

    g_o = expit(s_o) - 1.0
    g_k = expit(s_k)
    grad_center = g_o * u_o + g_k @ u_k
    grad_context = g_o * v
    grad_negatives = np.outer(g_k, v)
    return loss, grad_center, grad_context, grad_negatives


def sgns_update(
    center_vec: np.ndarray, context_vec: np.ndarray, negative_vecs: Optional[np.ndarray], lr: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """One SGD step; returns the updated (center, context, negatives) and the pre-step loss."""
    if not lr > 0:
        raise InvalidArgumentError(f"lr must be > 0, got {lr}")
    loss, g_c, g_o, g_k = sgns_gradients(center_vec, context_vec, negative_vecs)
    v = np.asarray(center_vec, dtype=np.float64) - lr * g_c
    u_o = np.asarray(context_vec, dtype=np.float64) - lr * g_o
    u_k = (np.zeros_like(g_k) if negative_vecs is None else np.asarray(negative_vecs, dtype=np.float64).reshape(g_k.shape)) - lr * g_k
    if not (np.isfinite(v).all() and np.isfinite(u_o).all() and np.isfinite(u_k).all()):
        raise NumericalError("sgns update produced non-finite values")
    return v, u_o, u_k, loss


@njit(nogil=True)
def _xorshift(state):
    state ^= state << np.uint64(13)
    state ^= state >> np.uint64(7)
    state ^= state << np.uint64(17)
    return state


@njit(nogil=True)
def _uniform(state):
    state = _xorshift(state)
    return state, np.float64(state >> np.uint64(11)) * _INV_2_53


@njit(nogil=True)
def _log1pexp(x):
    if x > 0.0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(nogil=True)
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


@njit(nogil=True)
def _chunk_pairs(ids, discard_prob, window, state):
    """
    Subsample one chunk, then draw a window b ~ U{1..window} per surviving token.
    Returns (center positions, context positions, rng state); positions index `ids`.
    """
    n = ids.shape[0]
    kept = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        w = ids[i]
        if w < 0:
            continue
        state, u = _uniform(state)
        if u < discard_prob[w]:
            continue
        kept[m] = i
        m += 1

    centers = np.empty(m * 2 * window, dtype=np.int64)
    contexts = np.empty(m * 2 * window, dtype=np.int64)
    count = 0
    for i in range(m):
        state = _xorshift(state)
        b = 1 + np.int64(state % np.uint64(window))
        lo = max(0, i - b)
        hi = min(m - 1, i + b)
        for j in range(lo, hi + 1):
            if j == i:
                continue
            centers[count] = kept[i]
            contexts[count] = kept[j]
            count += 1
    return centers[:count], contexts[:count], state


@njit(nogil=True)
def _train_chunk(ids, syn0, syn1, discard_prob, neg_table, window, negatives, lr0, lr1, base, total, state):
    centers, contexts, state = _chunk_pairs(ids, discard_prob, window, state)
    dim = syn0.shape[1]
    table_size = np.uint64(neg_table.shape[0])
    grad = np.zeros(dim, dtype=np.float32)
    loss = 0.0
    for p in range(centers.shape[0]):
        lr = lr0 - (lr0 - lr1) * ((base + centers[p]) / total)
        if lr < lr1:
            lr = lr1
        c = ids[centers[p]]
        o = ids[contexts[p]]
        grad[:] = 0.0
        for d in range(negatives + 1):
            if d == 0:
                target = o
                label = 1.0
            else:
                state = _xorshift(state)
                target = neg_table[np.int64(state % table_size)]
                if target == o:
                    continue
                label = 0.0
            f = 0.0
            for x in range(dim):
                f += syn0[c, x] * syn1[target, x]
            if label == 1.0:
                loss += _log1pexp(-f)
            else:
                loss += _log1pexp(f)
            g = (label - _sigmoid(f)) * lr
            for x in range(dim):
                grad[x] += g * syn1[target, x]
                syn1[target, x] += g * syn0[c, x]
        for x in range(dim):
            syn0[c, x] += grad[x]
    return loss, centers.shape[0]


@njit(parallel=True, nogil=True)
def _train_batch(
    flat_ids, offsets, lo, hi, syn0, syn1, discard_prob, neg_table,
    window, negatives, lr0, lr1, epoch_base, total, states, losses, pair_counts,
):
    for ci in prange(lo, hi):
        start = offsets[ci]
        end = offsets[ci + 1]
        loss, n_pairs = _train_chunk(
            flat_ids[start:end], syn0, syn1, discard_prob, neg_table,
            window, negatives, lr0, lr1, epoch_base + start, total, states[ci],
        )
        losses[ci] = loss
        pair_counts[ci] = n_pairs


def _chunk_states(seed: int, epoch: int, n_chunks: int) -> np.ndarray:
    states = np.random.SeedSequence([derive_seed(seed, "training"), epoch]).generate_state(n_chunks, dtype=np.uint64)
    states[states == 0] = np.uint64(0x9E3779B97F4A7C15)
    return states


class SkipGramTrainer:
    def __init__(self, vocab: Vocabulary, tables: SamplingTables, cfg: Optional[TrainConfig] = None):
        self.cfg = (cfg or TrainConfig()).validate()
        if tables.discard_prob.shape[0] != len(vocab):
            raise InvalidArgumentError(
                f"sampling tables cover {tables.discard_prob.shape[0]} words, vocabulary has {len(vocab)}"
            )
        if tables.negative_table.size and int(tables.negative_table.max()) >= len(vocab):
            raise InvalidArgumentError("negative table refers to ids outside the vocabulary")
        self.vocab = vocab
        self.tables = tables
        self.epoch_losses: List[float] = []
        self.output_vectors: Optional[np.ndarray] = None
        self.tokens_per_sec = 0.0

    def _flatten(self, stream: TokenStream) -> Tuple[np.ndarray, np.ndarray]:
        lengths = np.array([len(c) for c in stream.chunks], dtype=np.int64)
        offsets = np.zeros(len(lengths) + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        flat = self.vocab.ids(t for c in stream.chunks for t in c)
        return flat, offsets

    def initial_vectors(self) -> np.ndarray:
        m = self.cfg.dim
        rng = rng_for(self.cfg.seed, "training")
        return rng.uniform(-0.5 / m, 0.5 / m, size=(len(self.vocab), m)).astype(np.float32)

    def train(self, stream: TokenStream) -> EmbeddingMatrix:
        cfg = self.cfg
        flat, offsets = self._flatten(stream)
        n_chunks = len(offsets) - 1
        n_tokens = int(flat.shape[0])
        syn0 = self.initial_vectors()
        syn1 = np.zeros_like(syn0)
        discard = np.ascontiguousarray(self.tables.discard_prob, dtype=np.float64)
        table = np.ascontiguousarray(self.tables.negative_table, dtype=np.int32)
        total = float(max(1, cfg.epochs * n_tokens))
        threads = set_threads(cfg.workers)
        self.epoch_losses = []

        started = time.perf_counter()
        for epoch in range(cfg.epochs):
            states = _chunk_states(cfg.seed, epoch, n_chunks)
            losses = np.zeros(n_chunks, dtype=np.float64)
            pair_counts = np.zeros(n_chunks, dtype=np.int64)
            epoch_start = time.perf_counter()
            for lo in range(0, n_chunks, cfg.report_every):
                hi = min(n_chunks, lo + cfg.report_every)
                _train_batch(
                    flat, offsets, lo, hi, syn0, syn1, discard, table,
                    cfg.window, cfg.negatives, cfg.initial_lr, cfg.final_lr,
                    float(epoch * n_tokens), total, states, losses, pair_counts,
                )
                done = int(offsets[hi])
                elapsed = max(time.perf_counter() - epoch_start, 1e-9)
                lr_now = cfg.initial_lr - (cfg.initial_lr - cfg.final_lr) * ((epoch * n_tokens + done) / total)
                logger.info(
                    "epoch %d/%d  %5.1f%%  %.0f tokens/sec  lr %.6f",
                    epoch + 1, cfg.epochs, 100.0 * done / max(1, n_tokens), done / elapsed, lr_now,
                )
            self.epoch_losses.append(float(losses.sum() / max(1, int(pair_counts.sum()))))
            logger.info("epoch %d/%d  mean loss %.4f", epoch + 1, cfg.epochs, self.epoch_losses[-1])

        seconds = time.perf_counter() - started
        self.tokens_per_sec = cfg.epochs * n_tokens / seconds if seconds > 0 else 0.0
        if not np.isfinite(syn0).all():
            raise NumericalError("training diverged: non-finite embedding entries")
        self.output_vectors = syn1
        track_training_run(
            vocab_size=len(self.vocab), dim=cfg.dim, epochs=cfg.epochs, workers=threads,
            seconds=seconds, epoch_losses=list(self.epoch_losses),
        )
        return EmbeddingMatrix(words=list(self.vocab.words), vectors=syn0, vocab=self.vocab)

    def enumerate_pairs(self, stream: TokenStream, epoch: int = 0) -> List[Tuple[int, int, int]]:
        """(chunk index, center position, context position) for every pair trained in `epoch`."""
        flat, offsets = self._flatten(stream)
        n_chunks = len(offsets) - 1
        states = _chunk_states(self.cfg.seed, epoch, n_chunks)
        discard = np.ascontiguousarray(self.tables.discard_prob, dtype=np.float64)
        pairs = []
        for ci in range(n_chunks):
            centers, contexts, _ = _chunk_pairs(flat[offsets[ci]:offsets[ci + 1]], discard, self.cfg.window, states[ci])
            pairs.extend((ci, int(c), int(o)) for c, o in zip(centers, contexts))
        return pairs


def train(stream: TokenStream, vocab: Vocabulary, tables: SamplingTables, cfg: Optional[TrainConfig] = None) -> EmbeddingMatrix:
    return SkipGramTrainer(vocab, tables, cfg).train(stream)
