"""
Keyword compression of reports through a graph-of-words.

Retained words become nodes, co-occurrence inside a sliding window of W tokens
becomes weighted undirected edges, and nodes are scored by CoreRank: the sum of
the core numbers of their neighbours. The best `p` share of nodes is kept.
"""

import heapq
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Collection, Dict, List, Optional, Sequence

import networkx as nx
import numpy as np
from joblib import Parallel, delayed

from data.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

SLIDING = "sliding"
COOCCURRENCE = "cooccurrence"
SCHEMES = (SLIDING, COOCCURRENCE)


@dataclass
class GraphOfWords:
    graph: nx.Graph
    window: int

    @property
    def nodes(self) -> List[str]:
        return list(self.graph.nodes)

    def weight(self, u: str, v: str) -> int:
        data = self.graph.get_edge_data(u, v)
        return 0 if data is None else int(data["weight"])


@dataclass
class CoreScores:
    core_number: Dict[str, int] = field(default_factory=dict)
    corerank: Dict[str, int] = field(default_factory=dict)


@dataclass
class CompressionSummary:
    lengths_before: List[int]
    lengths_after: List[int]

    @staticmethod
    def _quartiles(lengths: Sequence[int]) -> Dict[str, float]:
        if not lengths:
            return {"q1": 0.0, "median": 0.0, "q3": 0.0}
        q1, med, q3 = np.percentile(np.asarray(lengths, dtype=np.float64), [25, 50, 75])
        return {"q1": float(q1), "median": float(med), "q3": float(q3)}

    @property
    def before(self) -> Dict[str, float]:
        return self._quartiles(self.lengths_before)

    @property
    def after(self) -> Dict[str, float]:
        return self._quartiles(self.lengths_after)

    @property
    def median_before(self) -> float:
        return self.before["median"]

    @property
    def median_after(self) -> float:
        return self.after["median"]


def _add_edge(g: nx.Graph, u: str, v: str) -> None:
    if g.has_edge(u, v):
        g[u][v]["weight"] += 1
    else:
        g.add_edge(u, v, weight=1)


def build_graph(tokens: Sequence[str], W: int = 8, scheme: str = SLIDING) -> GraphOfWords:
    """
    sliding:       a window is placed at every token (truncated at the end) and each
                   distinct pair of words inside it adds 1 to its edge
    cooccurrence:  each pair of positions less than W apart holding different words adds 1
    """
    if W < 2:
        raise InvalidArgumentError(f"window must be >= 2, got {W}")
    if scheme not in SCHEMES:
        raise InvalidArgumentError(f"unknown window scheme '{scheme}'")
    g = nx.Graph()
    g.add_nodes_from(dict.fromkeys(tokens))
    n = len(tokens)
    if scheme == SLIDING:
        for i in range(n):
            window = list(dict.fromkeys(tokens[i:i + W]))
            for a in range(len(window)):
                for b in range(a + 1, len(window)):
                    _add_edge(g, window[a], window[b])
    else:
        for i in range(n):
            for j in range(i + 1, min(n, i + W)):
                if tokens[i] != tokens[j]:
                    _add_edge(g, tokens[i], tokens[j])
    return GraphOfWords(graph=g, window=W)


def _weighted_cores(g: nx.Graph) -> Dict[str, int]:
    """Generalized cores on weighted degree: peel the lightest node, never letting k decrease."""
    degree = {v: int(d) for v, d in g.degree(weight="weight")}
    heap = [(d, i, v) for i, (v, d) in enumerate(degree.items())]
    heapq.heapify(heap)
    order = {v: i for i, v in enumerate(degree)}
    removed = set()
    cores: Dict[str, int] = {}
    k = 0
    while heap:
        d, _, v = heapq.heappop(heap)
        if v in removed or d != degree[v]:
            continue
        k = max(k, d)
        cores[v] = k
        removed.add(v)
        for u, data in g[v].items():
            if u not in removed:
                degree[u] -= int(data["weight"])
                heapq.heappush(heap, (degree[u], order[u], u))
    return cores


def core_decomposition(gow: GraphOfWords, weighted: bool = False) -> Dict[str, int]:
    if weighted:
        return _weighted_cores(gow.graph)
    return dict(nx.core_number(gow.graph))


def corerank(gow: GraphOfWords, cores: Dict[str, int]) -> Dict[str, int]:
    return {v: sum(cores[u] for u in gow.graph.neighbors(v)) for v in gow.graph.nodes}


def score_graph(gow: GraphOfWords, weighted: bool = False) -> CoreScores:
    cores = core_decomposition(gow, weighted=weighted)
    return CoreScores(core_number=cores, corerank=corerank(gow, cores))


def extract_keywords(
    tokens: Sequence[str],
    W: int = 8,
    p: float = 0.30,
    min_len: int = 15,
    vocabulary: Optional[Collection[str]] = None,
    weighted: bool = False,
    scheme: str = SLIDING,
) -> List[str]:
    """
    Top ceil(p * |nodes|) words by CoreRank, in rank order. Ties go to the more
    frequent word, then to the earlier first occurrence. Documents with fewer
    than `min_len` retained tokens are not compressed: they come back as their
    retained tokens, so out-of-vocabulary words are still dropped.
    """
    if not 0.0 < p <= 1.0:
        raise InvalidArgumentError(f"p must be in (0, 1], got {p}")
    retained = [t for t in tokens if vocabulary is None or t in vocabulary]
    if len(retained) < min_len:
        return retained

    gow = build_graph(retained, W, scheme)
    scores = score_graph(gow, weighted=weighted).corerank
    freq = Counter(retained)
    first: Dict[str, int] = {}
    for i, t in enumerate(retained):
        first.setdefault(t, i)
    ranked = sorted(gow.graph.nodes, key=lambda v: (-scores[v], -freq[v], first[v]))
    # round first so 0.3 * 20 counts as 6, not 7
    n_keep = math.ceil(round(p * len(ranked), 9))
    return ranked[:n_keep]


def _compress_block(docs: List[List[str]], kwargs: dict) -> List[List[str]]:
    return [extract_keywords(d, **kwargs) for d in docs]


def compress_reports(
    docs: Sequence[Sequence[str]],
    W: int = 8,
    p: float = 0.30,
    min_len: int = 15,
    vocabulary: Optional[Collection[str]] = None,
    weighted: bool = False,
    scheme: str = SLIDING,
    workers: int = 1,
) -> List[List[str]]:
    kwargs = dict(W=W, p=p, min_len=min_len, vocabulary=vocabulary, weighted=weighted, scheme=scheme)
    docs = [list(d) for d in docs]
    if workers == 1 or len(docs) < 2:
        out = _compress_block(docs, kwargs)
    else:
        blocks = [list(b) for b in np.array_split(np.arange(len(docs)), min(len(docs), workers * 4))]
        parts = Parallel(n_jobs=workers)(delayed(_compress_block)([docs[i] for i in b], kwargs) for b in blocks)
        out = [kw for part in parts for kw in part]
    logger.info("Compressed %d reports (W=%d, p=%.2f, min_len=%d)", len(docs), W, p, min_len)
    return out


def summarize_compression(before: Sequence[Sequence[str]], after: Sequence[Sequence[str]]) -> CompressionSummary:
    return CompressionSummary(lengths_before=[len(d) for d in before], lengths_after=[len(d) for d in after])
