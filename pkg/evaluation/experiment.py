"""
Cross-validated k-NN classification of reports.

For every fold the test-to-train distance matrix is computed once (the costly
part for WMD) and reused for all tasks and every k in the grid. Predictions are
pooled across folds by default, or scored per fold and averaged.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from data.errors import InvalidArgumentError
from data.models import Document, Task
from data.persistence import PersistenceManager, embedding_fingerprint, fingerprint
from data.seeds import SEQUENTIAL
from documents.keywords import compress_reports
from documents.wmd import bow_distance_matrix, wmd_distance_matrix
from embeddings.store import EmbeddingMatrix
from evaluation.knn import BOW, METRICS, WMD, ClassReport, FoldPlan, macro_f1, make_folds, predict_from_distances
from monitoring.observability import track_experiment_fold

logger = logging.getLogger(__name__)

DEFAULT_K_GRID = (5, 10, 15, 20, 25)


def parse_tasks(names: Sequence[str]) -> List[Task]:
    tasks = []
    for name in names:
        try:
            tasks.append(Task(name.strip().lower().replace("-", "_")))
        except ValueError:
            valid = ", ".join(t.value for t in Task)
            raise InvalidArgumentError(f"unknown task '{name}' (expected one of: {valid})") from None
    return tasks


@dataclass
class ExperimentConfig:
    tasks: Sequence[Task] = tuple(Task)
    k_grid: Sequence[int] = DEFAULT_K_GRID
    metric: str = WMD
    n_folds: int = 4
    fold_seed: object = SEQUENTIAL
    pooled: bool = True
    workers: int = 1
    # keyword compression
    W: int = 8
    p: float = 0.30
    min_len: int = 15
    weighted_cores: bool = False
    # exact WMD only for candidates that can reach the largest k
    prune: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.metric not in METRICS:
            raise InvalidArgumentError(f"unknown metric '{self.metric}'")
        if not self.k_grid or min(self.k_grid) < 1:
            raise InvalidArgumentError(f"k values must be >= 1, got {list(self.k_grid)}")
        if not self.tasks:
            raise InvalidArgumentError("at least one task is required")
        self.tasks = [t if isinstance(t, Task) else parse_tasks([t])[0] for t in self.tasks]
        return self


@dataclass
class FoldTiming:
    fold: int
    n_queries: int
    n_train: int
    seconds: float
    cached: bool = False


@dataclass
class ExperimentResult:
    method: str
    compressed: bool
    reports: Dict[Tuple[Task, int], ClassReport] = field(default_factory=dict)
    timings: List[FoldTiming] = field(default_factory=list)
    n_excluded: int = 0
    n_predictions: int = 0

    @property
    def distance_seconds(self) -> float:
        return sum(t.seconds for t in self.timings)

    def best_k(self, task: Task) -> int:
        """k with the highest macro F1; the smaller k wins a tie."""
        ks = sorted(k for (t, k) in self.reports if t == task)
        if not ks:
            raise InvalidArgumentError(f"no results for task '{task.value}'")
        return max(ks, key=lambda k: (self.reports[(task, k)].macro_f1, -k))

    def result_rows(self) -> List[Dict]:
        rows = []
        for (task, k), report in sorted(self.reports.items(), key=lambda item: (item[0][0].value, item[0][1])):
            base = {"method": self.method, "compression": "on" if self.compressed else "off", "task": task.value, "k": k}
            for c in report.classes:
                rows.append({**base, "class": c, "precision": report.precision[c], "recall": report.recall[c],
                             "f1": report.f1[c], "support": report.support[c]})
            rows.append({**base, "class": "macro_avg", "f1": report.macro_f1, "support": report.n_observations})
            rows.append({**base, "class": "overall", "f1": report.micro_f1, "support": report.n_observations})
        return rows

    def timing_rows(self) -> List[Dict]:
        return [
            {"method": self.method, "compression": "on" if self.compressed else "off", "fold": t.fold,
             "n_queries": t.n_queries, "n_train": t.n_train, "seconds": f"{t.seconds:.4f}", "cached": int(t.cached)}
            for t in self.timings
        ]


def relative_change(full: ExperimentResult, compressed: ExperimentResult) -> List[Dict]:
    """Overall F1 change (percent) at each task's best uncompressed k, with the distance-phase speed-up."""
    speedup = full.distance_seconds / compressed.distance_seconds if compressed.distance_seconds > 0 else float("inf")
    rows = []
    for task in sorted({t for t, _ in full.reports}, key=lambda t: t.value):
        k = full.best_k(task)
        before = full.reports[(task, k)].micro_f1
        after = compressed.reports[(task, k)].micro_f1
        change = 100.0 * (after - before) / before if before > 0 else 0.0
        rows.append({"method": full.method, "task": task.value, "k": k, "f1_full": before,
                     "f1_compressed": after, "relative_change_pct": change, "speedup": speedup})
    return rows


class ExperimentRunner:
    def __init__(
        self,
        docs: Sequence[Document],
        embeddings: Optional[EmbeddingMatrix],
        cfg: Optional[ExperimentConfig] = None,
        store: Optional[PersistenceManager] = None,
        method: Optional[str] = None,
    ):
        self.cfg = (cfg or ExperimentConfig()).validate()
        if self.cfg.metric == WMD and embeddings is None:
            raise InvalidArgumentError("the wmd metric needs embeddings")
        self.docs = list(docs)
        self.embeddings = embeddings if self.cfg.metric == WMD else None
        self.embedding_tag = (
            embedding_fingerprint(self.embeddings.words, self.embeddings.vectors) if self.embeddings is not None else "none"
        )
        self.store = store
        self.method = method or (BOW if self.cfg.metric == BOW else WMD)
        if max(self.cfg.k_grid) > len(self.docs):
            raise InvalidArgumentError(f"k={max(self.cfg.k_grid)} exceeds the {len(self.docs)} documents")
        self.plan: FoldPlan = make_folds(len(self.docs), self.cfg.n_folds, self.cfg.fold_seed)

    def _tokens(self, compressed: bool) -> List[List[str]]:
        vocab = self.embeddings.word_to_id if self.embeddings is not None else None
        tokens = [[t for t in d.tokens if vocab is None or t in vocab] for d in self.docs]
        if not compressed:
            return tokens
        cfg = self.cfg
        return compress_reports(tokens, W=cfg.W, p=cfg.p, min_len=cfg.min_len,
                                weighted=cfg.weighted_cores, workers=cfg.workers)

    def _distances(self, test: List[List[str]], train: List[List[str]]) -> np.ndarray:
        if self.cfg.metric == BOW:
            return bow_distance_matrix(test, train)
        keep = max(self.cfg.k_grid) if self.cfg.prune else None
        return wmd_distance_matrix(test, train, self.embeddings, workers=self.cfg.workers, prune_keep=keep)

    def run(self, compressed: bool = False) -> ExperimentResult:
        cfg = self.cfg
        tokens = self._tokens(compressed)
        usable = np.array([len(t) > 0 for t in tokens])
        result = ExperimentResult(method=self.method, compressed=compressed, n_excluded=int((~usable).sum()))
        if result.n_excluded:
            logger.warning("Excluding %d documents with no usable tokens", result.n_excluded)
        # the key covers everything the distances depend on
        tag = fingerprint([d.id for d in self.docs], self.plan.assignments.tolist(), [" ".join(t) for t in tokens],
                          [self.embedding_tag, self.method, cfg.metric, cfg.W, cfg.p, cfg.min_len,
                           cfg.weighted_cores, cfg.prune])

        pooled_preds: Dict[Tuple[Task, int], List[str]] = {}
        pooled_truth: Dict[Task, List[str]] = {t: [] for t in cfg.tasks}
        fold_reports: Dict[Tuple[Task, int], List[ClassReport]] = {}

        for fold in range(self.plan.n_folds):
            test_idx = [i for i in self.plan.test_indices(fold) if usable[i]]
            train_idx = [i for i in self.plan.train_indices(fold) if usable[i]]
            if max(cfg.k_grid) > len(train_idx):
                raise InvalidArgumentError(f"fold {fold}: k={max(cfg.k_grid)} exceeds {len(train_idx)} training documents")

            distances, timing = self._fold_distances(fold, tokens, test_idx, train_idx, compressed, tag)
            result.timings.append(timing)

            for task in cfg.tasks:
                train_labels = [self.docs[i].label(task) for i in train_idx]
                truths = [self.docs[i].label(task) for i in test_idx]
                pooled_truth[task].extend(truths)
                for k in cfg.k_grid:
                    preds = predict_from_distances(distances, train_labels, k) if test_idx else []
                    pooled_preds.setdefault((task, k), []).extend(preds)
                    if not cfg.pooled:
                        classes = sorted({self.docs[i].label(task) for i in np.flatnonzero(usable)})
                        fold_reports.setdefault((task, k), []).append(macro_f1(preds, truths, classes))

        for task in cfg.tasks:
            classes = sorted({self.docs[i].label(task) for i in np.flatnonzero(usable)})
            for k in cfg.k_grid:
                if cfg.pooled:
                    result.reports[(task, k)] = macro_f1(pooled_preds[(task, k)], pooled_truth[task], classes)
                else:
                    result.reports[(task, k)] = ClassReport.average(fold_reports[(task, k)])
        result.n_predictions = len(pooled_truth[cfg.tasks[0]])
        logger.info("%s (compression %s): %d predictions per task and k, distances %.2fs",
                    self.method, "on" if compressed else "off", result.n_predictions, result.distance_seconds)
        return result

    def _fold_distances(self, fold, tokens, test_idx, train_idx, compressed, tag) -> Tuple[np.ndarray, FoldTiming]:
        shape = (len(test_idx), len(train_idx))
        key = PersistenceManager.cache_key(fold, self.method, compressed, tag)
        if self.store is not None:
            cached = self.store.load_distances(key, shape)
            if cached is not None:
                logger.info("fold %d: cached distances %s", fold, key)
                return cached, FoldTiming(fold, shape[0], shape[1], 0.0, cached=True)

        started = time.perf_counter()
        distances = self._distances([tokens[i] for i in test_idx], [tokens[i] for i in train_idx])
        seconds = time.perf_counter() - started
        logger.info("fold %d/%d: %d x %d %s distances in %.2fs",
                    fold + 1, self.plan.n_folds, shape[0], shape[1], self.cfg.metric, seconds)
        track_experiment_fold(fold=fold, metric=self.cfg.metric, compression="on" if compressed else "off",
                              seconds=seconds, n_queries=shape[0])
        if self.store is not None:
            self.store.save_distances(key, distances)
        return distances, FoldTiming(fold, shape[0], shape[1], seconds)


@dataclass
class ExperimentOutcome:
    full: ExperimentResult
    compressed: Optional[ExperimentResult] = None

    @property
    def relative_change(self) -> List[Dict]:
        return relative_change(self.full, self.compressed) if self.compressed is not None else []


def run_experiment(
    docs: Sequence[Document],
    embeddings: Optional[EmbeddingMatrix],
    tasks: Sequence = tuple(Task),
    k_grid: Sequence[int] = DEFAULT_K_GRID,
    metric: str = WMD,
    compression: bool = False,
    store: Optional[PersistenceManager] = None,
    method: Optional[str] = None,
    **options,
) -> ExperimentOutcome:
    cfg = ExperimentConfig(tasks=parse_tasks([t.value if isinstance(t, Task) else t for t in tasks]),
                           k_grid=tuple(k_grid), metric=metric, **options)
    runner = ExperimentRunner(docs, embeddings, cfg, store=store, method=method)
    outcome = ExperimentOutcome(full=runner.run(compressed=False))
    if compression:
        outcome.compressed = runner.run(compressed=True)
    return outcome
