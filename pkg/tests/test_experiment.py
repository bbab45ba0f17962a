import os
import tempfile
import unittest

import numpy as np

from data.errors import InvalidArgumentError
from data.models import Document, Task
from data.persistence import PersistenceManager
from embeddings.store import EmbeddingMatrix
from evaluation.experiment import ExperimentConfig, ExperimentRunner, parse_tasks, run_experiment
from evaluation.knn import BOW


def _corpus(n_docs=24, seed=0):
    rng = np.random.default_rng(seed)
    fatal = [f"f{i}" for i in range(6)]
    hosp = [f"h{i}" for i in range(6)]
    vectors = np.vstack([
        np.array([1.0, 0.0, 0.0]) + 0.1 * rng.normal(size=(6, 3)),
        np.array([0.0, 1.0, 0.0]) + 0.1 * rng.normal(size=(6, 3)),
    ])
    emb = EmbeddingMatrix(words=fatal + hosp, vectors=vectors)
    docs = []
    for i in range(n_docs):
        fatal_doc = i % 2 == 0
        words = fatal if fatal_doc else hosp
        docs.append(Document(
            id=str(i),
            tokens=list(rng.choice(words, size=8)),
            severity="Fatality" if fatal_doc else "Hospitalized",
            injury_type="Burn" if fatal_doc else "Fracture",
            trade="Roofer",
        ))
    return docs, emb


class TestParseTasks(unittest.TestCase):
    def test_names(self):
        self.assertEqual(parse_tasks(["severity", "injury-type", "TRADE"]), [Task.SEVERITY, Task.INJURY_TYPE, Task.TRADE])

    def test_unknown(self):
        with self.assertRaises(InvalidArgumentError):
            parse_tasks(["body_part"])


class TestExperimentRunner(unittest.TestCase):
    def setUp(self):
        self.docs, self.emb = _corpus()
        self.cfg = ExperimentConfig(k_grid=(1, 3), min_len=5, p=0.5)

    def test_separable_classes(self):
        result = ExperimentRunner(self.docs, self.emb, self.cfg).run()
        for k in (1, 3):
            report = result.reports[(Task.SEVERITY, k)]
            self.assertEqual(report.f1, {"Fatality": 100.0, "Hospitalized": 100.0})
            self.assertEqual(report.support, {"Fatality": 12, "Hospitalized": 12})
        self.assertEqual(result.n_predictions, 24)
        self.assertEqual(len(result.timings), 4)
        self.assertEqual(result.best_k(Task.SEVERITY), 1)

    def test_empty_documents_excluded(self):
        docs = self.docs + [Document(id="x", tokens=["crane"], severity="Fatality", injury_type="Burn", trade="Roofer")]
        result = ExperimentRunner(docs, self.emb, self.cfg).run()
        self.assertEqual(result.n_excluded, 1)
        self.assertEqual(result.n_predictions, 24)
        self.assertEqual(result.reports[(Task.SEVERITY, 1)].n_observations, 24)

    def test_bow_baseline(self):
        cfg = ExperimentConfig(k_grid=(1,), metric=BOW)
        result = ExperimentRunner(self.docs, None, cfg).run()
        self.assertEqual(result.method, BOW)
        self.assertEqual(result.reports[(Task.SEVERITY, 1)].n_observations, 24)

    def test_wmd_needs_embeddings(self):
        with self.assertRaises(InvalidArgumentError):
            ExperimentRunner(self.docs, None, self.cfg)

    def test_k_larger_than_training_set(self):
        with self.assertRaises(InvalidArgumentError):
            ExperimentRunner(self.docs[:6], self.emb, ExperimentConfig(k_grid=(5,))).run()

    def test_per_fold_average(self):
        cfg = ExperimentConfig(k_grid=(1,), pooled=False)
        report = ExperimentRunner(self.docs, self.emb, cfg).run().reports[(Task.SEVERITY, 1)]
        self.assertEqual(report.f1["Fatality"], 100.0)
        self.assertEqual(sum(report.support.values()), 24)

    def test_cached_rerun_is_identical(self):
        with tempfile.TemporaryDirectory() as d:
            store = PersistenceManager(d)
            first = ExperimentRunner(self.docs, self.emb, self.cfg, store=store).run()
            second = ExperimentRunner(self.docs, self.emb, self.cfg, store=store).run()
            self.assertTrue(os.path.exists(os.path.join(d, "manifest.tsv")))
        self.assertFalse(any(t.cached for t in first.timings))
        self.assertTrue(all(t.cached for t in second.timings))
        for key, report in first.reports.items():
            self.assertEqual(report.f1, second.reports[key].f1)

    def test_cache_follows_embeddings_and_tokens(self):
        # f0..f2 move next to the h words, h0..h2 next to the f words
        vectors = self.emb.vectors.copy()
        vectors[[0, 1, 2, 6, 7, 8]] = vectors[[6, 7, 8, 0, 1, 2]]
        mixed = EmbeddingMatrix(words=self.emb.words, vectors=vectors)
        with tempfile.TemporaryDirectory() as d:
            store = PersistenceManager(d)
            ExperimentRunner(self.docs, self.emb, self.cfg, store=store, method="vectors").run()
            changed = ExperimentRunner(self.docs, mixed, self.cfg, store=store, method="vectors").run()
            fresh = ExperimentRunner(self.docs, mixed, self.cfg, method="vectors").run()
            self.assertFalse(any(t.cached for t in changed.timings))
            for key, report in fresh.reports.items():
                self.assertEqual(changed.reports[key].f1, report.f1)

            edited = [Document(id=doc.id, tokens=doc.tokens[:4], severity=doc.severity,
                               injury_type=doc.injury_type, trade=doc.trade) for doc in self.docs]
            rerun = ExperimentRunner(edited, self.emb, self.cfg, store=store, method="vectors").run()
            self.assertFalse(any(t.cached for t in rerun.timings))

    def test_result_rows(self):
        rows = ExperimentRunner(self.docs, self.emb, self.cfg).run().result_rows()
        classes = {r["class"] for r in rows if r["task"] == "severity"}
        self.assertEqual(classes, {"Fatality", "Hospitalized", "macro_avg", "overall"})


class TestRunExperiment(unittest.TestCase):
    def test_compression_and_relative_change(self):
        docs, emb = _corpus()
        outcome = run_experiment(docs, emb, tasks=["severity", "trade"], k_grid=(1, 3), compression=True,
                                 min_len=5, p=0.5)
        self.assertIsNotNone(outcome.compressed)
        self.assertTrue(outcome.compressed.compressed)
        rows = outcome.relative_change
        self.assertEqual([r["task"] for r in rows], ["severity", "trade"])
        for row in rows:
            self.assertIn(row["k"], (1, 3))
            self.assertGreater(row["speedup"], 0)
        self.assertEqual(outcome.compressed.n_predictions, outcome.full.n_predictions)

    def test_without_compression(self):
        docs, emb = _corpus()
        outcome = run_experiment(docs, emb, tasks=[Task.SEVERITY], k_grid=(1,))
        self.assertIsNone(outcome.compressed)
        self.assertEqual(outcome.relative_change, [])


if __name__ == "__main__":
    unittest.main()
