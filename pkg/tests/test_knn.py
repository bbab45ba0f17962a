import unittest

import numpy as np

from data.errors import EmptyDocumentError, InvalidArgumentError
from data.models import Document, Task
from embeddings.store import EmbeddingMatrix
from evaluation.knn import BOW, ClassReport, knn_predict, macro_f1, make_folds, nearest_documents, vote


def _f1_oracle(preds, truths, classes):
    out = {}
    for c in classes:
        tp = sum(1 for p, t in zip(preds, truths) if p == c and t == c)
        fp = sum(1 for p, t in zip(preds, truths) if p == c and t != c)
        fn = sum(1 for p, t in zip(preds, truths) if p != c and t == c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[c] = (100 * precision, 100 * recall, 100 * f1, tp + fn)
    return out


class TestFolds(unittest.TestCase):
    def test_equal_sizes(self):
        plan = make_folds(1688, 4)
        self.assertEqual(plan.sizes(), [422, 422, 422, 422])

    def test_uneven_sizes(self):
        self.assertEqual(sorted(make_folds(10, 3).sizes()), [3, 3, 4])

    def test_sequential_blocks(self):
        plan = make_folds(list("abcdefgh"), 4)
        self.assertEqual(plan.assignments.tolist(), [0, 0, 1, 1, 2, 2, 3, 3])
        self.assertEqual(plan.test_indices(1).tolist(), [2, 3])
        self.assertEqual(plan.train_indices(1).tolist(), [0, 1, 4, 5, 6, 7])

    def test_seeded_is_deterministic(self):
        a = make_folds(50, 4, seed=7)
        b = make_folds(50, 4, seed=7)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        self.assertFalse(np.array_equal(a.assignments, make_folds(50, 4).assignments))
        self.assertTrue(max(a.sizes()) - min(a.sizes()) <= 1)

    def test_seeds_give_different_plans(self):
        a = make_folds(40, 4, seed=1).assignments
        self.assertFalse(np.array_equal(a, make_folds(40, 4, seed=2).assignments))
        self.assertEqual(sorted(np.bincount(a).tolist()), [10, 10, 10, 10])

    def test_folds_partition(self):
        plan = make_folds(23, 5, seed=3)
        seen = np.concatenate([plan.test_indices(f) for f in range(5)])
        self.assertEqual(sorted(seen.tolist()), list(range(23)))

    def test_invalid(self):
        with self.assertRaises(InvalidArgumentError):
            make_folds(3, 4)
        with self.assertRaises(InvalidArgumentError):
            make_folds(10, 1)
        with self.assertRaises(InvalidArgumentError):
            make_folds(10, 2, seed="shuffled")


class TestVote(unittest.TestCase):
    def test_nearest_one(self):
        self.assertEqual(vote([0.5, 0.0, 0.7], ["A", "B", "C"], k=1), "B")

    def test_majority(self):
        self.assertEqual(vote([0.1, 0.2, 0.3, 0.9], ["A", "B", "A", "B"], k=3), "A")

    def test_tie_goes_to_closer_class(self):
        # k=2: one A and one B; B's neighbour ranks first
        self.assertEqual(vote([0.4, 0.1, 0.9], ["A", "B", "C"], k=2), "B")

    def test_tie_on_ranks_goes_to_name(self):
        # k=4: A at ranks 0 and 3, B at ranks 1 and 2
        self.assertEqual(vote([0.0, 0.1, 0.2, 0.3], ["B", "A", "A", "B"], k=4), "A")

    def test_hand_placed_documents(self):
        points = np.array([[0, 0], [1, 0], [0, 1], [5, 5], [6, 5]], dtype=float)
        labels = ["near", "near", "far", "far", "far"]
        query = np.array([0.4, 0.4])
        distances = np.linalg.norm(points - query, axis=1)
        # sorted: [0,0] .566, [1,0] .721, [0,1] .721 -> near, near, far
        self.assertEqual(vote(distances, labels, k=3), "near")
        self.assertEqual(vote(distances, labels, k=5), "far")

    def test_monotone_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            d = rng.uniform(0.1, 5.0, size=12)
            labels = list(rng.choice(["A", "B", "C"], size=12))
            k = int(rng.integers(1, 13))
            self.assertEqual(vote(d, labels, k), vote(np.exp(3 * d) + 2, labels, k))

    def test_invalid(self):
        with self.assertRaises(InvalidArgumentError):
            vote([0.1], ["A"], k=0)
        with self.assertRaises(InvalidArgumentError):
            vote([0.1], ["A"], k=2)


class TestKnnPredict(unittest.TestCase):
    def setUp(self):
        self.emb = EmbeddingMatrix(words=["fall", "ladder", "burn", "acid"], vectors=np.eye(4))
        self.train = [
            Document(id="1", tokens=["fall", "ladder"], severity="Hospitalized"),
            Document(id="2", tokens=["ladder", "fall", "fall"], severity="Hospitalized"),
            Document(id="3", tokens=["burn", "acid"], severity="Fatality"),
        ]

    def test_wmd(self):
        self.assertEqual(knn_predict(self.train, ["fall", "ladder"], 1, Task.SEVERITY, embeddings=self.emb),
                         "Hospitalized")
        self.assertEqual(knn_predict(self.train, ["acid"], 1, Task.SEVERITY, embeddings=self.emb), "Fatality")

    def test_bow(self):
        query = Document(id="q", tokens=["burn", "acid", "acid"])
        self.assertEqual(knn_predict(self.train, query, 1, Task.SEVERITY, metric=BOW), "Fatality")

    def test_empty_query(self):
        with self.assertRaises(EmptyDocumentError):
            knn_predict(self.train, ["crane"], 1, Task.SEVERITY, embeddings=self.emb)

    def test_empty_training_document_left_out(self):
        train = self.train + [Document(id="4", tokens=["crane"], severity="Fatality")]
        self.assertEqual(knn_predict(train, ["fall"], 1, Task.SEVERITY, embeddings=self.emb), "Hospitalized")
        self.assertEqual(knn_predict(train, ["acid"], 1, Task.SEVERITY, embeddings=self.emb), "Fatality")
        with self.assertRaises(InvalidArgumentError):
            knn_predict(train, ["fall"], 4, Task.SEVERITY, embeddings=self.emb)

    def test_empty_training_document_bow(self):
        train = self.train + [Document(id="4", tokens=[], severity="Fatality")]
        # kept, the empty document would sit next to the burn report and swing the vote
        self.assertEqual(knn_predict(train, ["burn"], 3, Task.SEVERITY, metric=BOW), "Hospitalized")

    def test_nearest_documents(self):
        docs = [d.tokens for d in self.train] + [["crane"]]
        hits = nearest_documents(["fall"], docs, self.emb, k=2)
        self.assertEqual([i for i, _ in hits], [1, 0])
        self.assertLess(hits[0][1], hits[1][1])
        self.assertNotIn(0, [i for i, _ in nearest_documents(docs[0], docs, self.emb, k=3, exclude=0)])


class TestMacroF1(unittest.TestCase):
    def test_perfect(self):
        report = macro_f1(["A", "B", "B"], ["A", "B", "B"])
        self.assertEqual(report.f1, {"A": 100.0, "B": 100.0})
        self.assertEqual(report.micro_f1, 100.0)

    def test_hand_confusion_matrix(self):
        report = macro_f1(["A", "B", "B", "B"], ["A", "A", "B", "B"])
        self.assertAlmostEqual(report.precision["A"], 100.0)
        self.assertAlmostEqual(report.recall["A"], 50.0)
        self.assertAlmostEqual(report.f1["A"], 200 / 3)
        self.assertAlmostEqual(report.precision["B"], 200 / 3)
        self.assertAlmostEqual(report.recall["B"], 100.0)
        self.assertAlmostEqual(report.f1["B"], 80.0)
        self.assertEqual(sum(report.support.values()), 4)
        self.assertAlmostEqual(report.micro_f1, 75.0)

    def test_absent_class(self):
        report = macro_f1(["A"], ["A"], class_set=["A", "Z"])
        self.assertEqual(report.support["Z"], 0)
        self.assertEqual(report.f1["Z"], 0.0)
        self.assertEqual(report.precision["Z"], 0.0)

    def test_matches_oracle(self):
        rng = np.random.default_rng(17)
        classes = ["Fatality", "Hospitalized", "Non-hospitalized", "Other"]
        for _ in range(100):
            n = int(rng.integers(1, 40))
            truths = list(rng.choice(classes, size=n))
            preds = list(rng.choice(classes, size=n))
            report = macro_f1(preds, truths, classes)
            for c, (p, r, f, s) in _f1_oracle(preds, truths, classes).items():
                self.assertAlmostEqual(report.precision[c], p)
                self.assertAlmostEqual(report.recall[c], r)
                self.assertAlmostEqual(report.f1[c], f)
                self.assertEqual(report.support[c], s)
            self.assertEqual(report.n_observations, n)

    def test_length_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            macro_f1(["A"], ["A", "B"])

    def test_average(self):
        a = macro_f1(["A", "A"], ["A", "A"], ["A", "B"])
        b = macro_f1(["B", "A"], ["A", "A"], ["A", "B"])
        avg = ClassReport.average([a, b])
        self.assertAlmostEqual(avg.recall["A"], 75.0)
        self.assertEqual(avg.support["A"], 4)


if __name__ == "__main__":
    unittest.main()
