import csv
import io
import os
import tempfile
import unittest

import numpy as np

from data.persistence import PersistenceManager, fingerprint, write_matrix_csv
from data.seeds import derive_seed, rng_for


class TestPersistenceManager(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.store = PersistenceManager(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_distance_cache(self):
        key = PersistenceManager.cache_key(2, "wmd", True, "abc")
        self.assertEqual(key, "fold2-wmd-kw-abc")
        self.assertIsNone(self.store.load_distances(key))
        matrix = np.arange(6, dtype=float).reshape(2, 3)
        self.store.save_distances(key, matrix)
        np.testing.assert_array_equal(self.store.load_distances(key, shape=(2, 3)), matrix)
        self.assertIsNone(self.store.load_distances(key, shape=(3, 2)))

    def test_manifest_survives_reopen(self):
        self.store.save_distances("a", np.zeros((1, 1)))
        self.store.save_distances("b", np.ones((1, 2)))
        reopened = PersistenceManager(self.tmp.name)
        self.assertEqual(reopened.load_distances("b").shape, (1, 2))
        with open(os.path.join(self.tmp.name, "manifest.tsv"), encoding="utf-8") as f:
            self.assertEqual([line.split("\t")[0] for line in f], ["a", "b"])

    def test_results_table(self):
        path = self.store.save_results([{"method": "wmd", "compression": "off", "task": "severity", "k": 5,
                                         "class": "Fatality", "precision": 70.0, "recall": 2 / 3 * 100,
                                         "f1": 68.9, "support": 10}])
        with open(path, encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(rows[0]["recall"], "66.67")
        self.assertEqual(rows[0]["support"], "10")


class TestHelpers(unittest.TestCase):
    def test_fingerprint(self):
        self.assertEqual(fingerprint(["1", "2"], [0, 1]), fingerprint(["1", "2"], [0, 1]))
        self.assertNotEqual(fingerprint(["1", "2"]), fingerprint(["12"]))
        self.assertEqual(len(fingerprint(["x"])), 12)

    def test_matrix_csv(self):
        out = io.StringIO()
        write_matrix_csv(np.array([[0.0, 1.5], [2.25, 1 / 3]]), out)
        self.assertEqual(out.getvalue(), "0,1.5\n2.25,0.3333333333\n")


class TestSeeds(unittest.TestCase):
    def test_streams_are_independent(self):
        self.assertEqual(derive_seed(1, "training"), derive_seed(1, "training"))
        self.assertNotEqual(derive_seed(1, "training"), derive_seed(1, "folds"))
        self.assertNotEqual(derive_seed(1, "folds"), derive_seed(2, "folds"))
        self.assertGreaterEqual(derive_seed(7, "folds"), 0)

    def test_rng_for(self):
        np.testing.assert_array_equal(rng_for(3, "folds").permutation(10), rng_for(3, "folds").permutation(10))


if __name__ == "__main__":
    unittest.main()
