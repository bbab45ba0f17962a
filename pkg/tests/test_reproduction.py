"""
Checks against the released corpus and report table. Skipped unless
SITEVEC_CORPUS_DIR and/or SITEVEC_DATASET point at local copies.
"""

import os
import unittest

from corpus import ingest
from documents.keywords import compress_reports, summarize_compression
from evaluation.knn import make_folds

CORPUS_DIR = os.getenv("SITEVEC_CORPUS_DIR")
DATASET = os.getenv("SITEVEC_DATASET")


@unittest.skipUnless(CORPUS_DIR, "SITEVEC_CORPUS_DIR not set")
class TestReleasedCorpus(unittest.TestCase):
    def test_chunk_count(self):
        stream = ingest.read_corpus(CORPUS_DIR, chunk_size=200)
        self.assertAlmostEqual(len(stream), 55_200, delta=5_520)
        self.assertTrue(all(len(c) <= 200 for c in stream.chunks))


@unittest.skipUnless(DATASET, "SITEVEC_DATASET not set")
class TestReleasedDataset(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.records = ingest.load_dataset(DATASET)
        cls.labeled = ingest.filter_labeled(cls.records)

    def test_record_counts(self):
        self.assertEqual(len(self.records), 5_845)
        self.assertEqual(len(self.labeled), 1_688)

    def test_folds(self):
        self.assertEqual(make_folds(len(self.labeled), 4).sizes(), [422] * 4)

    def test_compression_shrinks_median(self):
        docs = [d.tokens for d in ingest.process_reports(self.labeled)]
        summary = summarize_compression(docs, compress_reports(docs, workers=2))
        self.assertLess(summary.median_after, 0.6 * summary.median_before)


if __name__ == "__main__":
    unittest.main()
