import io
import os
import tempfile
import unittest

import numpy as np

from data.errors import InvalidArgumentError, UndefinedSimilarityError, UnknownWordError
from embeddings.explore import (
    EmbeddingExplorer,
    analogy,
    cosine,
    mismatch,
    nearest,
    pca_project,
    read_word_pairs,
    write_pca_csv,
)
from embeddings.store import EmbeddingMatrix


def _space():
    words = ["king", "queen", "man", "woman", "ladder", "scaffold", "roof", "zero"]
    vectors = np.array(
        [
            [1.0, 1.0, 0.0, 0.0],
            [1.0, -1.0, 0.0, 0.0],
            [0.2, 1.0, 0.0, 0.1],
            [0.2, -1.0, 0.0, 0.1],
            [0.0, 0.0, 1.0, 0.2],
            [0.0, 0.1, 1.0, 0.3],
            [0.0, -0.1, 0.9, 0.4],
            [0.0, 0.0, 0.0, 0.0],
        ]
    )
    return EmbeddingMatrix(words=words, vectors=vectors)


class TestCosine(unittest.TestCase):
    def test_values(self):
        self.assertAlmostEqual(cosine([1, 0], [0, 1]), 0.0)
        self.assertAlmostEqual(cosine([1, 1], [2, 2]), 1.0)
        self.assertAlmostEqual(cosine([1, 0], [-3, 0]), -1.0)

    def test_zero_vector(self):
        with self.assertRaises(UndefinedSimilarityError):
            cosine([0, 0], [1, 0])

    def test_symmetric_and_scale_free(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a, b = rng.normal(size=6), rng.normal(size=6)
            self.assertAlmostEqual(cosine(a, b), cosine(b, a))
            self.assertAlmostEqual(cosine(3.5 * a, b), cosine(a, b))


class TestQueries(unittest.TestCase):
    def setUp(self):
        self.space = _space()

    def test_nearest_excludes_query_and_sorts(self):
        results = nearest(self.space, "ladder", k=3)
        self.assertEqual([r.word for r in results][:1], ["scaffold"])
        self.assertNotIn("ladder", [r.word for r in results])
        scores = [r.score for r in results]
        self.assertEqual(scores, sorted(scores, reverse=True))

    def test_nearest_all_words(self):
        results = nearest(self.space, "king", k=len(self.space) - 1)
        self.assertEqual(len(results), len(self.space) - 1)
        self.assertEqual({r.word for r in results}, set(self.space.words) - {"king"})

    def test_unknown_word(self):
        with self.assertRaises(UnknownWordError):
            nearest(self.space, "crane", k=3)

    def test_zero_query(self):
        with self.assertRaises(UndefinedSimilarityError):
            nearest(self.space, "zero", k=3)

    def test_mismatch(self):
        self.assertEqual(mismatch(self.space, ["ladder", "scaffold", "roof", "king"]), "king")

    def test_mismatch_needs_three_words(self):
        with self.assertRaises(InvalidArgumentError):
            mismatch(self.space, ["king", "queen"])

    def test_analogy(self):
        results = analogy(self.space, "man", "woman", "king", k=1)
        self.assertEqual(results[0].word, "queen")

    def test_analogy_can_keep_inputs(self):
        words = [r.word for r in analogy(self.space, "man", "woman", "king", k=8, exclude_inputs=False)]
        self.assertIn("woman", words)


class TestPca(unittest.TestCase):
    def test_matches_full_eigendecomposition(self):
        rng = np.random.default_rng(11)
        vectors = rng.normal(size=(12, 5)) * np.array([5.0, 3.0, 1.0, 0.5, 0.1])
        space = EmbeddingMatrix(words=[f"w{i}" for i in range(12)], vectors=vectors)
        proj = pca_project(space, space.words, dims=2)

        centered = vectors - vectors.mean(axis=0)
        evalues, evectors = np.linalg.eig(np.cov(centered.T))
        order = np.argsort(evalues.real)[::-1][:2]
        expected = centered @ evectors.real[:, order]
        for d in range(2):
            # components are defined up to sign
            sign = np.sign(expected[:, d] @ proj.coords[:, d])
            np.testing.assert_allclose(proj.coords[:, d], sign * expected[:, d], atol=1e-8)
        np.testing.assert_allclose(proj.explained_variance, evalues.real[order], rtol=1e-8)

    def test_sign_convention_and_orthonormal(self):
        rng = np.random.default_rng(5)
        space = EmbeddingMatrix(words=[str(i) for i in range(8)], vectors=rng.normal(size=(8, 4)))
        proj = EmbeddingExplorer(space).pca_project(space.words, dims=3)
        np.testing.assert_allclose(proj.components @ proj.components.T, np.eye(3), atol=1e-10)
        for row in proj.components:
            self.assertGreater(row[np.argmax(np.abs(row))], 0)

    def test_too_few_words(self):
        with self.assertRaises(InvalidArgumentError):
            pca_project(_space(), ["king", "queen"], dims=2)

    def test_csv_rows(self):
        proj = pca_project(_space(), ["king", "queen", "ladder", "roof"], dims=2)
        out = io.StringIO()
        write_pca_csv(proj, out)
        rows = out.getvalue().splitlines()
        self.assertEqual(len(rows), 4)
        self.assertTrue(rows[0].startswith("king,"))
        self.assertEqual(len(rows[0].split(",")), 3)

    def test_pairs_file_keeps_order(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, "pairs.txt")
            with open(path, "w", encoding="utf-8") as f:
                f.write("hand laceration\n\neye burn\n")
            self.assertEqual(read_word_pairs(path), ["hand", "laceration", "eye", "burn"])
            with open(path, "w", encoding="utf-8") as f:
                f.write("hand laceration cut\n")
            with self.assertRaises(InvalidArgumentError):
                read_word_pairs(path)


if __name__ == "__main__":
    unittest.main()
