import csv
import hashlib
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from data.errors import CorpusIOError

logger = logging.getLogger(__name__)

MANIFEST = "manifest.tsv"

RESULT_COLUMNS = ["method", "compression", "task", "k", "class", "precision", "recall", "f1", "support"]
TIMING_COLUMNS = ["method", "compression", "fold", "n_queries", "n_train", "seconds", "cached"]
CHANGE_COLUMNS = ["method", "task", "k", "f1_full", "f1_compressed", "relative_change_pct", "speedup"]


def fingerprint(*parts: Iterable[Any]) -> str:
    """Short stable digest of id lists, fold assignments and settings."""
    h = hashlib.sha1()
    for part in parts:
        h.update("\x1f".join(str(x) for x in part).encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()[:12]


def embedding_fingerprint(words: Sequence[str], vectors: np.ndarray) -> str:
    """Digest of an embedding set: its words in order and the raw vector bytes."""
    h = hashlib.sha1()
    h.update("\n".join(words).encode("utf-8"))
    h.update(np.ascontiguousarray(vectors).tobytes())
    return h.hexdigest()[:12]


def write_matrix_csv(matrix: np.ndarray, out: TextIO, delimiter: str = ",") -> None:
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    for row in np.atleast_2d(matrix):
        writer.writerow([f"{x:.10g}" for x in row])


class PersistenceManager:
    """
    Experiment artifacts under one directory: the per-fold distance cache
    (npy files plus a tab-separated manifest) and the result tables.
    """

    def __init__(self, data_dir: str = "artifacts"):
        self.data_dir = Path(data_dir)
        try:
            os.makedirs(self.data_dir / "distances", exist_ok=True)
        except OSError as e:
            raise CorpusIOError(str(self.data_dir), e.strerror or str(e)) from e

    # distance cache

    @staticmethod
    def cache_key(fold: int, method: str, compression: bool, tag: str) -> str:
        return f"fold{fold}-{method}-{'kw' if compression else 'full'}-{tag}"

    def _manifest(self) -> Dict[str, Tuple[str, str]]:
        path = self.data_dir / MANIFEST
        entries: Dict[str, Tuple[str, str]] = {}
        if not path.exists():
            return entries
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                parts = line.rstrip("\n").split("\t")
                if len(parts) == 3:
                    entries[parts[0]] = (parts[1], parts[2])
        return entries

    def save_distances(self, key: str, matrix: np.ndarray) -> Path:
        filename = Path("distances") / f"{key}.npy"
        np.save(self.data_dir / filename, matrix)
        entries = self._manifest()
        entries[key] = (str(filename), "x".join(str(s) for s in matrix.shape))
        with open(self.data_dir / MANIFEST, "w", encoding="utf-8") as f:
            for k in sorted(entries):
                f.write(f"{k}\t{entries[k][0]}\t{entries[k][1]}\n")
        return self.data_dir / filename

    def load_distances(self, key: str, shape: Optional[Sequence[int]] = None) -> Optional[np.ndarray]:
        entry = self._manifest().get(key)
        if entry is None:
            return None
        try:
            matrix = np.load(self.data_dir / entry[0])
        except (OSError, ValueError) as e:
            logger.warning("Ignoring unreadable cached distances %s: %s", entry[0], e)
            return None
        if shape is not None and tuple(matrix.shape) != tuple(shape):
            logger.warning("Ignoring cached distances %s with shape %s", entry[0], matrix.shape)
            return None
        return matrix

    # result tables

    def _write_rows(self, name: str, columns: List[str], rows: Iterable[Dict[str, Any]]) -> Path:
        path = self.data_dir / name
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({c: _fmt(row.get(c, "")) for c in columns})
        logger.info("Wrote %s", path)
        return path

    def save_results(self, rows: Iterable[Dict[str, Any]], name: str = "results.csv") -> Path:
        return self._write_rows(name, RESULT_COLUMNS, rows)

    def save_timing(self, rows: Iterable[Dict[str, Any]], name: str = "timing.csv") -> Path:
        return self._write_rows(name, TIMING_COLUMNS, rows)

    def save_relative_change(self, rows: Iterable[Dict[str, Any]], name: str = "relative_change.csv") -> Path:
        return self._write_rows(name, CHANGE_COLUMNS, rows)


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return f"{value:.2f}"
    return value
