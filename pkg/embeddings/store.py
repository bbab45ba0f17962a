"""
Embedding matrices and their two file formats.

text:   "vocab_size dim" header, then "word f1 ... fdim" per line
binary: ASCII header "vocab_size dim\\n", then per record the word bytes, one
        space and dim little-endian float32 values; a linefeed after each
        record is written and tolerated on read (pretrained vector files)
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Collection, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from data.errors import CorpusIOError, FormatError, InvalidArgumentError, UnknownWordError
from embeddings.vocab import Vocabulary

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

_FLOAT = np.dtype("<f4")
_READ_BLOCK = 1 << 20


@dataclass
class EmbeddingMatrix:
    words: List[str]
    vectors: np.ndarray
    vocab: Optional[Vocabulary] = None
    word_to_id: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.words):
            raise InvalidArgumentError(
                f"{len(self.words)} words but vectors of shape {self.vectors.shape}"
            )
        self.word_to_id = {w: i for i, w in enumerate(self.words)}

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: object) -> bool:
        return word in self.word_to_id

    def ids(self, words: Iterable[str]) -> List[int]:
        words = list(words)
        missing = [w for w in words if w not in self.word_to_id]
        if missing:
            raise UnknownWordError(missing)
        return [self.word_to_id[w] for w in words]

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.ids([word])[0]]

    def restrict(self, words: Collection[str]) -> "EmbeddingMatrix":
        keep = [i for i, w in enumerate(self.words) if w in words]
        return EmbeddingMatrix(words=[self.words[i] for i in keep], vectors=self.vectors[keep])


def save(matrix: EmbeddingMatrix, path: PathLike, format: str = "auto") -> None:
    fmt = _resolve_format(path, format)
    if fmt == "binary":
        _save_binary(matrix, path)
    else:
        _save_text(matrix, path)
    logger.info("Wrote %d x %d %s embeddings to %s", len(matrix), matrix.dim, fmt, path)


def load(path: PathLike, format: str = "auto", restrict_to: Optional[Collection[str]] = None) -> EmbeddingMatrix:
    """Load a text or binary embedding file, optionally keeping only the words in `restrict_to`."""
    fmt = _resolve_format(path, format)
    try:
        f = open(path, "rb")
    except OSError as e:
        raise CorpusIOError(str(path), e.strerror or str(e)) from e
    with f:
        if fmt == "binary":
            words, vectors = _load_binary(f, str(path), restrict_to)
        else:
            words, vectors = _load_text(f, str(path), restrict_to)
    logger.info("Loaded %d x %d %s embeddings from %s", vectors.shape[0], vectors.shape[1], fmt, path)
    return EmbeddingMatrix(words=words, vectors=vectors)


def _resolve_format(path: PathLike, format: str) -> str:
    if format == "auto":
        return "binary" if Path(path).suffix.lower() == ".bin" else "text"
    if format not in ("text", "binary"):
        raise InvalidArgumentError(f"unknown embedding format '{format}'")
    return format


def _save_text(matrix: EmbeddingMatrix, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(matrix)} {matrix.dim}\n")
        for word, row in zip(matrix.words, matrix.vectors):
            f.write(word)
            f.write(" ")
            f.write(" ".join(f"{x:.6g}" for x in row.tolist()))
            f.write("\n")


def _save_binary(matrix: EmbeddingMatrix, path: PathLike) -> None:
    vectors = np.ascontiguousarray(matrix.vectors, dtype=_FLOAT)
    with open(path, "wb") as f:
        f.write(f"{len(matrix)} {matrix.dim}\n".encode("ascii"))
        for word, row in zip(matrix.words, vectors):
            f.write(word.encode("utf-8"))
            f.write(b" ")
            f.write(row.tobytes())
            f.write(b"\n")


def _parse_header(line: bytes, path: str) -> Tuple[int, int]:
    parts = line.split()
    try:
        n, dim = int(parts[0]), int(parts[1])
        if len(parts) != 2 or n < 0 or dim < 1:
            raise ValueError
    except (ValueError, IndexError):
        raise FormatError(0, f"malformed header {line[:40]!r}, expected 'vocab_size dim'", path) from None
    return n, dim


def _load_text(f: BinaryIO, path: str, restrict_to: Optional[Collection[str]]) -> Tuple[List[str], np.ndarray]:
    header = f.readline()
    n, dim = _parse_header(header, path)
    offset = len(header)
    words: List[str] = []
    rows: List[np.ndarray] = []
    for i in range(n):
        raw = f.readline()
        if not raw:
            raise FormatError(offset, f"truncated file: expected {n} records, found {i}", path)
        try:
            parts = raw.decode("utf-8").rstrip("\r\n ").split(" ")
        except UnicodeDecodeError:
            raise FormatError(offset, f"record {i} is not valid UTF-8", path) from None
        if len(parts) != dim + 1 or not parts[0]:
            raise FormatError(offset, f"record {i} has {len(parts) - 1} values, expected {dim}", path)
        word = parts[0]
        if restrict_to is None or word in restrict_to:
            try:
                rows.append(np.array(parts[1:], dtype=np.float32))
            except ValueError:
                raise FormatError(offset, f"record {i} ('{word}') has a non-numeric value", path) from None
            words.append(word)
        offset += len(raw)
    vectors = np.vstack(rows) if rows else np.zeros((0, dim), dtype=np.float32)
    return words, vectors


class _ByteReader:
    """Block-buffered reader that keeps track of absolute byte offsets."""

    def __init__(self, f: BinaryIO, start: int):
        self.f = f
        self.buf = b""
        self.pos = 0
        self.base = start

    @property
    def offset(self) -> int:
        return self.base + self.pos

    def _fill(self, need: int) -> bool:
        while len(self.buf) - self.pos < need:
            block = self.f.read(max(_READ_BLOCK, need))
            if not block:
                return False
            self.base += self.pos
            self.buf = self.buf[self.pos:] + block
            self.pos = 0
        return True

    def skip_linefeeds(self) -> None:
        while self._fill(1) and self.buf[self.pos:self.pos + 1] == b"\n":
            self.pos += 1

    def read_until_space(self) -> Optional[bytes]:
        while True:
            end = self.buf.find(b" ", self.pos)
            if end >= 0:
                token = self.buf[self.pos:end]
                self.pos = end + 1
                return token
            if not self._fill(len(self.buf) - self.pos + 1):
                return None

    def read(self, n: int) -> Optional[bytes]:
        if not self._fill(n):
            return None
        data = self.buf[self.pos:self.pos + n]
        self.pos += n
        return data


def _load_binary(f: BinaryIO, path: str, restrict_to: Optional[Collection[str]]) -> Tuple[List[str], np.ndarray]:
    header = f.readline()
    n, dim = _parse_header(header, path)
    reader = _ByteReader(f, len(header))
    width = dim * _FLOAT.itemsize
    words: List[str] = []
    rows: List[np.ndarray] = []
    for i in range(n):
        reader.skip_linefeeds()
        start = reader.offset
        raw_word = reader.read_until_space()
        if raw_word is None:
            raise FormatError(start, f"truncated file: expected {n} records, found {i}", path)
        try:
            word = raw_word.decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(start, f"record {i} word is not valid UTF-8", path) from None
        payload = reader.read(width)
        if payload is None:
            raise FormatError(reader.offset, f"truncated vector payload for record {i} ('{word}')", path)
        if restrict_to is None or word in restrict_to:
            words.append(word)
            rows.append(np.frombuffer(payload, dtype=_FLOAT))
    vectors = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dim), dtype=np.float32)
    return words, vectors
