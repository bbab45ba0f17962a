"""
Corpus and dataset ingestion.

Raw text becomes lowercase token streams split into fixed-size training chunks;
the injury-report table becomes ReportRecords, filtered to the labeled subset
and reduced to processed Documents (words without an embedding removed).
"""

import csv
import logging
import os
import re
from pathlib import Path
from typing import Collection, Dict, Iterable, Iterator, List, Optional, Sequence, Union

from data.errors import CorpusIOError, DatasetRowError, InvalidArgumentError, SchemaError
from data.models import Document, ReportRecord, TokenStream

logger = logging.getLogger(__name__)

# Anything that is not a letter, digit or hyphen separates tokens.
_SEPARATORS = re.compile(r"[^\w\-]+|_+")

PathLike = Union[str, os.PathLike]

REQUIRED_FIELDS = ("id", "narrative", "severity", "injury_type", "trade")

# Normalized header -> record field. The source table names some fields after
# the accident-search form ("degree", "nature", "occupation").
COLUMN_ALIASES: Dict[str, str] = {
    "id": "id",
    "report_id": "id",
    "identification_number": "id",
    "narrative": "narrative",
    "keywords": "keywords_field",
    "severity": "severity",
    "injury_severity": "severity",
    "degree": "severity",
    "injury_type": "injury_type",
    "nature": "injury_type",
    "trade": "trade",
    "occupation": "trade",
    "naics": "naics",
    "naics_code": "naics",
}


def tokenize(text: str, stopwords: Optional[Collection[str]] = None) -> List[str]:
    tokens = []
    for raw in _SEPARATORS.split(text.lower()):
        token = raw.strip("-")
        if not token:
            continue
        if stopwords and token in stopwords:
            continue
        tokens.append(token)
    return tokens


def chunk(tokens: Sequence[str], chunk_size: int, source_id: str = "") -> TokenStream:
    if chunk_size < 1:
        raise InvalidArgumentError(f"chunk_size must be >= 1, got {chunk_size}")
    chunks = [list(tokens[i:i + chunk_size]) for i in range(0, len(tokens), chunk_size)]
    return TokenStream(chunks=chunks, source_id=source_id)


def load_stoplist(path: PathLike) -> frozenset:
    """One word per line; blank lines and '#' comments are ignored."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            words = {line.strip().lower() for line in f}
    except OSError as e:
        raise CorpusIOError(str(path), e.strerror or str(e)) from e
    return frozenset(w for w in words if w and not w.startswith("#"))


def load_stoplists(paths: Iterable[PathLike]) -> frozenset:
    merged: set = set()
    for p in paths:
        merged |= load_stoplist(p)
    return frozenset(merged)


def corpus_files(path: PathLike) -> List[Path]:
    root = Path(path)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise CorpusIOError(str(path), "no such file or directory")
    files = sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise CorpusIOError(str(path), "directory contains no corpus files")
    return files


def iter_corpus_tokens(path: PathLike, stopwords: Optional[Collection[str]] = None) -> Iterator[str]:
    for file in corpus_files(path):
        try:
            with open(file, "r", encoding="utf-8") as f:
                for line in f:
                    yield from tokenize(line, stopwords)
        except (OSError, UnicodeDecodeError) as e:
            raise CorpusIOError(str(file), str(e)) from e


def read_corpus(path: PathLike, chunk_size: int = 200, stopwords: Optional[Collection[str]] = None) -> TokenStream:
    tokens = list(iter_corpus_tokens(path, stopwords))
    stream = chunk(tokens, chunk_size, source_id=str(path))
    logger.info("Read %d tokens from %s into %d chunks of <= %d", len(tokens), path, len(stream), chunk_size)
    return stream


def _normalize_header(name: str) -> str:
    return re.sub(r"[\s\-]+", "_", name.strip().lower())


def load_dataset(path: PathLike, delimiter: str = ",", columns: Optional[Dict[str, str]] = None) -> List[ReportRecord]:
    """
    Read the injury-report table. `columns` maps header names to record fields and
    is merged over COLUMN_ALIASES; headers that map to nothing land in `extra`.
    """
    aliases = dict(COLUMN_ALIASES)
    for header, field_name in (columns or {}).items():
        aliases[_normalize_header(header)] = field_name

    try:
        f = open(path, "r", encoding="utf-8", newline="")
    except OSError as e:
        raise CorpusIOError(str(path), e.strerror or str(e)) from e

    records: List[ReportRecord] = []
    seen_ids: Dict[str, int] = {}
    with f:
        reader = csv.reader(f, delimiter=delimiter)
        try:
            header = next(reader, None)
        except csv.Error as e:
            raise DatasetRowError(reader.line_num, str(e), str(path)) from e
        if header is None:
            raise SchemaError(REQUIRED_FIELDS[0], str(path))

        mapping: List[Optional[str]] = []
        for name in header:
            target = aliases.get(_normalize_header(name))
            mapping.append(target if target not in mapping else None)
        for required in REQUIRED_FIELDS:
            if required not in mapping:
                raise SchemaError(required, str(path))

        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as e:
                raise DatasetRowError(reader.line_num, str(e), str(path)) from e
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetRowError(
                    reader.line_num, f"expected {len(header)} fields, found {len(row)}", str(path)
                )
            values: Dict[str, str] = {}
            extra: Dict[str, str] = {}
            for name, target, value in zip(header, mapping, row):
                if target is None:
                    extra[name] = value
                else:
                    values[target] = value
            record = ReportRecord(extra=extra, **values)
            if record.id in seen_ids:
                raise DatasetRowError(
                    reader.line_num, f"duplicate id '{record.id}' (first seen on line {seen_ids[record.id]})", str(path)
                )
            seen_ids[record.id] = reader.line_num
            records.append(record)

    logger.info("Loaded %d reports from %s", len(records), path)
    return records


def filter_labeled(records: Iterable[ReportRecord]) -> List[ReportRecord]:
    return [r for r in records if r.is_labeled()]


def process_reports(
    records: Iterable[ReportRecord],
    vocabulary: Optional[Collection[str]] = None,
    stopwords: Optional[Collection[str]] = None,
) -> List[Document]:
    """Tokenize narratives and drop the words that have no embedding."""
    docs = []
    for r in records:
        tokens = tokenize(r.narrative, stopwords)
        if vocabulary is not None:
            tokens = [t for t in tokens if t in vocabulary]
        docs.append(
            Document(
                id=r.id,
                tokens=tokens,
                severity=r.severity.strip(),
                injury_type=r.injury_type.strip(),
                trade=r.trade.strip(),
            )
        )
    return docs


def write_reports(reports: Iterable[Sequence[str]], path: PathLike) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for tokens in reports:
            f.write(" ".join(tokens))
            f.write("\n")
            n += 1
    return n


def read_reports(path: PathLike) -> List[List[str]]:
    """One report per line, tokens space-separated; blank lines are empty reports."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return [line.split() for line in f]
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusIOError(str(path), str(e)) from e


def write_labels(docs: Iterable[Document], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["id", "severity", "injury_type", "trade"])
        for d in docs:
            writer.writerow([d.id, d.severity, d.injury_type, d.trade])


def read_documents(reports_path: PathLike, labels_path: PathLike) -> List[Document]:
    """Join a processed-reports file with its labels file, line i of one to data row i of the other."""
    reports = read_reports(reports_path)
    try:
        with open(labels_path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            missing = [c for c in ("id", "severity", "injury_type", "trade") if c not in (reader.fieldnames or [])]
            if missing:
                raise SchemaError(missing[0], str(labels_path))
            rows = list(reader)
    except OSError as e:
        raise CorpusIOError(str(labels_path), e.strerror or str(e)) from e
    if len(rows) != len(reports):
        raise DatasetRowError(
            min(len(rows), len(reports)) + 2,
            f"{len(reports)} reports but {len(rows)} label rows",
            str(labels_path),
        )
    return [
        Document(id=row["id"], tokens=tokens, severity=row["severity"], injury_type=row["injury_type"], trade=row["trade"])
        for row, tokens in zip(rows, reports)
    ]
