from typing import Iterable, Optional


class SitevecError(Exception):
    """Base class for every error the toolkit raises on bad input data."""

    exit_code = 2


class InvalidArgumentError(SitevecError, ValueError):
    exit_code = 1


class SchemaError(SitevecError):
    def __init__(self, column: str, path: Optional[str] = None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing required column '{column}'{where}")


class DatasetRowError(SitevecError):
    def __init__(self, line: int, reason: str, path: Optional[str] = None):
        self.line = line
        self.reason = reason
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: {reason}")


class EmptyVocabularyError(SitevecError):
    pass


class UnknownWordError(SitevecError, KeyError):
    def __init__(self, words: Iterable[str]):
        self.words = list(words)
        super().__init__(f"unknown word(s): {', '.join(self.words)}")

    def __str__(self) -> str:
        return self.args[0]


class UndefinedSimilarityError(SitevecError):
    pass


class FormatError(SitevecError):
    def __init__(self, offset: int, reason: str, path: Optional[str] = None):
        self.offset = offset
        self.reason = reason
        where = f"{path}: " if path else ""
        super().__init__(f"{where}byte {offset}: {reason}")


class EmptyDocumentError(SitevecError):
    pass


class NumericalError(SitevecError, ArithmeticError):
    pass


class CorpusIOError(SitevecError, OSError):
    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")

    def __str__(self) -> str:
        return f"{self.path}: {self.reason}"
