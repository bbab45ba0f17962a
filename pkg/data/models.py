from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List


class Task(Enum):
    SEVERITY = "severity"
    INJURY_TYPE = "injury_type"
    TRADE = "trade"


@dataclass
class TokenStream:
    chunks: List[List[str]]
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.chunks)

    @property
    def n_tokens(self) -> int:
        return sum(len(c) for c in self.chunks)

    def tokens(self) -> List[str]:
        return [t for c in self.chunks for t in c]


@dataclass
class ReportRecord:
    id: str
    narrative: str
    keywords_field: str = ""
    severity: str = ""
    injury_type: str = ""
    trade: str = ""
    naics: str = ""
    extra: Dict[str, str] = field(default_factory=dict)

    def is_labeled(self) -> bool:
        return all(v.strip() for v in (self.severity, self.injury_type, self.trade))


@dataclass
class Document:
    """A processed report: retained tokens plus the three label fields."""

    id: str
    tokens: List[str]
    severity: str = ""
    injury_type: str = ""
    trade: str = ""

    def label(self, task: Task) -> str:
        return getattr(self, task.value)
