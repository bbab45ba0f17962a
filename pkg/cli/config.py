"""Run settings with the published defaults, and key=value config files."""

from typing import Any, Dict, Optional, Tuple

import click
from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, field_validator

from data.errors import CorpusIOError, InvalidArgumentError
from documents.keywords import SCHEMES, SLIDING
from embeddings.trainer import TrainConfig
from embeddings.vocab import DEFAULT_ALPHA, DEFAULT_TABLE_SIZE
from evaluation.experiment import DEFAULT_K_GRID, ExperimentConfig, parse_tasks
from evaluation.knn import METRICS, WMD


class RunConfig(BaseModel):
    # training
    dim: int = Field(300, ge=1)
    window: int = Field(5, ge=1)
    negatives: int = Field(3, ge=1)
    epochs: int = Field(10, ge=0)
    initial_lr: float = Field(0.025, gt=0)
    final_lr: float = Field(1e-4, ge=0)
    subsample_t: float = Field(1e-5, gt=0)
    min_count: int = Field(5, ge=1)
    chunk_size: int = Field(200, ge=1)
    alpha: float = Field(DEFAULT_ALPHA, gt=0)
    table_size: int = Field(DEFAULT_TABLE_SIZE, ge=1)
    # keywords
    W: int = Field(8, ge=2)
    p: float = Field(0.30, gt=0, le=1)
    min_len: int = Field(15, ge=0)
    scheme: str = SLIDING
    weighted_cores: bool = False
    # classification
    k_grid: Tuple[int, ...] = DEFAULT_K_GRID
    n_folds: int = Field(4, ge=2)
    metric: str = WMD
    compression: bool = False
    shuffle_folds: bool = False
    pooled: bool = True
    prune: bool = False
    # shared
    seed: int = Field(1, ge=0)
    workers: int = Field(1, ge=1)

    @field_validator("k_grid")
    @classmethod
    def _positive_k(cls, v):
        if not v or min(v) < 1:
            raise ValueError("k values must be positive")
        return tuple(v)

    @field_validator("metric")
    @classmethod
    def _known_metric(cls, v):
        if v not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        return v

    @field_validator("scheme")
    @classmethod
    def _known_scheme(cls, v):
        if v not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        return v

    @classmethod
    def from_options(cls, **options: Any) -> "RunConfig":
        """Build from click parameters; validation failures become usage errors."""
        known = {k: v for k, v in options.items() if k in cls.model_fields and v is not None}
        try:
            return cls(**known)
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(x) for x in first["loc"])
            raise click.UsageError(f"invalid value for '{field}': {first['msg']}") from None

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            dim=self.dim,
            window=self.window,
            negatives=self.negatives,
            epochs=self.epochs,
            initial_lr=self.initial_lr,
            final_lr=self.final_lr,
            subsample_t=self.subsample_t,
            seed=self.seed,
            workers=self.workers,
        )

    def experiment_config(self, tasks) -> ExperimentConfig:
        return ExperimentConfig(
            tasks=parse_tasks(tasks),
            k_grid=self.k_grid,
            metric=self.metric,
            n_folds=self.n_folds,
            fold_seed=self.seed if self.shuffle_folds else "sequential",
            pooled=self.pooled,
            workers=self.workers,
            W=self.W,
            p=self.p,
            min_len=self.min_len,
            weighted_cores=self.weighted_cores,
            prune=self.prune,
        )


def parse_k_grid(value: Any) -> Tuple[int, ...]:
    if isinstance(value, (tuple, list)):
        return tuple(int(v) for v in value)
    try:
        return tuple(int(v) for v in str(value).replace(" ", "").split(",") if v)
    except ValueError:
        raise InvalidArgumentError(f"k must be a comma-separated list of integers, got '{value}'") from None


def load_config_file(path: str) -> Dict[str, str]:
    """
    Read a key=value file (dotenv syntax). Keys may use dashes or underscores
    and are matched against option names without regard to case.
    """
    try:
        with open(path, "r", encoding="utf-8"):
            pass
    except OSError as e:
        raise CorpusIOError(path, e.strerror or str(e)) from e
    values = dotenv_values(path)
    return {k.strip().replace("-", "_"): v for k, v in values.items() if v is not None}


def build_default_map(command: click.Command, values: Dict[str, str]) -> Optional[Dict[str, Any]]:
    """Nest flat config values under every (sub)command name so click can pick them up."""
    if not isinstance(command, click.Group):
        names = {p.name.lower(): p.name for p in command.params}
        return {names[k.lower()]: v for k, v in values.items() if k.lower() in names}
    out: Dict[str, Any] = {}
    for name, sub in command.commands.items():
        out[name] = build_default_map(sub, values)
    return out
