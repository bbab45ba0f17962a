import logging
import os
import sys
import warnings
from typing import List, Optional

# Suppress TracerProvider warnings
warnings.filterwarnings("ignore", message="Overriding of current TracerProvider is not allowed")

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

try:
    try:
        from langfuse.decorators import observe
    except ImportError:
        from langfuse import observe  # newer SDKs export it at top level
    from langfuse import Langfuse
except Exception:  # noqa: BLE001
    # Fallback no-op for environments without langfuse installed
    def observe(*args, **kwargs):  # type: ignore[override]
        def _decorator(func):
            return func

        return _decorator

    class Langfuse:  # type: ignore[override]
        def __init__(self, *args, **kwargs):
            pass

langfuse = None
if os.getenv("LANGFUSE_SECRET_KEY") and os.getenv("LANGFUSE_PUBLIC_KEY"):
    try:
        langfuse = Langfuse(
            secret_key=os.getenv("LANGFUSE_SECRET_KEY"),
            public_key=os.getenv("LANGFUSE_PUBLIC_KEY"),
        )
    except Exception as e:
        warnings.warn(f"Failed to initialize Langfuse: {e}")


def flush_tracing() -> bool:
    """Send buffered traces before the process exits. False when tracing is off."""
    if langfuse is None or not hasattr(langfuse, "flush"):
        return False
    try:
        langfuse.flush()
    except Exception as e:  # noqa: BLE001
        logger.warning("Failed to flush traces: %s", e)
        return False
    return True


def configure_logging(level: Optional[str] = None) -> int:
    """Log to stderr; the level comes from the argument, then SITEVEC_LOG_LEVEL, then INFO."""
    name = (level or os.getenv("SITEVEC_LOG_LEVEL") or "INFO").upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        numeric = logging.INFO
    logging.basicConfig(level=numeric, format=LOG_FORMAT, stream=sys.stderr, force=True)
    return numeric


@observe()
def track_training_run(vocab_size: int, dim: int, epochs: int, workers: int, seconds: float,
                       epoch_losses: Optional[List[float]] = None):
    return {
        "vocab_size": vocab_size,
        "dim": dim,
        "epochs": epochs,
        "workers": workers,
        "seconds": seconds,
        "epoch_losses": epoch_losses or [],
    }


@observe()
def track_experiment_fold(fold: int, metric: str, compression: str, seconds: float, n_queries: int):
    return {"fold": fold, "metric": metric, "compression": compression, "seconds": seconds, "n_queries": n_queries}


@observe()
def track_keyword_compression(n_reports: int, median_before: float, median_after: float):
    return {"n_reports": n_reports, "median_before": median_before, "median_after": median_after}
