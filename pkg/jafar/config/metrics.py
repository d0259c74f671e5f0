from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram
from prometheus_client import write_to_textfile as _write_to_textfile

REGISTRY: CollectorRegistry = CollectorRegistry(auto_describe=True)

TRAIN_STEPS = Counter(
    "jafar_train_steps_total",
    "Optimizer steps completed",
    registry=REGISTRY,
)

TRAIN_LOSS = Gauge(
    "jafar_train_loss",
    "Batch-mean alignment loss of the latest step",
    registry=REGISTRY,
)

TRAIN_STEP_LATENCY = Histogram(
    "jafar_train_step_seconds",
    "Wall time of one training step (views, forward, backward, update)",
    registry=REGISTRY,
)

UPSAMPLE_LATENCY = Histogram(
    "jafar_upsample_seconds",
    "Wall time of one inference upsampling call",
    ["mode"],
    registry=REGISTRY,
)


def write_metrics(path: Path) -> None:
    _write_to_textfile(str(path), REGISTRY)
