from .Config import ConfigError, ExperimentConfig
from .Checkpoint import Checkpoint, CheckpointError
from .Metrics import MetricsRecord, MetricsWriter, read_metrics
from .Trainer import TrainingDivergedError, Trainer, evaluate, evaluate_combo, evaluate_text, train_combo, train_text

__all__ = [
	"ConfigError", "ExperimentConfig", "Checkpoint", "CheckpointError", "MetricsRecord", "MetricsWriter", "read_metrics",
	"TrainingDivergedError", "Trainer", "evaluate", "evaluate_combo", "evaluate_text", "train_combo", "train_text"
]
