import csv
import os
from typing import Optional, Tuple

import attr

FIELDS = (
	"step", "epoch", "kind", "train_loss", "train_loss_ema", "metric", "value", "digit_accuracy",
	"mean_abs_cell", "cell_penalty", "weight_penalty",
)


@attr.s(auto_attribs=True)
class MetricsRecord:
	"""One row of the metrics stream.

	`kind` is "train" for running training figures and "eval" for test-set evaluations;
	`metric` names `value` (bpc, xent, correct). Wall time is kept for the log
	but not written to the CSV, so equal runs produce identical files.
	"""
	step: int
	epoch: int
	kind: str = "train"
	train_loss: Optional[float] = None
	train_loss_ema: Optional[float] = None
	metric: str = ""
	value: Optional[float] = None
	digit_accuracy: Optional[float] = None
	mean_abs_cell: Optional[float] = None
	cell_penalty: Optional[float] = None
	weight_penalty: Optional[float] = None
	wall_time: float = attr.ib(default=0.0, eq=False)

	def row(self) -> dict:
		out = {}
		for name in FIELDS:
			value = getattr(self, name)
			out[name] = "" if value is None else (repr(value) if isinstance(value, float) else value)
		return out

	def __str__(self):
		parts = [f"step={self.step}", f"epoch={self.epoch}"]
		if self.train_loss_ema is not None:
			parts.append(f"loss_ema={self.train_loss_ema:.4f}")
		if self.metric:
			parts.append(f"{self.metric}={self.value:.4f}")
		if self.digit_accuracy is not None:
			parts.append(f"digit_accuracy={self.digit_accuracy:.4f}")
		if self.mean_abs_cell is not None:
			parts.append(f"mean|c|={self.mean_abs_cell:.4f}")
		parts.append(f"wall={self.wall_time:.1f}s")
		return f"<MetricsRecord {self.kind} " + ", ".join(parts) + ">"


def _written_before(row: dict, step: int, epoch: int) -> bool:
	# a checkpoint at step s follows the train row of step s; it follows the epoch's eval
	# row only once the epoch counter has moved on
	if not row.get("step"):
		return False
	row_step = int(row["step"])
	if row_step != step:
		return row_step < step
	return row["kind"] == "train" or int(row["epoch"]) < epoch


class MetricsWriter:
	"""Appends records to a CSV file with a fixed header row. Each record is flushed
	whole, so the file stays parseable after an abnormal exit.
	"""

	def __init__(self, path: str, resume_at: Optional[Tuple[int, int]] = None, history: Optional[str] = None):
		"""Opens the stream.

		Args:
			path (str): The CSV path
			resume_at (Optional[Tuple[int, int]], optional): Step and epoch of the checkpoint
			being resumed. Rows written after it was taken are dropped first. Defaults to None,
			which starts a fresh file.
			history (Optional[str], optional): Where the rows of the resumed run are read
			from when it wrote to another directory. Defaults to `path`.
		"""
		self.path = path
		self.last_step = -1
		kept = []
		history = history or path
		if resume_at is not None and os.path.isfile(history):
			with open(history, newline="", encoding="utf-8") as f:
				kept = [row for row in csv.DictReader(f) if _written_before(row, *resume_at)]
			if kept:
				self.last_step = int(kept[-1]["step"])
		self._file = open(path, "w", newline="", encoding="utf-8")
		self._writer = csv.DictWriter(self._file, fieldnames=FIELDS, lineterminator="\n")
		self._writer.writeheader()
		for row in kept:
			self._writer.writerow({name: row.get(name, "") for name in FIELDS})
		self._file.flush()

	def write(self, record: MetricsRecord):
		"""Appends one record.

		Raises:
			ValueError: If the step number goes backwards
		"""
		if record.step < self.last_step:
			raise ValueError("Metrics step {} precedes step {}".format(record.step, self.last_step))
		self.last_step = record.step
		self._writer.writerow(record.row())
		self._file.flush()

	def close(self):
		self._file.close()

	def __enter__(self):
		return self

	def __exit__(self, *exc):
		self.close()


def read_metrics(path: str) -> list:
	with open(path, newline="", encoding="utf-8") as f:
		return list(csv.DictReader(f))
