"""
MIT License

Copyright (c) 2021 Seniru Pasan

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

import itertools
import logging
import math
import os
import time
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from ..Data import Corpus, MnistSet, combo_test_set, make_combo_batch, sample_text_batch
from ..Data.ComboTask import ComboSequence, IMAGE_SIDE, sum_digit_count
from ..Gradients import bptt
from ..MathCore import SeededRng
from ..Network import Network, init_params, stack_forward
from ..Optim import AdamState, adam_step, bpc, softmax_xent
from .Checkpoint import Checkpoint, CheckpointError
from .Config import ExperimentConfig
from .Metrics import MetricsRecord, MetricsWriter

logger = logging.getLogger(__name__)

DIGIT_CLASSES = 10
EVAL_BATCH = 500


class TrainingDivergedError(RuntimeError):
	"""Raised when the loss or a gradient stops being finite. The last good state is
	saved to `checkpoint_path` first.
	"""

	def __init__(self, step: int, checkpoint_path: str, detail: str):
		super().__init__("training diverged at step {}: {} (last good checkpoint: {})".format(step, detail, checkpoint_path))
		self.step = step
		self.checkpoint_path = checkpoint_path


def evaluate_text(net: Network, corpus: Corpus, length: int, batch: int = 32) -> Tuple[float, float, int]:
	"""Bits per character over the held-out region. Consecutive windows are evaluated from
	zero states, batched by window length in a fixed order.

	Returns:
		Tuple[float, float, int]: BPC, total nats and the number of predicted symbols
	"""
	windows = list(corpus.test_windows(length))
	if not windows:
		raise ValueError("The test region of {} is too short to evaluate".format(corpus))
	total, count = 0.0, 0
	groups = {}
	for window in windows:
		groups.setdefault(len(window), []).append(window)
	for size in sorted(groups, reverse=True):
		group = groups[size]
		for start in range(0, len(group), batch):
			chunk = np.stack(group[start:start + batch], axis=1)
			logits, _, _ = stack_forward(net, corpus.alphabet.encode(chunk[:-1]), keep_caches=False)
			for t in range(len(logits)):
				losses, _ = softmax_xent(logits[t], chunk[t + 1])
				total += float(losses.sum())
			count += chunk[1:].size
	return bpc(total, count), total, count


def evaluate_combo(net: Network, sequences: Iterable[ComboSequence], batch: int = EVAL_BATCH) -> Tuple[int, float]:
	"""Scores combo sequences. A sequence counts as correct only when every digit of its
	sum is predicted correctly.

	Returns:
		Tuple[int, float]: The number of fully correct sums and the per-digit accuracy
	"""
	correct, digits_right, digits = 0, 0, 0
	sequences = iter(sequences)
	while True:
		chunk = list(itertools.islice(sequences, batch))
		if not chunk:
			break
		inputs = np.stack([s.columns for s in chunk], axis=1)
		p = sum_digit_count(len(chunk[0].labels))
		logits, _, _ = stack_forward(net, inputs, keep_caches=False)
		predicted = logits[-p:].argmax(axis=-1)
		answers = np.stack([s.answer for s in chunk], axis=1)
		hits = predicted == answers
		correct += int(hits.all(axis=0).sum())
		digits_right += int(hits.sum())
		digits += hits.size
	return correct, digits_right / max(digits, 1)


class Trainer:
	"""Runs one experiment: owns the network, the optimizer, the data stream and the
	output directory (`config.cfg`, `metrics.csv`, `checkpoint.ckpt`).
	"""

	def __init__(self, config: ExperimentConfig, checkpoint: Optional[Checkpoint] = None):
		"""Prepares a fresh run, or continues the run a checkpoint was taken from.

		Args:
			config (ExperimentConfig): The experiment
			checkpoint (Optional[Checkpoint], optional): Resume from here. Defaults to None.

		Raises:
			CheckpointError: If the checkpoint was written under a different config
		"""
		if checkpoint is not None and checkpoint.config.digest != config.digest:
			raise CheckpointError("checkpoint config digest {} does not match {}".format(
				checkpoint.config.digest[:12], config.digest[:12]))
		self.config = config
		self.corpus: Optional[Corpus] = None
		self.mnist_train: Optional[MnistSet] = None
		self.mnist_test: Optional[MnistSet] = None
		self._load_data()

		self.data_rng = SeededRng(config.seed + 1)
		if checkpoint is None:
			self.net = init_params(config.network_spec(self.input_width, self.output_width), SeededRng(config.seed))
			self.adam = AdamState(config.alpha, config.beta1, config.beta2, config.adam_epsilon)
			self.step = self.epoch = self.epoch_step = 0
			self.ema: Optional[float] = None
			self.epoch_cell_total = 0.0
		else:
			if (checkpoint.input_width, checkpoint.output_width) != (self.input_width, self.output_width):
				raise CheckpointError("checkpoint shapes {}x{} do not match the data's {}x{}".format(
					checkpoint.input_width, checkpoint.output_width, self.input_width, self.output_width))
			self.net = checkpoint.network()
			self.adam = checkpoint.adam
			self.step, self.epoch, self.epoch_step = checkpoint.step, checkpoint.epoch, checkpoint.epoch_step
			self.ema = checkpoint.ema
			self.epoch_cell_total = checkpoint.epoch_cell_total
			self.data_rng.set_state(checkpoint.rng_state)
			logger.info("Resuming from %s", checkpoint)
		self._resume_at = None if checkpoint is None else (checkpoint.step, checkpoint.epoch)
		self._history = None if checkpoint is None else os.path.join(checkpoint.config.output_dir, "metrics.csv")

	def __repr__(self):
		return f"<Trainer task={self.config.task}, net={self.net}, step={self.step}, epoch={self.epoch}>"

	@property
	def input_width(self) -> int:
		return self.corpus.alphabet.n if self.corpus else IMAGE_SIDE

	@property
	def output_width(self) -> int:
		return self.corpus.alphabet.n if self.corpus else DIGIT_CLASSES

	@property
	def checkpoint_path(self) -> str:
		return os.path.join(self.config.output_dir, "checkpoint.ckpt")

	@property
	def metrics_path(self) -> str:
		return os.path.join(self.config.output_dir, "metrics.csv")

	def _load_data(self):
		cfg = self.config
		if cfg.task == "text":
			self.corpus = Corpus.from_file(cfg.corpus_path, cfg.corpus_limit)
			return
		self.mnist_train = MnistSet.from_files(cfg.mnist_train_images, cfg.mnist_train_labels)
		self.mnist_test = MnistSet.from_files(cfg.mnist_test_images, cfg.mnist_test_labels)

	def _combo_options(self) -> dict:
		cfg = self.config
		return {"noise_scale": cfg.digit_noise, "smooth": cfg.digit_blur, "running_sum": cfg.running_sum}

	def steps_in_epoch(self, epoch: int) -> int:
		if self.corpus is None:
			return self.config.steps_per_epoch
		return self.corpus.batches_per_epoch(self.config.batch_size, self._text_length(epoch))

	def _text_length(self, epoch: int) -> int:
		return self.config.pretrain_length if epoch == 0 else self.config.sequence_length

	def _batch(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
		cfg = self.config
		if self.corpus is not None:
			# the first epoch is the short, noisy pre-train epoch
			noise = cfg.pretrain_noise if self.epoch == 0 else 0.0
			inputs, targets = sample_text_batch(self.corpus, cfg.batch_size, self._text_length(self.epoch), noise, self.data_rng)
			return inputs, targets, np.ones(len(targets))
		inputs, targets, mask, _ = make_combo_batch(self.mnist_train, cfg.digit_count, cfg.batch_size, self.data_rng, **self._combo_options())
		return inputs, targets, mask

	def snapshot(self) -> Checkpoint:
		return Checkpoint(
			self.config, self.input_width, self.output_width,
			{name: tensor.copy() for name, tensor in self.net.named_tensors().items()},
			AdamState(self.adam.alpha, self.adam.beta1, self.adam.beta2, self.adam.epsilon, self.adam.t,
				{k: v.copy() for k, v in self.adam.m.items()}, {k: v.copy() for k, v in self.adam.v.items()}),
			self.step, self.epoch, self.epoch_step, self.ema, self.data_rng.get_state(),
			self.corpus.alphabet.symbols if self.corpus else None, self.epoch_cell_total,
		)

	def evaluate(self) -> MetricsRecord:
		"""Scores the current parameters on the test data without changing them."""
		record = MetricsRecord(self.step, self.epoch, kind="eval")
		if self.corpus is not None:
			record.metric = "bpc"
			record.value, _, _ = evaluate_text(self.net, self.corpus, self.config.eval_length or self.config.sequence_length, self.config.batch_size)
		else:
			cfg = self.config
			test_set = combo_test_set(self.mnist_test, cfg.digit_count, cfg.test_count, cfg.test_seed, **self._combo_options())
			correct, record.digit_accuracy = evaluate_combo(self.net, test_set)
			record.metric, record.value = "correct", float(correct)
		return record

	def _train_step(self) -> MetricsRecord:
		inputs, targets, mask = self._batch()
		try:
			loss, grads = bptt(self.net, inputs, targets, mask, self.config.reg)
			if not math.isfinite(loss):
				raise FloatingPointError("loss is {}".format(loss))
			adam_step(self.adam, self.net.named_tensors(), grads.tensors)
		except FloatingPointError as e:
			# parameters are untouched when the step is rejected
			self.snapshot().save(self.checkpoint_path)
			logger.error("Diverged at step %d: %s", self.step + 1, e)
			raise TrainingDivergedError(self.step + 1, self.checkpoint_path, str(e)) from None

		parts = grads.breakdown
		train_loss = parts.task_nats / parts.predictions if parts.predictions else 0.0
		if self.corpus is not None:
			train_loss /= math.log(2)
		decay = self.config.ema_decay
		self.ema = train_loss if self.ema is None else decay * self.ema + (1.0 - decay) * train_loss
		self.step += 1
		self.epoch_step += 1
		self.epoch_cell_total += parts.mean_abs_cell
		return MetricsRecord(
			self.step, self.epoch, "train", train_loss, self.ema,
			metric="bpc" if self.corpus is not None else "xent", value=train_loss,
			mean_abs_cell=parts.mean_abs_cell, cell_penalty=parts.cell_penalty, weight_penalty=parts.weight_penalty,
		)

	def train(self, stop_after: Optional[int] = None) -> Checkpoint:
		"""Trains until the configured number of epochs is done.

		Text runs spend the first epoch on short, noisy sequences and the remaining epochs
		on long, clean ones. Every epoch ends with a test-set evaluation.

		Args:
			stop_after (Optional[int], optional): Stop once this many steps are done, as if
			interrupted. A checkpoint is written first. Defaults to None.

		Raises:
			TrainingDivergedError: If the loss stops being finite

		Returns:
			Checkpoint: The final state
		"""
		cfg = self.config
		os.makedirs(cfg.output_dir, exist_ok=True)
		cfg.save(os.path.join(cfg.output_dir, "config.cfg"))
		started = time.monotonic()
		logger.info("Training %s (%d parameters) on the %s task", self.net.spec.name, self.net.parameter_count, cfg.task)

		with MetricsWriter(self.metrics_path, self._resume_at, self._history) as metrics:
			while self.epoch < cfg.epochs:
				steps = self.steps_in_epoch(self.epoch)
				while self.epoch_step < steps:
					if stop_after is not None and self.step >= stop_after:
						self.snapshot().save(self.checkpoint_path)
						return self.snapshot()
					record = self._train_step()
					if self.step % cfg.log_interval == 0:
						record.wall_time = time.monotonic() - started
						metrics.write(record)
						logger.info("%s", record)
					if self.step % cfg.checkpoint_interval == 0:
						self.snapshot().save(self.checkpoint_path)

				record = self.evaluate()
				record.mean_abs_cell = self.epoch_cell_total / max(self.epoch_step, 1)
				record.wall_time = time.monotonic() - started
				metrics.write(record)
				logger.info("Epoch %d done: %s", self.epoch + 1, record)
				self.epoch += 1
				self.epoch_step = 0
				self.epoch_cell_total = 0.0
				self.snapshot().save(self.checkpoint_path)
		return self.snapshot()


def train_text(cfg: ExperimentConfig) -> Checkpoint:
	if cfg.task != "text":
		raise ValueError("train_text needs a text config, got task {}".format(cfg.task))
	return Trainer(cfg).train()


def train_combo(cfg: ExperimentConfig) -> Checkpoint:
	if cfg.task not in ("combo", "digit"):
		raise ValueError("train_combo needs a combo or digit config, got task {}".format(cfg.task))
	return Trainer(cfg).train()


def evaluate(checkpoint: Checkpoint, dataset: Union[Corpus, MnistSet, None] = None) -> MetricsRecord:
	"""Scores a checkpoint without mutating it.

	Args:
		checkpoint (Checkpoint): The checkpoint
		dataset (Union[Corpus, MnistSet, None], optional): A text corpus, or the MNIST test
		images to build the combo test set from. Defaults to the data named in the checkpoint's config.

	Raises:
		CheckpointError: If the dataset's shapes do not match the checkpoint's

	Returns:
		MetricsRecord: BPC on the held-out text, or the number of correct sums
	"""
	cfg = checkpoint.config
	net = checkpoint.network()
	record = MetricsRecord(checkpoint.step, checkpoint.epoch, kind="eval")
	if cfg.task == "text":
		corpus = dataset if dataset is not None else Corpus.from_file(cfg.corpus_path, cfg.corpus_limit)
		if not isinstance(corpus, Corpus):
			raise CheckpointError("a text checkpoint needs a corpus, got {}".format(type(corpus).__name__))
		if corpus.alphabet.n != checkpoint.output_width or (checkpoint.alphabet and corpus.alphabet.symbols != checkpoint.alphabet):
			raise CheckpointError("corpus alphabet of {} symbols does not match the checkpoint's vocabulary of {}".format(
				corpus.alphabet.n, checkpoint.output_width))
		record.metric = "bpc"
		record.value, _, _ = evaluate_text(net, corpus, cfg.eval_length or cfg.sequence_length, cfg.batch_size)
		return record

	mnist = dataset if dataset is not None else MnistSet.from_files(cfg.mnist_test_images, cfg.mnist_test_labels)
	if not isinstance(mnist, MnistSet):
		raise CheckpointError("a {} checkpoint needs MNIST images, got {}".format(cfg.task, type(mnist).__name__))
	if mnist.images.shape[1:] != (IMAGE_SIDE, IMAGE_SIDE) or (checkpoint.input_width, checkpoint.output_width) != (IMAGE_SIDE, DIGIT_CLASSES):
		raise CheckpointError("images of shape {} do not match a checkpoint with {} inputs and {} outputs".format(
			mnist.images.shape[1:], checkpoint.input_width, checkpoint.output_width))
	options = {"noise_scale": cfg.digit_noise, "smooth": cfg.digit_blur, "running_sum": cfg.running_sum}
	correct, record.digit_accuracy = evaluate_combo(net, combo_test_set(mnist, cfg.digit_count, cfg.test_count, cfg.test_seed, **options))
	record.metric, record.value = "correct", float(correct)
	return record
