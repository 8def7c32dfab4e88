import importlib
import math
import os

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.Data import Corpus, MnistSet
from src.Harness import (
	Checkpoint, CheckpointError, ConfigError, ExperimentConfig, MetricsRecord, MetricsWriter, Trainer,
	TrainingDivergedError, evaluate, evaluate_text, read_metrics
)
from src.Harness.Checkpoint import MAGIC
from src.MathCore import SeededRng
from src.Network import NetworkSpec, init_params

# the package re-exports the Trainer class under the module's name
trainer_module = importlib.import_module("src.Harness.Trainer")


def read_bytes(path) -> bytes:
	with open(path, "rb") as f:
		return f.read()


class TestConfig:

	def test_defaults(self, mnist_paths):
		cfg = ExperimentConfig(**mnist_paths)
		assert cfg.task == "combo" and cfg.digits == 4
		assert cfg.alpha == 0.001 and cfg.beta1 == 0.9 and cfg.beta2 == 0.999
		assert cfg.reg.weight_eta == cfg.eta == 1e-3
		assert cfg.test_count == 10000 and cfg.batch_size == 32

	def test_file_round_trip(self, tmp_path, digit_config):
		path = str(tmp_path / "echo.cfg")
		digit_config.save(path)
		loaded = ExperimentConfig.from_file(path)
		assert loaded == digit_config
		assert loaded.digest == digit_config.digest

	def test_hand_written_file(self, tmp_path, mnist_paths):
		path = tmp_path / "run.cfg"
		lines = ["# a comment", "task = digit", "digits = 1", "architecture = LSTM-32-33", "activation = tanh", "digit_blur = false"]
		lines += ["{} = {}".format(k, v) for k, v in mnist_paths.items()]
		path.write_text("\n".join(lines) + "\n")
		cfg = ExperimentConfig.from_file(str(path))
		assert cfg.digit_blur is False
		assert cfg.network_spec(28, 10).name == "LSTM-32-33-tanh"

	def test_unknown_keys_are_rejected(self, tmp_path):
		path = tmp_path / "bad.cfg"
		path.write_text("task = text\ncorpus_path = x\nlearning_rate = 0.1\n")
		with pytest.raises(ConfigError, match="learning_rate"):
			ExperimentConfig.from_file(str(path))

	def test_sections_are_rejected(self, tmp_path):
		path = tmp_path / "bad.cfg"
		path.write_text("[train]\ntask = text\n")
		with pytest.raises(ConfigError, match="sections"):
			ExperimentConfig.from_file(str(path))

	def test_missing_file(self, tmp_path):
		with pytest.raises(FileNotFoundError, match="file not found"):
			ExperimentConfig.from_file(str(tmp_path / "nope.cfg"))

	@pytest.mark.parametrize("changes,key", [
		({"batch_size": 0}, "batch_size"),
		({"beta2": 1.0}, "beta2"),
		({"eta": -1e-3}, "eta"),
		({"activation": "relu"}, "activation"),
		({"architecture": "GRU-32"}, "architecture"),
		({"task": "digit", "digits": 4}, "digits"),
	])
	def test_invalid_values_name_the_key(self, digit_config, changes, key):
		with pytest.raises(ConfigError, match=key):
			digit_config.evolve(**changes)

	def test_text_task_needs_a_corpus(self):
		with pytest.raises(ConfigError, match="corpus_path"):
			ExperimentConfig(task="text")

	def test_digest_changes_with_the_seed(self, digit_config):
		assert digit_config.evolve(seed=7).digest != digit_config.digest

	def test_digest_ignores_the_output_directory(self, digit_config):
		assert digit_config.evolve(output_dir="elsewhere").digest == digit_config.digest


class TestMetrics:

	def test_rows_and_header(self, tmp_path):
		path = str(tmp_path / "m.csv")
		with MetricsWriter(path) as writer:
			writer.write(MetricsRecord(1, 0, "train", 0.5, 0.5, "xent", 0.5, wall_time=3.0))
			writer.write(MetricsRecord(2, 0, "eval", metric="correct", value=7.0, digit_accuracy=0.7))
		rows = read_metrics(path)
		assert [r["step"] for r in rows] == ["1", "2"]
		assert rows[1]["digit_accuracy"] == "0.7"
		assert "wall_time" not in rows[0]

	def test_steps_may_not_go_backwards(self, tmp_path):
		with MetricsWriter(str(tmp_path / "m.csv")) as writer:
			writer.write(MetricsRecord(5, 0))
			with pytest.raises(ValueError):
				writer.write(MetricsRecord(4, 0))

	def test_resume_drops_rows_written_after_the_checkpoint(self, tmp_path):
		path = str(tmp_path / "m.csv")
		with MetricsWriter(path) as writer:
			writer.write(MetricsRecord(4, 0, "train"))
			writer.write(MetricsRecord(6, 0, "train"))
			writer.write(MetricsRecord(6, 0, "eval"))
			writer.write(MetricsRecord(8, 1, "train"))
		with MetricsWriter(path, resume_at=(6, 0)):
			pass
		assert [(r["step"], r["kind"]) for r in read_metrics(path)] == [("4", "train"), ("6", "train")]
		with MetricsWriter(path, resume_at=(6, 1)):
			pass
		assert len(read_metrics(path)) == 2


class TestCheckpoint:

	def make(self, digit_config) -> Checkpoint:
		trainer = Trainer(digit_config)
		trainer._train_step()
		return trainer.snapshot()

	def test_round_trip(self, tmp_path, digit_config):
		ckpt = self.make(digit_config)
		path = str(tmp_path / "a.ckpt")
		ckpt.save(path)
		loaded = Checkpoint.load(path)
		assert loaded.config == ckpt.config
		assert (loaded.step, loaded.epoch, loaded.epoch_step, loaded.ema) == (1, 0, 1, ckpt.ema)
		assert loaded.rng_state == ckpt.rng_state
		assert loaded.adam.t == 1
		for name, tensor in ckpt.tensors.items():
			assert_array_equal(loaded.tensors[name], tensor)
			assert_array_equal(loaded.adam.m[name], ckpt.adam.m[name])
			assert_array_equal(loaded.adam.v[name], ckpt.adam.v[name])
		second = str(tmp_path / "b.ckpt")
		loaded.save(second)
		assert read_bytes(second) == read_bytes(path)

	def test_header_layout(self, tmp_path, digit_config):
		path = str(tmp_path / "a.ckpt")
		self.make(digit_config).save(path)
		data = read_bytes(path)
		assert data.startswith(MAGIC)
		assert int.from_bytes(data[8:12], "little") == 1

	def test_rejects_foreign_and_truncated_files(self, tmp_path, digit_config):
		path = tmp_path / "a.ckpt"
		self.make(digit_config).save(str(path))
		data = path.read_bytes()
		path.write_bytes(data[:-8])
		with pytest.raises(CheckpointError, match="truncated"):
			Checkpoint.load(str(path))
		path.write_bytes(b"NOTACKPT" + data[8:])
		with pytest.raises(CheckpointError):
			Checkpoint.load(str(path))
		path.write_bytes(data[:8] + (2).to_bytes(4, "little") + data[12:])
		with pytest.raises(CheckpointError, match="version"):
			Checkpoint.load(str(path))
		with pytest.raises(FileNotFoundError, match="file not found"):
			Checkpoint.load(str(tmp_path / "missing.ckpt"))

	def test_metadata(self, digit_config):
		meta = self.make(digit_config).metadata()
		assert meta["architecture"] == "LSTWM-6-6-log"
		assert meta["step"] == 1 and meta["inputs"] == 28 and meta["outputs"] == 10
		assert meta["config_digest"] == digit_config.digest


class TestTrainer:

	def test_runs_write_config_metrics_and_checkpoint(self, digit_config):
		final = Trainer(digit_config).train()
		assert (final.step, final.epoch) == (12, 2)
		out = digit_config.output_dir
		assert ExperimentConfig.from_file(os.path.join(out, "config.cfg")) == digit_config
		rows = read_metrics(os.path.join(out, "metrics.csv"))
		evals = [r for r in rows if r["kind"] == "eval"]
		assert [r["step"] for r in evals] == ["6", "12"]
		for row in evals:
			assert 0 <= float(row["value"]) <= digit_config.test_count
			assert 0.0 <= float(row["digit_accuracy"]) <= 1.0
			assert math.isfinite(float(row["mean_abs_cell"]))
		assert Checkpoint.load(os.path.join(out, "checkpoint.ckpt")).step == 12

	def test_same_config_gives_identical_metrics(self, tmp_path, digit_config):
		a = digit_config.evolve(output_dir=str(tmp_path / "a"))
		b = digit_config.evolve(output_dir=str(tmp_path / "b"))
		Trainer(a).train()
		Trainer(b).train()
		assert read_bytes(tmp_path / "a" / "metrics.csv") == read_bytes(tmp_path / "b" / "metrics.csv")

	@pytest.mark.parametrize("stop_after", [3, 4, 6, 9])
	def test_resume_matches_an_uninterrupted_run(self, tmp_path, digit_config, stop_after):
		straight = digit_config.evolve(output_dir=str(tmp_path / "straight"))
		split = digit_config.evolve(output_dir=str(tmp_path / "split"))
		expected = Trainer(straight).train()

		Trainer(split).train(stop_after=stop_after)
		ckpt = Checkpoint.load(os.path.join(split.output_dir, "checkpoint.ckpt"))
		assert ckpt.step == stop_after
		final = Trainer(split, ckpt).train()

		assert read_bytes(tmp_path / "straight" / "metrics.csv") == read_bytes(tmp_path / "split" / "metrics.csv")
		for name, tensor in expected.tensors.items():
			assert_array_equal(final.tensors[name], tensor)

	def test_resume_into_another_directory_keeps_the_history(self, tmp_path, digit_config):
		straight = digit_config.evolve(output_dir=str(tmp_path / "straight"))
		first = digit_config.evolve(output_dir=str(tmp_path / "first"))
		second = digit_config.evolve(output_dir=str(tmp_path / "second"))
		Trainer(straight).train()
		Trainer(first).train(stop_after=4)
		ckpt = Checkpoint.load(os.path.join(first.output_dir, "checkpoint.ckpt"))
		Trainer(second, ckpt).train()
		assert read_bytes(tmp_path / "second" / "metrics.csv") == read_bytes(tmp_path / "straight" / "metrics.csv")

	def test_resume_rejects_a_different_config(self, digit_config):
		ckpt = Trainer(digit_config).snapshot()
		with pytest.raises(CheckpointError, match="digest"):
			Trainer(digit_config.evolve(seed=3), ckpt)

	def test_divergence_saves_the_last_good_state(self, digit_config, monkeypatch):
		trainer = Trainer(digit_config)
		trainer._train_step()
		monkeypatch.setattr(trainer_module, "bptt", lambda *args, **kwargs: (float("nan"), None))
		os.makedirs(digit_config.output_dir, exist_ok=True)
		with pytest.raises(TrainingDivergedError) as info:
			trainer._train_step()
		assert info.value.step == 2
		assert Checkpoint.load(info.value.checkpoint_path).step == 1

	def test_text_run_schedule(self, text_config):
		trainer = Trainer(text_config)
		corpus = trainer.corpus
		assert trainer.steps_in_epoch(0) == math.ceil(corpus.boundary / (4 * 20))
		assert trainer.steps_in_epoch(1) == math.ceil(corpus.boundary / (4 * 40))
		final = trainer.train()
		rows = [r for r in read_metrics(trainer.metrics_path) if r["kind"] == "eval"]
		assert len(rows) == 2 and all(r["metric"] == "bpc" for r in rows)
		assert final.alphabet == corpus.alphabet.symbols


class TestEvaluate:

	def test_untrained_text_model_is_near_uniform(self, corpus_path):
		corpus = Corpus.from_file(corpus_path)
		n = corpus.alphabet.n
		net = init_params(NetworkSpec.from_name("LSTWM-16-log", n, n), SeededRng(0))
		value, nats, count = evaluate_text(net, corpus, 40)
		assert count == len(corpus.test) - 1
		assert abs(value - math.log2(n)) < 0.1

	def test_one_symbol_corpus_costs_nothing(self):
		corpus = Corpus.from_bytes(b"a" * 400)
		net = init_params(NetworkSpec.from_name("LSTM-4", 1, 1), SeededRng(0))
		assert evaluate_text(net, corpus, 10)[0] == 0.0

	def test_is_deterministic_and_survives_a_round_trip(self, tmp_path, digit_config):
		trainer = Trainer(digit_config)
		for _ in range(3):
			trainer._train_step()
		ckpt = trainer.snapshot()
		first, second = evaluate(ckpt), evaluate(ckpt)
		assert (first.value, first.digit_accuracy) == (second.value, second.digit_accuracy)
		before = {k: v.copy() for k, v in ckpt.tensors.items()}
		path = str(tmp_path / "c.ckpt")
		ckpt.save(path)
		again = evaluate(Checkpoint.load(path))
		assert (again.value, again.digit_accuracy) == (first.value, first.digit_accuracy)
		for name, tensor in ckpt.tensors.items():
			assert_array_equal(tensor, before[name])

	def test_mismatched_images_name_both_shapes(self, digit_config):
		ckpt = Trainer(digit_config).snapshot()
		small = MnistSet(np.zeros((3, 14, 14)), np.zeros(3, dtype=np.int64))
		with pytest.raises(CheckpointError, match=r"\(14, 14\).*28"):
			evaluate(ckpt, small)

	def test_mismatched_vocabulary(self, text_config):
		ckpt = Trainer(text_config).snapshot()
		with pytest.raises(CheckpointError, match="symbols"):
			evaluate(ckpt, Corpus.from_bytes(b"xyz" * 100))
