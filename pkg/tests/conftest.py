import gzip
import struct

import numpy as np
import pytest

from src.Harness import ExperimentConfig


def idx_bytes(array: np.ndarray, magic: int) -> bytes:
	return struct.pack(">I", magic) + struct.pack(">" + "I" * array.ndim, *array.shape) + array.astype(np.uint8).tobytes()


def synthetic_digits(count: int, seed: int):
	"""Images whose single bright column sits at 2 + 2 * label, so the digits are learnable."""
	rng = np.random.default_rng(seed)
	labels = rng.integers(0, 10, count).astype(np.uint8)
	images = rng.integers(0, 40, (count, 28, 28)).astype(np.uint8)
	for image, label in zip(images, labels):
		image[4:24, 2 + 2 * label] = 255
	return images, labels


def write_mnist(directory, name: str, count: int, seed: int, compress: bool = False):
	images, labels = synthetic_digits(count, seed)
	paths = []
	for suffix, array, magic in (("images", images, 0x803), ("labels", labels, 0x801)):
		data = idx_bytes(array, magic)
		path = directory / "{}-{}.idx{}".format(name, suffix, ".gz" if compress else "")
		path.write_bytes(gzip.compress(data) if compress else data)
		paths.append(str(path))
	return paths


@pytest.fixture
def mnist_paths(tmp_path):
	train_images, train_labels = write_mnist(tmp_path, "train", 64, seed=1)
	test_images, test_labels = write_mnist(tmp_path, "test", 24, seed=2, compress=True)
	return {
		"mnist_train_images": train_images,
		"mnist_train_labels": train_labels,
		"mnist_test_images": test_images,
		"mnist_test_labels": test_labels,
	}


@pytest.fixture
def corpus_path(tmp_path):
	rng = np.random.default_rng(3)
	words = [b"the ", b"cat ", b"sat ", b"on ", b"a ", b"mat. "]
	text = b"".join(words[i] for i in rng.integers(0, len(words), 1200))
	path = tmp_path / "corpus.txt"
	path.write_bytes(text)
	return str(path)


@pytest.fixture
def digit_config(tmp_path, mnist_paths):
	return ExperimentConfig(
		task="digit", architecture="LSTWM-6-6", activation="log", digits=1, batch_size=4,
		epochs=2, steps_per_epoch=6, log_interval=2, checkpoint_interval=4, test_count=20,
		output_dir=str(tmp_path / "run"), **mnist_paths,
	)


@pytest.fixture
def text_config(tmp_path, corpus_path):
	return ExperimentConfig(
		task="text", architecture="LSTM-8", activation="tanh", corpus_path=corpus_path,
		batch_size=4, epochs=2, pretrain_length=20, sequence_length=40, eval_length=40,
		log_interval=5, checkpoint_interval=10, output_dir=str(tmp_path / "text-run"),
	)
