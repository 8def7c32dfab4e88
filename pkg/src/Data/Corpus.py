import logging
import math
from typing import Iterator, Optional, Tuple

import numpy as np

from ..MathCore import SeededRng
from .Alphabet import Alphabet, build_alphabet

logger = logging.getLogger(__name__)

TRAIN_FRACTION = 0.95


class Corpus:
	"""A byte-level text corpus as a sequence of symbol indices. The first 95% is the
	training region and the last 5% the test region.
	"""

	def __init__(self, indices: np.ndarray, alphabet: Alphabet, train_fraction: float = TRAIN_FRACTION):
		if not 0.0 < train_fraction < 1.0:
			raise ValueError("Train fraction {} is not in (0, 1)".format(train_fraction))
		self.indices = np.asarray(indices, dtype=np.int64)
		self.alphabet = alphabet
		self.boundary = int(len(self.indices) * train_fraction)

	def __repr__(self):
		return f"<Corpus symbols={len(self.indices)}, boundary={self.boundary}, alphabet={self.alphabet}>"

	@property
	def train(self) -> np.ndarray:
		return self.indices[:self.boundary]

	@property
	def test(self) -> np.ndarray:
		return self.indices[self.boundary:]

	@classmethod
	def from_bytes(cls, data: bytes, train_fraction: float = TRAIN_FRACTION):
		alphabet = build_alphabet(data)
		return cls(alphabet.indices(data), alphabet, train_fraction)

	@classmethod
	def from_file(cls, path: str, limit: int = 0, train_fraction: float = TRAIN_FRACTION):
		"""Reads raw bytes from a file. No decoding takes place; symbols are byte values.

		Args:
			path (str): The corpus file
			limit (int, optional): Only use the first `limit` bytes, 0 for all. Defaults to 0.
			train_fraction (float, optional): Defaults to 0.95.

		Raises:
			FileNotFoundError: If the file does not exist

		Returns:
			Corpus: The corpus
		"""
		with open(path, "rb") as f:
			data = f.read(limit) if limit > 0 else f.read()
		corpus = cls.from_bytes(data, train_fraction)
		logger.info("Loaded %s from %s", corpus, path)
		return corpus

	def batches_per_epoch(self, batch: int, length: int) -> int:
		"""Enough batches to cover the training region once at this sequence length."""
		return max(1, math.ceil(self.boundary / (batch * length)))

	def test_windows(self, length: int) -> Iterator[np.ndarray]:
		"""Consecutive windows of `length + 1` symbols covering the test region; the last one may be shorter."""
		test = self.test
		for start in range(0, len(test) - 1, length):
			yield test[start:start + length + 1]


def sample_text_batch(corpus: Corpus, batch: int, length: int, noise_sd: float, rng: SeededRng) -> Tuple[np.ndarray, np.ndarray]:
	"""Draws independent, uniformly positioned windows from the training region.

	Args:
		corpus (Corpus): The corpus
		batch (int): Number of windows
		length (int): Sequence length, at least 2
		noise_sd (float): Standard deviation of Gaussian noise added to the encoded inputs, 0 disables it
		rng (SeededRng): The stream

	Raises:
		ValueError: If the window does not fit in the training region

	Returns:
		Tuple[np.ndarray, np.ndarray]: Inputs of shape (length, batch, n) and the next-symbol
		targets of shape (length, batch)
	"""
	if length < 2:
		raise ValueError("Sequence length must be at least 2, got {}".format(length))
	# a window of length + 1 symbols ends at or before the boundary
	last_start = corpus.boundary - length - 1
	if last_start < 0:
		raise ValueError("Sequence length {} exceeds the training region of {} symbols".format(length, corpus.boundary))
	starts = rng.integers(0, last_start + 1, batch)
	windows = np.stack([corpus.indices[s:s + length + 1] for s in starts], axis=1)
	inputs = corpus.alphabet.encode(windows[:-1])
	if noise_sd > 0:
		inputs = inputs + rng.normal(inputs.shape, noise_sd)
	return inputs, windows[1:]
