import math

import numpy as np


class Alphabet:
	"""The distinct byte values of a corpus, in ascending order.

	Symbols are encoded as scaled one-hot vectors whose single nonzero element is
	ln(n) + 1.0 rather than 1.0, n being the number of symbols.
	"""

	def __init__(self, symbols: bytes):
		"""Constructor not recommended to called directly, use `build_alphabet`

		Args:
			symbols (bytes): Distinct symbols in ascending order
		"""
		if not symbols:
			raise ValueError("An alphabet needs at least one symbol")
		if list(symbols) != sorted(set(symbols)):
			raise ValueError("Alphabet symbols must be distinct and ascending")
		self.symbols = bytes(symbols)
		self._lookup = np.full(256, -1, dtype=np.int64)
		self._lookup[list(self.symbols)] = np.arange(len(self.symbols))

	def __repr__(self):
		return f"<Alphabet n={self.n}, scale={self.scale:.4f}>"

	def __len__(self):
		return self.n

	@property
	def n(self) -> int:
		return len(self.symbols)

	@property
	def scale(self) -> float:
		return math.log(self.n) + 1.0

	def indices(self, data: bytes) -> np.ndarray:
		"""Maps bytes to symbol indices.

		Raises:
			ValueError: If a byte is not in the alphabet
		"""
		idx = self._lookup[np.frombuffer(bytes(data), dtype=np.uint8)]
		if np.any(idx < 0):
			missing = sorted(set(bytes(data)) - set(self.symbols))
			raise ValueError("Bytes {} are not in the alphabet".format(missing[:10]))
		return idx

	def encode(self, indices: np.ndarray) -> np.ndarray:
		"""Scaled one-hot encoding of an index array of any shape; adds a trailing axis of size n."""
		indices = np.asarray(indices)
		if np.any(indices < 0) or np.any(indices >= self.n):
			raise ValueError("Symbol index out of range for an alphabet of {} symbols".format(self.n))
		out = np.zeros(indices.shape + (self.n,))
		np.put_along_axis(out, indices[..., None], self.scale, axis=-1)
		return out


def build_alphabet(data: bytes) -> Alphabet:
	"""Collects the distinct bytes of `data`.

	Raises:
		ValueError: On empty input
	"""
	if not data:
		raise ValueError("Cannot build an alphabet from empty input")
	return Alphabet(bytes(np.unique(np.frombuffer(bytes(data), dtype=np.uint8)).tolist()))


def encode_symbol(alphabet: Alphabet, idx: int) -> np.ndarray:
	"""The length-n vector that is zero except for ln(n) + 1.0 at `idx`.

	Raises:
		ValueError: If `idx` is out of range
	"""
	if not 0 <= idx < alphabet.n:
		raise ValueError("Symbol index {} out of range for an alphabet of {} symbols".format(idx, alphabet.n))
	return alphabet.encode(np.asarray(idx))
