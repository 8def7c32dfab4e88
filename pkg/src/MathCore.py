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

from enum import Enum
from typing import Union

import numpy as np

DTYPE = np.float64


class ActivationKind(Enum):
	"""An enum class containing the activation functions a layer can use.
	"""
	TANH	= "tanh"
	LOG		= "log"
	SIGMOID	= "sigmoid"


def sigmoid(x: np.ndarray) -> np.ndarray:
	"""The logistic function 1 / (1 + e^-x), evaluated without overflow.

	Args:
		x (np.ndarray): Pre-activations

	Returns:
		np.ndarray: Values in (0, 1)
	"""
	x = np.asarray(x, dtype=DTYPE)
	# exp of a non-positive number only
	e = np.exp(-np.abs(x))
	return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def log_act(x: np.ndarray) -> np.ndarray:
	"""The logarithm-based squashing function: -ln(1 - x) for x < 0 and ln(1 + x) otherwise.
	It is odd, strictly increasing and unbounded.

	Args:
		x (np.ndarray): Pre-activations

	Returns:
		np.ndarray: sign(x) * ln(1 + |x|)
	"""
	x = np.asarray(x, dtype=DTYPE)
	return np.sign(x) * np.log1p(np.abs(x))


def activate(kind: ActivationKind, x: np.ndarray) -> np.ndarray:
	"""Applies the activation function element-wise.

	Args:
		kind (ActivationKind): The activation function
		x (np.ndarray): Pre-activations

	Returns:
		np.ndarray: Activations, same shape as `x`
	"""
	if kind == ActivationKind.LOG:
		return log_act(x)
	if kind == ActivationKind.TANH:
		return np.tanh(np.asarray(x, dtype=DTYPE))
	if kind == ActivationKind.SIGMOID:
		return sigmoid(x)
	raise ValueError("{} is not a supported activation".format(kind))


def activate_deriv(kind: ActivationKind, x: np.ndarray) -> np.ndarray:
	"""Analytic derivative of `activate` with respect to its input, evaluated at `x`.
	Strictly positive for every kind.

	Args:
		kind (ActivationKind): The activation function
		x (np.ndarray): Pre-activations (not activations)

	Returns:
		np.ndarray: f'(x)
	"""
	x = np.asarray(x, dtype=DTYPE)
	if kind == ActivationKind.LOG:
		return 1.0 / (1.0 + np.abs(x))
	if kind == ActivationKind.TANH:
		return 1.0 - np.tanh(x) ** 2
	if kind == ActivationKind.SIGMOID:
		s = sigmoid(x)
		return s * (1.0 - s)
	raise ValueError("{} is not a supported activation".format(kind))


def roll(v: np.ndarray, k: int) -> np.ndarray:
	"""Circular shift along the last axis. roll([1, 2, 3], 1) == [3, 1, 2] and
	roll([1, 2, 3], -1) == [2, 3, 1].

	Args:
		v (np.ndarray): Vector, or a batch of vectors along the leading axes
		k (int): Shift, positive to the right

	Raises:
		ValueError: If |k| is not smaller than the vector length

	Returns:
		np.ndarray: The shifted copy
	"""
	n = np.shape(v)[-1]
	if abs(k) >= n:
		raise ValueError("Cannot roll a length-{} vector by {}".format(n, k))
	return np.roll(v, k, axis=-1)


def neighbour_shift(width: int, k: int) -> int:
	"""The shift to pass to `roll` for a neighbour access on a layer of `width` cells.
	A single cell is its own neighbour.
	"""
	return k if width > 1 else 0


def affine(W: np.ndarray, b: np.ndarray, x: np.ndarray) -> np.ndarray:
	"""Computes W.x + b for a vector or for each row of a batch.

	Args:
		W (np.ndarray): Weights, shape (rows, cols)
		b (np.ndarray): Bias, shape (rows,)
		x (np.ndarray): Input, shape (cols,) or (batch, cols)

	Raises:
		ValueError: On any dimension mismatch. The message names both shapes.

	Returns:
		np.ndarray: Shape (rows,) or (batch, rows)
	"""
	if W.ndim != 2 or np.shape(x)[-1] != W.shape[1]:
		raise ValueError("Cannot apply a weight matrix of shape {} to an input of shape {}".format(
			W.shape, np.shape(x)))
	if np.shape(b) != (W.shape[0],):
		raise ValueError("Bias of shape {} does not match a weight matrix of shape {}".format(
			np.shape(b), W.shape))
	return x @ W.T + b


class SeededRng:
	"""A reproducible random stream.

	Draws come from numpy's PCG64 bit generator, which produces the same stream
	on every platform for a given seed. Gaussian draws use `Generator.standard_normal`
	(the ziggurat transform). A single instance must only be used by one owner.
	"""

	def __init__(self, seed: int):
		"""Creates the stream.

		Args:
			seed (int): Non-negative 64-bit seed
		"""
		if seed < 0 or seed >= 2 ** 64:
			raise ValueError("Seed {} is not a 64-bit unsigned integer".format(seed))
		self.seed = seed
		self._generator = np.random.Generator(np.random.PCG64(seed))

	def __repr__(self):
		return f"<SeededRng seed={self.seed}>"

	def uniform(self, low: float, high: float, shape: Union[int, tuple]) -> np.ndarray:
		return self._generator.uniform(low, high, shape)

	def normal(self, shape: Union[int, tuple], scale: float = 1.0) -> np.ndarray:
		return self._generator.standard_normal(shape) * scale

	def integers(self, low: int, high: int, shape: Union[int, tuple, None] = None):
		"""Uniform integers in [low, high)."""
		return self._generator.integers(low, high, shape)

	def permutation(self, n: int) -> np.ndarray:
		return self._generator.permutation(n)

	def get_state(self) -> dict:
		"""Exports the generator state so a checkpoint can continue the same stream.

		Returns:
			dict: The bit generator state, 128-bit integers rendered as hex strings
		"""
		state = self._generator.bit_generator.state
		return {
			"seed": self.seed,
			"state": format(state["state"]["state"], "x"),
			"inc": format(state["state"]["inc"], "x"),
			"has_uint32": state["has_uint32"],
			"uinteger": state["uinteger"],
		}

	def set_state(self, exported: dict):
		"""Restores a state previously produced by `get_state`.

		Args:
			exported (dict): The exported state
		"""
		bit_generator = self._generator.bit_generator
		bit_generator.state = {
			"bit_generator": "PCG64",
			"state": {"state": int(exported["state"], 16), "inc": int(exported["inc"], 16)},
			"has_uint32": int(exported["has_uint32"]),
			"uinteger": int(exported["uinteger"]),
		}
		self.seed = int(exported["seed"])
