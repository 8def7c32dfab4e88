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

import math
from typing import Dict, Optional, Tuple, Union

import attr
import numpy as np


def _non_negative(instance, attribute, value):
	if value is not None and not value >= 0:
		raise ValueError("{} must be non-negative, got {}".format(attribute.name, value))


@attr.s(auto_attribs=True, frozen=True)
class RegConfig:
	"""Regularization coefficients. `eta` scales the memory-cell magnitude penalty and
	`eta_w` the weight penalty; `eta_w` follows `eta` when left unset.
	"""
	eta: float = attr.ib(default=1e-3, validator=_non_negative)
	eta_w: Optional[float] = attr.ib(default=None, validator=_non_negative)

	@property
	def weight_eta(self) -> float:
		return self.eta if self.eta_w is None else self.eta_w


def abs_mean_penalty(x: np.ndarray, eta: float) -> Tuple[float, np.ndarray]:
	"""eta * (mean(|x|)^2 + mean(|x|)), the square of the absolute mean rather than the
	mean square, so a few entries may grow large while most are pushed to zero.

	Args:
		x (np.ndarray): The values, pooled over every axis
		eta (float): The coefficient

	Returns:
		Tuple[float, np.ndarray]: The penalty and its gradient with respect to `x`
	"""
	if x.size == 0:
		return 0.0, np.zeros_like(x)
	m = float(np.mean(np.abs(x)))
	value = eta * (m * m + m)
	grad = eta * (2.0 * m + 1.0) * np.sign(x) / x.size
	return value, grad


def cell_penalty(c: np.ndarray, eta: float) -> Tuple[float, np.ndarray]:
	"""The memory-cell magnitude penalty of one layer at one timestep. The mean is pooled
	over the batch and the layer width together.

	Args:
		c (np.ndarray): Memory cells, shape (width,) or (batch, width)
		eta (float): The coefficient

	Returns:
		Tuple[float, np.ndarray]: The penalty and d penalty / d c
	"""
	return abs_mean_penalty(np.asarray(c, dtype=np.float64), eta)


def weight_penalty(params: Dict[str, np.ndarray], eta_w: float) -> Tuple[float, Dict[str, np.ndarray]]:
	"""The same functional applied to each tensor on its own, summed over tensors.

	Args:
		params (Dict[str, np.ndarray]): The penalized tensors
		eta_w (float): The coefficient

	Returns:
		Tuple[float, Dict[str, np.ndarray]]: The penalty and one gradient per tensor
	"""
	total, grads = 0.0, {}
	for name, tensor in params.items():
		value, grads[name] = abs_mean_penalty(tensor, eta_w)
		total += value
	return total, grads


def softmax_xent(logits: np.ndarray, targets: Union[int, np.ndarray]) -> Tuple[Union[float, np.ndarray], np.ndarray]:
	"""Softmax cross-entropy in nats, computed with max-subtraction.

	Args:
		logits (np.ndarray): Shape (classes,) or (batch, classes)
		targets (Union[int, np.ndarray]): A class index, or one per batch row

	Raises:
		ValueError: If a target index is out of range

	Returns:
		Tuple[Union[float, np.ndarray], np.ndarray]: The loss (one per row when batched) and
		d loss / d logits, which is softmax - onehot
	"""
	logits = np.asarray(logits, dtype=np.float64)
	single = logits.ndim == 1
	logits = np.atleast_2d(logits)
	targets = np.atleast_1d(np.asarray(targets))
	classes = logits.shape[-1]
	if targets.shape != (logits.shape[0],):
		raise ValueError("Got {} targets for logits of shape {}".format(targets.shape, logits.shape))
	if np.any(targets < 0) or np.any(targets >= classes):
		raise ValueError("Target index out of range for {} classes: {}".format(classes, targets))
	shifted = logits - logits.max(axis=-1, keepdims=True)
	log_z = np.log(np.exp(shifted).sum(axis=-1))
	rows = np.arange(logits.shape[0])
	loss = log_z - shifted[rows, targets]
	d_logits = np.exp(shifted - log_z[:, None])
	d_logits[rows, targets] -= 1.0
	if single:
		return float(loss[0]), d_logits[0]
	return loss, d_logits


def bpc(total_nats: float, count: int) -> float:
	"""Bits per character: the mean cross-entropy in base 2.

	Raises:
		ValueError: If `count` is not positive
	"""
	if count <= 0:
		raise ValueError("Cannot average over {} symbols".format(count))
	return total_nats / count / math.log(2)


@attr.s(auto_attribs=True, eq=False)
class AdamState:
	"""ADAM moments for every parameter tensor, plus the step counter and settings.
	"""
	alpha: float = 0.001
	beta1: float = 0.9
	beta2: float = 0.999
	epsilon: float = 1e-8
	t: int = 0
	m: Dict[str, np.ndarray] = attr.Factory(dict)
	v: Dict[str, np.ndarray] = attr.Factory(dict)

	def moments(self, name: str, shape: tuple) -> Tuple[np.ndarray, np.ndarray]:
		if name not in self.m:
			self.m[name] = np.zeros(shape)
			self.v[name] = np.zeros(shape)
		return self.m[name], self.v[name]


def adam_step(state: AdamState, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]):
	"""One bias-corrected ADAM update. Parameters are updated in place, in the order of `params`.

	Args:
		state (AdamState): The optimizer state, updated in place
		params (Dict[str, np.ndarray]): Named parameter tensors
		grads (Dict[str, np.ndarray]): Gradients with the same names and shapes

	Raises:
		ValueError: If a gradient is missing or has the wrong shape
		FloatingPointError: If a gradient is not finite. Nothing is updated in that case.
	"""
	for name, tensor in params.items():
		if name not in grads or grads[name].shape != tensor.shape:
			raise ValueError("Gradient for {} has shape {}, expected {}".format(
				name, getattr(grads.get(name), "shape", None), tensor.shape))
		if not np.all(np.isfinite(grads[name])):
			raise FloatingPointError("Non-finite gradient for {} at step {}".format(name, state.t + 1))

	state.t += 1
	correction1 = 1.0 - state.beta1 ** state.t
	correction2 = 1.0 - state.beta2 ** state.t
	for name, tensor in params.items():
		g = grads[name]
		m, v = state.moments(name, tensor.shape)
		m *= state.beta1
		m += (1.0 - state.beta1) * g
		v *= state.beta2
		v += (1.0 - state.beta2) * g * g
		tensor -= state.alpha * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
