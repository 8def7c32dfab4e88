import abc
from typing import Tuple

import numpy as np

from ..MathCore import activate, activate_deriv, affine, sigmoid
from .CellParams import CellKind, CellParams, LayerState, StepCache


def _flat(a: np.ndarray) -> np.ndarray:
	return a.reshape(-1, a.shape[-1])


class CellBase(abc.ABC):
	"""The base class of the recurrent cells. Both designs share the candidate and the
	three gates computed from [x_t; y_{t-1}]; they differ in how c_{t-1} becomes c_t.
	"""

	kind: CellKind = None

	@classmethod
	@abc.abstractmethod
	def step(cls, p: CellParams, x: np.ndarray, prev: LayerState) -> Tuple[LayerState, StepCache]:
		raise NotImplementedError

	@classmethod
	@abc.abstractmethod
	def backward(cls, cache: StepCache, p: CellParams, d_y: np.ndarray, d_c_in: np.ndarray):
		raise NotImplementedError

	@classmethod
	def get_cell_class(cls, kind: CellKind):
		"""Looks up the implementation of a cell design.

		Args:
			kind (CellKind): The cell design

		Returns:
			type: The CellBase subclass
		"""
		from .LSTMCell import LSTMCell
		from .LSTWMCell import LSTWMCell
		return {
			CellKind.LSTM: LSTMCell,
			CellKind.LSTWM: LSTWMCell,
		}[kind]

	@classmethod
	def _check(cls, p: CellParams, x: np.ndarray, prev: LayerState):
		if p.kind != cls.kind:
			raise ValueError("{} cannot step a {} layer".format(cls.__name__, p.kind.value))
		if np.shape(x)[-1] != p.input_width:
			raise ValueError("Input of shape {} does not match a layer with input width {}".format(
				np.shape(x), p.input_width))
		if np.shape(prev.c) != np.shape(prev.y) or np.shape(prev.c)[-1] != p.width:
			raise ValueError("State of shapes {}/{} does not match a layer of width {}".format(
				np.shape(prev.c), np.shape(prev.y), p.width))
		if np.shape(x)[:-1] != np.shape(prev.y)[:-1]:
			raise ValueError("Input of shape {} and state of shape {} disagree on the batch".format(
				np.shape(x), np.shape(prev.y)))

	@classmethod
	def _gates(cls, p: CellParams, x: np.ndarray, prev: LayerState) -> dict:
		"""Candidate and gates. Returns the partially filled cache fields."""
		cls._check(p, x, prev)
		z = np.concatenate([x, prev.y], axis=-1)
		a_pre = affine(p.W, p.b, z)
		gi_pre = affine(p.W_gi, p.b_gi, z)
		go_pre = affine(p.W_go, p.b_go, z)
		gs_pre = affine(p.W_gs, p.b_gs, z)
		return dict(
			x=x, y_prev=prev.y, c_prev=prev.c, z=z,
			a_pre=a_pre, a=activate(p.activation, a_pre),
			gi_pre=gi_pre, gi=sigmoid(gi_pre),
			go_pre=go_pre, go=sigmoid(go_pre),
			gs_pre=gs_pre, gs=sigmoid(gs_pre),
		)

	@classmethod
	def _output(cls, p: CellParams, fields: dict, c: np.ndarray) -> Tuple[LayerState, StepCache]:
		fc = activate(p.activation, c)
		y = fields["go"] * fc
		cache = StepCache(c=c, fc=fc, y=y, **fields)
		return LayerState(c, y), cache

	@classmethod
	def _output_backward(cls, cache: StepCache, p: CellParams, d_y: np.ndarray, d_c_in: np.ndarray):
		"""Adjoint of y_t = g_o * f(c_t). Returns (d_go, total d_c)."""
		d_go = d_y * cache.fc
		d_c = d_c_in + d_y * cache.go * activate_deriv(p.activation, cache.c)
		return d_go, d_c

	@classmethod
	def _gates_backward(cls, cache: StepCache, p: CellParams, d_a, d_gi, d_go, d_gs) -> Tuple[dict, np.ndarray, np.ndarray]:
		"""Adjoint of the candidate and the gates.

		Returns:
			Tuple[dict, np.ndarray, np.ndarray]: Gradients of the gate tensors, d_x and d_y_prev
		"""
		d_pre = {
			"": d_a * activate_deriv(p.activation, cache.a_pre),
			"_gi": d_gi * cache.gi * (1.0 - cache.gi),
			"_go": d_go * cache.go * (1.0 - cache.go),
			"_gs": d_gs * cache.gs * (1.0 - cache.gs),
		}
		z = _flat(cache.z)
		grads = {}
		d_z = np.zeros_like(cache.z)
		for suffix, d in d_pre.items():
			W = getattr(p, "W" + suffix)
			grads["W" + suffix] = _flat(d).T @ z
			grads["b" + suffix] = _flat(d).sum(axis=0)
			d_z = d_z + d @ W
		n_x = p.input_width
		return grads, d_z[..., :n_x], d_z[..., n_x:]
