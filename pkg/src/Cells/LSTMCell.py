from typing import Tuple

import numpy as np

from .CellBase import CellBase
from .CellParams import CellKind, CellParams, LayerState, StepCache


class LSTMCell(CellBase):
	"""LSTM with a forget gate:

		c_t = g_i * a + g_f * c_{t-1}
		y_t = g_o * f(c_t)
	"""

	kind = CellKind.LSTM

	@classmethod
	def step(cls, p: CellParams, x: np.ndarray, prev: LayerState) -> Tuple[LayerState, StepCache]:
		"""Advances the layer by one timestep.

		Args:
			p (CellParams): LSTM layer parameters
			x (np.ndarray): Input, shape (batch, input width)
			prev (LayerState): State after the previous step

		Raises:
			ValueError: On a dimension or kind mismatch

		Returns:
			Tuple[LayerState, StepCache]: The new state and the step's intermediates
		"""
		fields = cls._gates(p, x, prev)
		c = fields["gi"] * fields["a"] + fields["gs"] * prev.c
		return cls._output(p, fields, c)

	@classmethod
	def backward(cls, cache: StepCache, p: CellParams, d_y: np.ndarray, d_c_in: np.ndarray):
		d_go, d_c = cls._output_backward(cache, p, d_y, d_c_in)
		d_a = d_c * cache.gi
		d_gi = d_c * cache.a
		d_gf = d_c * cache.c_prev
		d_c_prev = d_c * cache.gs
		grads, d_x, d_y_prev = cls._gates_backward(cache, p, d_a, d_gi, d_go, d_gf)
		return grads, d_x, d_y_prev, d_c_prev


def lstm_step(p: CellParams, x: np.ndarray, prev: LayerState) -> Tuple[LayerState, StepCache]:
	return LSTMCell.step(p, x, prev)
