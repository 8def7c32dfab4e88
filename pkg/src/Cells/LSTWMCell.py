from typing import Tuple

import numpy as np

from ..MathCore import activate, activate_deriv, neighbour_shift, roll
from .CellBase import CellBase, _flat
from .CellParams import CellKind, CellParams, LayerState, StepCache


class LSTWMCell(CellBase):
	"""LSTM with working memory. The forget gate becomes a combination gate g_s that
	blends c_{t-1} with the output of a sparse inner layer over the memory cells:

		i_t = f(w_v1 * c_{t-1} + w_v2 * roll(c_{t-1}, -1) + w_v3 * roll(c_{t-1}, 1) + b_v1)
		r_t = g_s * c_{t-1} + (1 - g_s) * i_t
		c_t = g_i * a + r_t
		y_t = g_o * f(c_t)

	The inner layer only links each cell to itself and its two neighbours.
	"""

	kind = CellKind.LSTWM

	@classmethod
	def step(cls, p: CellParams, x: np.ndarray, prev: LayerState) -> Tuple[LayerState, StepCache]:
		"""Advances the layer by one timestep.

		Args:
			p (CellParams): LSTWM layer parameters
			x (np.ndarray): Input, shape (batch, input width)
			prev (LayerState): State after the previous step

		Raises:
			ValueError: On a dimension or kind mismatch

		Returns:
			Tuple[LayerState, StepCache]: The new state and the step's intermediates
		"""
		fields = cls._gates(p, x, prev)
		c_prev = prev.c
		c_rl = roll(c_prev, neighbour_shift(p.width, -1))
		c_rr = roll(c_prev, neighbour_shift(p.width, 1))
		inner_pre = p.w_v1 * c_prev + p.w_v2 * c_rl + p.w_v3 * c_rr + p.b_v1
		i = activate(p.activation, inner_pre)
		gs = fields["gs"]
		r = gs * c_prev + (1.0 - gs) * i
		c = fields["gi"] * fields["a"] + r
		fields.update(c_rl=c_rl, c_rr=c_rr, inner_pre=inner_pre, i=i, r=r)
		return cls._output(p, fields, c)

	@classmethod
	def backward(cls, cache: StepCache, p: CellParams, d_y: np.ndarray, d_c_in: np.ndarray):
		d_go, d_c = cls._output_backward(cache, p, d_y, d_c_in)
		d_a = d_c * cache.gi
		d_gi = d_c * cache.a
		# r_t is a convex combination of c_{t-1} and i_t
		d_gs = d_c * (cache.c_prev - cache.i)
		d_i = d_c * (1.0 - cache.gs)
		d_inner = d_i * activate_deriv(p.activation, cache.inner_pre)

		grads, d_x, d_y_prev = cls._gates_backward(cache, p, d_a, d_gi, d_go, d_gs)
		grads["w_v1"] = _flat(d_inner * cache.c_prev).sum(axis=0)
		grads["w_v2"] = _flat(d_inner * cache.c_rl).sum(axis=0)
		grads["w_v3"] = _flat(d_inner * cache.c_rr).sum(axis=0)
		grads["b_v1"] = _flat(d_inner).sum(axis=0)

		# the adjoint of a roll by k is a roll by -k
		d_c_prev = (
			d_c * cache.gs
			+ d_inner * p.w_v1
			+ roll(d_inner * p.w_v2, neighbour_shift(p.width, 1))
			+ roll(d_inner * p.w_v3, neighbour_shift(p.width, -1))
		)
		return grads, d_x, d_y_prev, d_c_prev


def lstwm_step(p: CellParams, x: np.ndarray, prev: LayerState) -> Tuple[LayerState, StepCache]:
	return LSTWMCell.step(p, x, prev)
