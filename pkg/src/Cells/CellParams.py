from enum import Enum
from typing import Optional

import attr
import numpy as np

from ..MathCore import ActivationKind, SeededRng


class CellKind(Enum):
	"""An enum class containing the recurrent cell designs.
	"""
	LSTM	= "LSTM"
	LSTWM	= "LSTWM"


GATE_TENSORS = ("W", "b", "W_gi", "b_gi", "W_go", "b_go", "W_gs", "b_gs")
INNER_TENSORS = ("w_v1", "w_v2", "w_v3", "b_v1")


@attr.s(auto_attribs=True, eq=False)
class CellParams:
	"""All learnable tensors of one recurrent layer.

	Every gate matrix has shape (width, input width + width) and acts on the
	concatenation [x_t; y_{t-1}]. `W_gs`/`b_gs` drive the forget gate of an LSTM
	and the combination gate of an LSTWM. The inner-layer vectors exist only for LSTWM.
	"""
	kind: CellKind
	activation: ActivationKind
	W: np.ndarray
	b: np.ndarray
	W_gi: np.ndarray
	b_gi: np.ndarray
	W_go: np.ndarray
	b_go: np.ndarray
	W_gs: np.ndarray
	b_gs: np.ndarray
	w_v1: Optional[np.ndarray] = None
	w_v2: Optional[np.ndarray] = None
	w_v3: Optional[np.ndarray] = None
	b_v1: Optional[np.ndarray] = None

	def __attrs_post_init__(self):
		width, cols = self.W.shape
		for name in GATE_TENSORS:
			tensor = getattr(self, name)
			expected = (width, cols) if name.startswith("W") else (width,)
			if tensor.shape != expected:
				raise ValueError("{} has shape {}, expected {}".format(name, tensor.shape, expected))
		for name in INNER_TENSORS:
			tensor = getattr(self, name)
			if self.kind == CellKind.LSTM and tensor is not None:
				raise ValueError("An LSTM layer has no {}".format(name))
			if self.kind == CellKind.LSTWM and (tensor is None or tensor.shape != (width,)):
				raise ValueError("{} must be a length-{} vector".format(name, width))

	@property
	def width(self) -> int:
		return self.W.shape[0]

	@property
	def input_width(self) -> int:
		return self.W.shape[1] - self.W.shape[0]

	def tensor_names(self) -> tuple:
		"""Names of the tensors this layer owns, in their fixed order."""
		return GATE_TENSORS + (INNER_TENSORS if self.kind == CellKind.LSTWM else ())

	def named_tensors(self) -> dict:
		return {name: getattr(self, name) for name in self.tensor_names()}

	def copy(self) -> "CellParams":
		return attr.evolve(self, **{name: tensor.copy() for name, tensor in self.named_tensors().items()})

	@classmethod
	def initialize(cls, kind: CellKind, activation: ActivationKind, input_width: int, width: int, rng: SeededRng):
		"""Draws a fresh layer. Dense matrices are uniform on (-s, s) with s = 1/sqrt(fan-in),
		all biases are zero, and the inner-layer vectors are zero so an LSTWM starts out
		computing exactly what an LSTM with the same gates computes.

		Args:
			kind (CellKind): The cell design
			activation (ActivationKind): The activation used for the candidate, the inner layer and the output
			input_width (int): Width of x_t
			width (int): Number of memory cells
			rng (SeededRng): The stream the matrices are drawn from

		Returns:
			CellParams: The layer
		"""
		cols = input_width + width
		scale = 1.0 / np.sqrt(cols)
		tensors = {}
		for name in GATE_TENSORS:
			if name.startswith("W"):
				tensors[name] = rng.uniform(-scale, scale, (width, cols))
			else:
				tensors[name] = np.zeros(width)
		if kind == CellKind.LSTWM:
			for name in INNER_TENSORS:
				tensors[name] = np.zeros(width)
		return cls(kind, activation, **tensors)


@attr.s(auto_attribs=True, eq=False)
class LayerState:
	"""The recurrent carry of one layer: memory cells c and output y, shape (batch, width).
	"""
	c: np.ndarray
	y: np.ndarray

	@classmethod
	def zeros(cls, batch: int, width: int):
		return cls(np.zeros((batch, width)), np.zeros((batch, width)))


@attr.s(auto_attribs=True, eq=False)
class StepCache:
	"""Every intermediate of one forward step the backward pass needs.
	Inner-layer fields stay `None` for LSTM steps.
	"""
	x: np.ndarray
	y_prev: np.ndarray
	c_prev: np.ndarray
	z: np.ndarray
	a_pre: np.ndarray
	a: np.ndarray
	gi_pre: np.ndarray
	gi: np.ndarray
	go_pre: np.ndarray
	go: np.ndarray
	gs_pre: np.ndarray
	gs: np.ndarray
	c: np.ndarray
	fc: np.ndarray
	y: np.ndarray
	c_rl: Optional[np.ndarray] = None
	c_rr: Optional[np.ndarray] = None
	inner_pre: Optional[np.ndarray] = None
	i: Optional[np.ndarray] = None
	r: Optional[np.ndarray] = None
