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

import re
from typing import List, Optional, Sequence, Tuple, Union

import attr
import numpy as np

from .Cells import CellBase, CellKind, CellParams, LayerState, StepCache
from .Cells.CellParams import GATE_TENSORS, INNER_TENSORS
from .MathCore import ActivationKind, SeededRng, affine


@attr.s(auto_attribs=True, frozen=True)
class LayerSpec:
	width: int
	kind: CellKind
	activation: ActivationKind


@attr.s(auto_attribs=True, frozen=True)
class NetworkSpec:
	"""Architecture of a stacked network: input width, the recurrent layers from the
	bottom up, and the width of the affine readout on the top layer.
	"""
	input_width: int
	layers: Tuple[LayerSpec, ...] = attr.ib(converter=tuple)
	output_width: int

	def __attrs_post_init__(self):
		if not self.layers:
			raise ValueError("A network needs at least one recurrent layer")
		for width in (self.input_width, self.output_width, *(layer.width for layer in self.layers)):
			if width < 1:
				raise ValueError("{} is not a valid layer width".format(width))

	@property
	def name(self) -> str:
		"""The architecture name, e.g. `LSTWM-32-32-log`. Mixed designs are named by the bottom layer."""
		bottom = self.layers[0]
		return "-".join([bottom.kind.value] + [str(layer.width) for layer in self.layers] + [bottom.activation.value])

	@classmethod
	def from_name(cls, name: str, input_width: int, output_width: int, activation: Optional[ActivationKind] = None):
		"""Parses an architecture name such as `LSTM-256-256-log` or `LSTWM-32-32`.

		Args:
			name (str): The architecture name. The activation suffix is optional.
			input_width (int): Width of the input vectors
			output_width (int): Width of the readout
			activation (Optional[ActivationKind], optional): Used when the name has no
			activation suffix. Defaults to None (tanh).

		Raises:
			ValueError: If the name is malformed or names two different activations

		Returns:
			NetworkSpec: The spec
		"""
		match = re.fullmatch(r"(LSTM|LSTWM)((?:-\d+)+)(?:-(tanh|log))?", name.strip(), re.IGNORECASE)
		if not match:
			raise ValueError("{} is not a valid architecture name".format(name))
		kind = CellKind(match[1].upper())
		named = ActivationKind(match[3].lower()) if match[3] else None
		if named and activation and named != activation:
			raise ValueError("{} conflicts with activation {}".format(name, activation.value))
		act = named or activation or ActivationKind.TANH
		widths = [int(w) for w in match[2].strip("-").split("-")]
		return cls(input_width, [LayerSpec(w, kind, act) for w in widths], output_width)


class Network:
	"""A stack of recurrent layers with an affine readout producing logits.
	"""

	def __init__(self, spec: NetworkSpec, layers: List[CellParams], W_out: np.ndarray, b_out: np.ndarray):
		self.spec = spec
		self.layers = layers
		self.W_out = W_out
		self.b_out = b_out
		fan_in = spec.input_width
		for i, (layer, layer_spec) in enumerate(zip(layers, spec.layers)):
			if layer.width != layer_spec.width or layer.input_width != fan_in or layer.kind != layer_spec.kind:
				raise ValueError("Layer {} does not match its spec {}".format(i, layer_spec))
			fan_in = layer.width
		if W_out.shape != (spec.output_width, fan_in) or b_out.shape != (spec.output_width,):
			raise ValueError("Readout of shape {}/{} does not match a top width of {} and {} outputs".format(
				W_out.shape, b_out.shape, fan_in, spec.output_width))

	def __repr__(self):
		return f"<Network name={self.spec.name}, inputs={self.spec.input_width}, outputs={self.spec.output_width}, parameters={self.parameter_count}>"

	def named_tensors(self) -> dict:
		"""All learnable tensors, keyed `layer<i>.<name>` and `readout.<name>`, in a fixed order.
		The arrays are the live parameters, so in-place updates change the network.
		"""
		tensors = {}
		for i, layer in enumerate(self.layers):
			for name, tensor in layer.named_tensors().items():
				tensors[f"layer{i}.{name}"] = tensor
		tensors["readout.W"] = self.W_out
		tensors["readout.b"] = self.b_out
		return tensors

	@property
	def parameter_count(self) -> int:
		return int(sum(tensor.size for tensor in self.named_tensors().values()))

	@classmethod
	def from_tensors(cls, spec: NetworkSpec, tensors: dict):
		"""Rebuilds a network from the output of `named_tensors`.

		Raises:
			ValueError: If a tensor is missing or has the wrong shape
		"""
		layers = []
		fan_in = spec.input_width
		for i, layer_spec in enumerate(spec.layers):
			names = GATE_TENSORS + (INNER_TENSORS if layer_spec.kind == CellKind.LSTWM else ())
			values = {}
			for name in names:
				key = f"layer{i}.{name}"
				if key not in tensors:
					raise ValueError("Missing tensor {}".format(key))
				values[name] = np.array(tensors[key], dtype=np.float64)
			layers.append(CellParams(layer_spec.kind, layer_spec.activation, **values))
			fan_in = layer_spec.width
		for key in ("readout.W", "readout.b"):
			if key not in tensors:
				raise ValueError("Missing tensor {}".format(key))
		return cls(spec, layers, np.array(tensors["readout.W"], dtype=np.float64), np.array(tensors["readout.b"], dtype=np.float64))

	def copy(self) -> "Network":
		return Network(self.spec, [layer.copy() for layer in self.layers], self.W_out.copy(), self.b_out.copy())

	def zero_states(self, batch: int) -> List[LayerState]:
		return [LayerState.zeros(batch, layer.width) for layer in self.layers]


def init_params(spec: NetworkSpec, rng: SeededRng) -> Network:
	"""Draws a fresh network, bottom layer first, readout last.

	Args:
		spec (NetworkSpec): The architecture
		rng (SeededRng): The stream the dense matrices are drawn from

	Returns:
		Network: The network
	"""
	layers = []
	fan_in = spec.input_width
	for layer_spec in spec.layers:
		layers.append(CellParams.initialize(layer_spec.kind, layer_spec.activation, fan_in, layer_spec.width, rng))
		fan_in = layer_spec.width
	scale = 1.0 / np.sqrt(fan_in)
	W_out = rng.uniform(-scale, scale, (spec.output_width, fan_in))
	return Network(spec, layers, W_out, np.zeros(spec.output_width))


def stack_forward(
	net: Network,
	sequence: Union[np.ndarray, Sequence[np.ndarray]],
	initial_states: Optional[List[LayerState]] = None,
	keep_caches: bool = True
) -> Tuple[np.ndarray, List[List[StepCache]], List[LayerState]]:
	"""Runs the network over a sequence. Layer l sees layer l-1's output at the same timestep;
	the readout is an affine map of the top layer's output.

	Args:
		net (Network): The network
		sequence (Union[np.ndarray, Sequence[np.ndarray]]): Inputs, shape (time, batch, input width)
		initial_states (Optional[List[LayerState]], optional): One state per layer. Defaults to zeros.
		keep_caches (bool, optional): Keep the step intermediates for a backward pass. Defaults to True.

	Raises:
		ValueError: On an empty sequence or a dimension mismatch

	Returns:
		Tuple[np.ndarray, List[List[StepCache]], List[LayerState]]: Logits of shape
		(time, batch, outputs), the caches indexed [time][layer], and the final states
	"""
	sequence = np.asarray(sequence, dtype=np.float64)
	if sequence.ndim != 3 or sequence.shape[0] == 0:
		raise ValueError("Expected a non-empty (time, batch, features) sequence, got shape {}".format(sequence.shape))
	T, batch, _ = sequence.shape
	states = list(initial_states) if initial_states is not None else net.zero_states(batch)
	if len(states) != len(net.layers):
		raise ValueError("Got {} initial states for {} layers".format(len(states), len(net.layers)))
	steppers = [CellBase.get_cell_class(layer.kind) for layer in net.layers]

	logits = np.empty((T, batch, net.spec.output_width))
	caches = []
	for t in range(T):
		signal = sequence[t]
		step_caches = []
		for l, (layer, stepper) in enumerate(zip(net.layers, steppers)):
			states[l], cache = stepper.step(layer, signal, states[l])
			step_caches.append(cache)
			signal = states[l].y
		logits[t] = affine(net.W_out, net.b_out, signal)
		if keep_caches:
			caches.append(step_caches)
	return logits, caches, states
