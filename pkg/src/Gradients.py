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

from typing import Callable, Dict, List, Optional, Tuple

import attr
import numpy as np

from .Cells import CellBase, CellKind, CellParams, LayerState, StepCache
from .Cells.CellParams import INNER_TENSORS
from .MathCore import ActivationKind, SeededRng
from .Network import LayerSpec, Network, NetworkSpec, init_params, stack_forward
from .Optim import RegConfig, cell_penalty, softmax_xent, weight_penalty


@attr.s(auto_attribs=True)
class LossBreakdown:
	"""The parts of a sequence loss, kept for metrics."""
	total: float = 0.0
	task: float = 0.0
	cell_penalty: float = 0.0
	weight_penalty: float = 0.0
	mean_abs_cell: float = 0.0
	task_nats: float = 0.0
	predictions: int = 0


@attr.s(auto_attribs=True, eq=False)
class Gradients:
	"""Gradients of a scalar loss: one tensor per named network parameter (same names and
	shapes as `Network.named_tensors`), the gradient with respect to each layer's initial
	state, and the gradient with respect to the inputs, shape (time, batch, input width).
	"""
	tensors: Dict[str, np.ndarray]
	initial_states: List[LayerState]
	inputs: np.ndarray
	breakdown: LossBreakdown = attr.Factory(LossBreakdown)

	def __getitem__(self, name: str) -> np.ndarray:
		return self.tensors[name]


def penalized_tensors(net: Network) -> Dict[str, np.ndarray]:
	"""The tensors the weight penalty applies to: every weight matrix and the inner-layer
	weight vectors. Biases are left out.
	"""
	return {
		name: tensor for name, tensor in net.named_tensors().items()
		if name.rsplit(".", 1)[-1].startswith(("W", "w_v"))
	}


def step_backward(cache: StepCache, p: CellParams, d_y: np.ndarray, d_c_in: np.ndarray):
	"""Reverse-mode derivative of one forward step.

	Args:
		cache (StepCache): Intermediates of the matching forward step
		p (CellParams): The layer parameters the step ran with
		d_y (np.ndarray): Upstream gradient on y_t
		d_c_in (np.ndarray): Upstream gradient on c_t

	Raises:
		ValueError: If an upstream gradient does not match the cached state

	Returns:
		Tuple[dict, np.ndarray, np.ndarray, np.ndarray]: Parameter gradients, d_x, d_y_prev, d_c_prev
	"""
	if np.shape(d_y) != np.shape(cache.y) or np.shape(d_c_in) != np.shape(cache.c):
		raise ValueError("Upstream gradients of shapes {}/{} do not match a state of shape {}".format(
			np.shape(d_y), np.shape(d_c_in), np.shape(cache.y)))
	return CellBase.get_cell_class(p.kind).backward(cache, p, d_y, d_c_in)


def _check_targets(sequence: np.ndarray, targets: np.ndarray, mask: np.ndarray):
	T, batch = sequence.shape[:2]
	if mask.shape != (T,):
		raise ValueError("Mask of shape {} does not match a length-{} sequence".format(mask.shape, T))
	if targets.shape != (T, batch):
		raise ValueError("Targets of shape {} do not match a sequence of shape {}".format(targets.shape, sequence.shape))


def _loss_terms(net: Network, logits: np.ndarray, caches: List[List[StepCache]], targets: np.ndarray, mask: np.ndarray, reg: RegConfig):
	"""Task loss and both penalties with their gradients with respect to the logits,
	the memory cells and the penalized tensors."""
	T, batch = targets.shape
	breakdown = LossBreakdown()
	normaliser = float(mask.sum()) * batch
	d_logits = np.zeros_like(logits)
	for t in np.flatnonzero(mask):
		losses, d = softmax_xent(logits[t], targets[t])
		breakdown.task_nats += float(losses.sum())
		breakdown.predictions += batch
		breakdown.task += mask[t] * float(losses.sum()) / normaliser
		d_logits[t] = mask[t] * d / normaliser

	d_cells = [[None] * len(net.layers) for _ in range(T)]
	abs_total, abs_count = 0.0, 0
	for t in range(T):
		for l, cache in enumerate(caches[t]):
			value, d_cells[t][l] = cell_penalty(cache.c, reg.eta)
			breakdown.cell_penalty += value
			abs_total += float(np.abs(cache.c).sum())
			abs_count += cache.c.size
	breakdown.mean_abs_cell = abs_total / max(abs_count, 1)

	breakdown.weight_penalty, d_weights = weight_penalty(penalized_tensors(net), reg.weight_eta)
	breakdown.total = breakdown.task + breakdown.cell_penalty + breakdown.weight_penalty
	return breakdown, d_logits, d_cells, d_weights


def sequence_loss(net: Network, sequence: np.ndarray, targets: np.ndarray, mask: np.ndarray, reg: RegConfig,
		initial_states: Optional[List[LayerState]] = None) -> LossBreakdown:
	"""Forward-only evaluation of the objective `bptt` differentiates."""
	sequence = np.asarray(sequence, dtype=np.float64)
	targets, mask = np.asarray(targets), np.asarray(mask, dtype=np.float64)
	_check_targets(sequence, targets, mask)
	logits, caches, _ = stack_forward(net, sequence, initial_states)
	return _loss_terms(net, logits, caches, targets, mask, reg)[0]


def bptt(net: Network, sequence: np.ndarray, targets: np.ndarray, mask: np.ndarray, reg: RegConfig,
		initial_states: Optional[List[LayerState]] = None) -> Tuple[float, Gradients]:
	"""Backpropagation through time over the whole sequence, without truncation or clipping.

	The objective is the masked softmax cross-entropy averaged over masked-in steps and
	the batch, plus the memory-cell penalty of every layer at every timestep, plus the
	weight penalty.

	Args:
		net (Network): The network
		sequence (np.ndarray): Inputs, shape (time, batch, input width)
		targets (np.ndarray): Class indices, shape (time, batch). Ignored where the mask is zero.
		mask (np.ndarray): Per-timestep loss weights, shape (time,)
		reg (RegConfig): Regularization coefficients
		initial_states (Optional[List[LayerState]], optional): Defaults to zero states.

	Raises:
		ValueError: On a mask/target/sequence length mismatch

	Returns:
		Tuple[float, Gradients]: The loss and its exact gradient
	"""
	sequence = np.asarray(sequence, dtype=np.float64)
	targets, mask = np.asarray(targets), np.asarray(mask, dtype=np.float64)
	_check_targets(sequence, targets, mask)
	T, batch = targets.shape
	logits, caches, _ = stack_forward(net, sequence, initial_states)
	breakdown, d_logits, d_cells, d_weights = _loss_terms(net, logits, caches, targets, mask, reg)

	grads = {name: np.zeros_like(tensor) for name, tensor in net.named_tensors().items()}
	for name, d in d_weights.items():
		grads[name] += d

	n_layers = len(net.layers)
	d_y_rec = [np.zeros((batch, layer.width)) for layer in net.layers]
	d_c_rec = [np.zeros((batch, layer.width)) for layer in net.layers]
	d_inputs = np.zeros_like(sequence)
	for t in reversed(range(T)):
		top = caches[t][-1].y
		grads["readout.W"] += d_logits[t].T @ top
		grads["readout.b"] += d_logits[t].sum(axis=0)
		d_signal = d_logits[t] @ net.W_out
		for l in reversed(range(n_layers)):
			layer_grads, d_x, d_y_rec[l], d_c_rec[l] = step_backward(
				caches[t][l], net.layers[l], d_signal + d_y_rec[l], d_c_rec[l] + d_cells[t][l])
			for name, d in layer_grads.items():
				grads[f"layer{l}.{name}"] += d
			d_signal = d_x
		d_inputs[t] = d_signal

	initial = [LayerState(d_c, d_y) for d_c, d_y in zip(d_c_rec, d_y_rec)]
	return breakdown.total, Gradients(grads, initial, d_inputs, breakdown)


def relative_error(a: float, b: float) -> float:
	return abs(a - b) / max(1.0, abs(a), abs(b))


def check_function_gradient(fn: Callable[[np.ndarray], float], theta: np.ndarray, analytic: np.ndarray, epsilon: float = 1e-5) -> float:
	"""Compares an analytic gradient with central differences at every coordinate.

	Args:
		fn (Callable[[np.ndarray], float]): Scalar function of `theta`
		theta (np.ndarray): The point. It is restored after each probe.
		analytic (np.ndarray): The gradient to check, same shape as `theta`
		epsilon (float, optional): Step size. Defaults to 1e-5.

	Returns:
		float: The worst relative error
	"""
	worst = 0.0
	for index in np.ndindex(theta.shape):
		worst = max(worst, relative_error(float(analytic[index]), _central_difference(fn, theta, index, epsilon)))
	return worst


def _central_difference(fn: Callable, theta: np.ndarray, index: tuple, epsilon: float) -> float:
	original = theta[index]
	theta[index] = original + epsilon
	upper = fn(theta)
	theta[index] = original - epsilon
	lower = fn(theta)
	theta[index] = original
	return (upper - lower) / (2.0 * epsilon)


def finite_diff_check(net: Network, data: tuple, epsilon: float = 1e-5, reg: Optional[RegConfig] = None,
		samples_per_tensor: int = 12, rng: Optional[SeededRng] = None) -> float:
	"""Checks `bptt` against central differences of the loss on a subsample of parameter
	coordinates from every tensor.

	Args:
		net (Network): The network. Its parameters are restored after each probe.
		data (tuple): (sequence, targets, mask)
		epsilon (float, optional): Step size in [1e-7, 1e-3]. Defaults to 1e-5.
		reg (Optional[RegConfig], optional): Defaults to RegConfig().
		samples_per_tensor (int, optional): Coordinates probed per tensor; smaller tensors
		are probed in full. Defaults to 12.
		rng (Optional[SeededRng], optional): Chooses the coordinates. Defaults to seed 0.

	Raises:
		ValueError: If epsilon is out of range

	Returns:
		float: The worst relative error |a - b| / max(1, |a|, |b|)
	"""
	if not 1e-7 <= epsilon <= 1e-3:
		raise ValueError("Finite-difference step {} is outside [1e-7, 1e-3]".format(epsilon))
	reg = reg or RegConfig()
	rng = rng or SeededRng(0)
	sequence, targets, mask = data
	_, grads = bptt(net, sequence, targets, mask, reg)

	worst = 0.0
	for name, tensor in net.named_tensors().items():
		flat = tensor.reshape(-1)
		if flat.size <= samples_per_tensor:
			picks = np.arange(flat.size)
		else:
			picks = np.sort(rng.integers(0, flat.size, samples_per_tensor))
		analytic = grads[name].reshape(-1)
		loss = lambda _: sequence_loss(net, sequence, targets, mask, reg).total
		for i in picks:
			numeric = _central_difference(loss, flat, (int(i),), epsilon)
			worst = max(worst, relative_error(float(analytic[i]), numeric))
	return worst


def make_check_problem(kind: CellKind, activation: ActivationKind, width: int = 8, depth: int = 2, length: int = 12,
		batch: int = 2, seed: int = 0) -> Tuple[Network, tuple]:
	"""A small random network and a random masked sequence to run `finite_diff_check` on.

	The inner-layer tensors of LSTWM layers are drawn at random as well, so their gradients
	are probed away from the zero initialization.

	Returns:
		Tuple[Network, tuple]: The network and (sequence, targets, mask)
	"""
	rng = SeededRng(seed)
	spec = NetworkSpec(width, [LayerSpec(width, kind, activation) for _ in range(depth)], width)
	net = init_params(spec, rng)
	for layer in net.layers:
		if layer.kind == CellKind.LSTWM:
			for name in INNER_TENSORS:
				getattr(layer, name)[...] = rng.normal(getattr(layer, name).shape, 0.5)
	sequence = rng.normal((length, batch, width))
	targets = rng.integers(0, width, (length, batch))
	mask = np.ones(length)
	mask[:length // 3] = 0.0
	targets[mask == 0] = -1
	return net, (sequence, targets, mask)
