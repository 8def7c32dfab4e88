import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.Cells import CellKind, CellParams, LayerState, lstm_step, lstwm_step
from src.Cells.CellParams import GATE_TENSORS, INNER_TENSORS
from src.MathCore import ActivationKind, SeededRng, activate, affine, sigmoid
from src.Network import LayerSpec, Network, NetworkSpec, init_params, stack_forward


def zero_layer(kind: CellKind, activation: ActivationKind, input_width: int, width: int) -> CellParams:
	tensors = {}
	for name in GATE_TENSORS:
		tensors[name] = np.zeros((width, input_width + width)) if name.startswith("W") else np.zeros(width)
	if kind == CellKind.LSTWM:
		tensors.update({name: np.zeros(width) for name in INNER_TENSORS})
	return CellParams(kind, activation, **tensors)


def random_layer(kind: CellKind, activation: ActivationKind, input_width: int, width: int, seed: int) -> CellParams:
	rng = SeededRng(seed)
	layer = zero_layer(kind, activation, input_width, width)
	for tensor in layer.named_tensors().values():
		tensor[...] = rng.normal(tensor.shape, 0.7)
	return layer


def lstm_reference(p, x, c_prev, y_prev):
	f = lambda v: activate(p.activation, v)
	z = np.concatenate([x, y_prev])
	a = f(p.W @ z + p.b)
	gi = sigmoid(p.W_gi @ z + p.b_gi)
	gf = sigmoid(p.W_gs @ z + p.b_gs)
	go = sigmoid(p.W_go @ z + p.b_go)
	c = gi * a + gf * c_prev
	return c, go * f(c)


def lstwm_reference(p, x, c_prev, y_prev):
	f = lambda v: activate(p.activation, v)
	z = np.concatenate([x, y_prev])
	a = f(p.W @ z + p.b)
	gi = sigmoid(p.W_gi @ z + p.b_gi)
	gs = sigmoid(p.W_gs @ z + p.b_gs)
	go = sigmoid(p.W_go @ z + p.b_go)
	n = len(c_prev)
	left = np.array([c_prev[(j + 1) % n] for j in range(n)])
	right = np.array([c_prev[(j - 1) % n] for j in range(n)])
	i = f(p.w_v1 * c_prev + p.w_v2 * left + p.w_v3 * right + p.b_v1)
	c = gi * a + gs * c_prev + (1 - gs) * i
	return c, go * f(c)


def test_init_params_shapes_and_zero_inner_layer():
	spec = NetworkSpec(4, [LayerSpec(8, CellKind.LSTWM, ActivationKind.LOG)] * 2, 3)
	net = init_params(spec, SeededRng(0))
	first = net.layers[0]
	assert first.W_gi.shape == (8, 12)
	assert net.layers[1].W.shape == (8, 16)
	for layer in net.layers:
		for name in INNER_TENSORS:
			assert_array_equal(getattr(layer, name), 0.0)
		assert_array_equal(layer.b, 0.0)
	assert net.W_out.shape == (3, 8)
	assert np.abs(first.W).max() <= 1 / math.sqrt(12)


def test_init_params_is_deterministic():
	spec = NetworkSpec.from_name("LSTWM-5-5-log", 3, 2)
	a, b = init_params(spec, SeededRng(4)), init_params(spec, SeededRng(4))
	for (name, x), y in zip(a.named_tensors().items(), b.named_tensors().values()):
		assert_array_equal(x, y, err_msg=name)


def test_lstm_step_zero_params():
	p = zero_layer(CellKind.LSTM, ActivationKind.TANH, 1, 1)
	state, _ = lstm_step(p, np.array([0.3]), LayerState(np.array([2.0]), np.array([0.0])))
	assert_allclose(state.c, [1.0])
	assert_allclose(state.y, [0.5 * math.tanh(1.0)])

	state, _ = lstm_step(p, np.array([4.0]), LayerState(np.array([0.0]), np.array([0.0])))
	assert_array_equal(state.c, [0.0])
	assert_array_equal(state.y, [0.0])


@pytest.mark.parametrize("activation", [ActivationKind.TANH, ActivationKind.LOG])
def test_lstm_step_matches_reference(activation):
	p = random_layer(CellKind.LSTM, activation, 3, 4, seed=1)
	rng = SeededRng(2)
	x, c_prev, y_prev = rng.normal(3), rng.normal(4), rng.normal(4)
	state, _ = lstm_step(p, x, LayerState(c_prev, y_prev))
	c, y = lstm_reference(p, x, c_prev, y_prev)
	assert_allclose(state.c, c, rtol=1e-13)
	assert_allclose(state.y, y, rtol=1e-13)


@pytest.mark.parametrize("activation", [ActivationKind.TANH, ActivationKind.LOG])
def test_lstwm_step_matches_reference(activation):
	p = random_layer(CellKind.LSTWM, activation, 3, 4, seed=3)
	rng = SeededRng(4)
	x, c_prev, y_prev = rng.normal(3), rng.normal(4), rng.normal(4)
	state, _ = lstwm_step(p, x, LayerState(c_prev, y_prev))
	c, y = lstwm_reference(p, x, c_prev, y_prev)
	assert_allclose(state.c, c, rtol=1e-13)
	assert_allclose(state.y, y, rtol=1e-13)


def test_lstwm_single_cell_sees_itself_as_neighbour():
	p = random_layer(CellKind.LSTWM, ActivationKind.LOG, 2, 1, seed=5)
	c_prev, y_prev, x = np.array([0.8]), np.array([-0.2]), np.array([0.1, 0.4])
	_, cache = lstwm_step(p, x, LayerState(c_prev, y_prev))
	inner = activate(ActivationKind.LOG, (p.w_v1 + p.w_v2 + p.w_v3) * c_prev + p.b_v1)
	assert_allclose(cache.i, inner, rtol=1e-14)


def test_lstwm_with_zero_inner_layer_is_an_lstm():
	lstwm = random_layer(CellKind.LSTWM, ActivationKind.LOG, 3, 5, seed=6)
	for name in INNER_TENSORS:
		getattr(lstwm, name)[...] = 0.0
	lstm = CellParams(CellKind.LSTM, ActivationKind.LOG, **{name: getattr(lstwm, name) for name in GATE_TENSORS})
	rng = SeededRng(7)
	x, prev = rng.normal((2, 3)), LayerState(rng.normal((2, 5)), rng.normal((2, 5)))
	a, _ = lstwm_step(lstwm, x, prev)
	b, _ = lstm_step(lstm, x, prev)
	assert_array_equal(a.c, b.c)
	assert_array_equal(a.y, b.y)


@pytest.mark.parametrize("activation", [ActivationKind.TANH, ActivationKind.LOG])
def test_freshly_initialized_lstwm_network_matches_its_lstm_twin(activation):
	spec = NetworkSpec(6, [LayerSpec(8, CellKind.LSTWM, activation)] * 2, 4)
	lstwm = init_params(spec, SeededRng(8))
	lstm_spec = NetworkSpec(6, [LayerSpec(8, CellKind.LSTM, activation)] * 2, 4)
	lstm = Network(lstm_spec, [
		CellParams(CellKind.LSTM, activation, **{name: getattr(layer, name) for name in GATE_TENSORS})
		for layer in lstwm.layers
	], lstwm.W_out, lstwm.b_out)
	rng = SeededRng(9)
	worst = 0.0
	for _ in range(100):
		sequence = rng.normal((50, 1, 6))
		a, _, _ = stack_forward(lstwm, sequence, keep_caches=False)
		b, _, _ = stack_forward(lstm, sequence, keep_caches=False)
		worst = max(worst, float(np.abs(a - b).max()))
	assert worst <= 1e-12


def test_step_rejects_mismatched_input():
	p = zero_layer(CellKind.LSTM, ActivationKind.TANH, 3, 2)
	with pytest.raises(ValueError, match=r"\(4,\)"):
		lstm_step(p, np.zeros(4), LayerState.zeros(1, 2))
	with pytest.raises(ValueError):
		lstwm_step(p, np.zeros((1, 3)), LayerState.zeros(1, 2))


def test_cell_params_validates_shapes():
	tensors = zero_layer(CellKind.LSTM, ActivationKind.TANH, 2, 3).named_tensors()
	tensors["b_go"] = np.zeros(4)
	with pytest.raises(ValueError, match="b_go"):
		CellParams(CellKind.LSTM, ActivationKind.TANH, **tensors)


def test_stack_forward_single_step_is_one_step_plus_readout():
	spec = NetworkSpec(3, [LayerSpec(4, CellKind.LSTWM, ActivationKind.LOG)], 2)
	net = init_params(spec, SeededRng(10))
	x = SeededRng(11).normal((1, 1, 3))
	logits, caches, states = stack_forward(net, x)
	state, _ = lstwm_step(net.layers[0], x[0], LayerState.zeros(1, 4))
	assert_allclose(logits[0], affine(net.W_out, net.b_out, state.y), rtol=1e-14)
	assert_array_equal(states[0].c, state.c)
	assert len(caches) == 1 and len(caches[0]) == 1


def test_stack_forward_zero_network_outputs_the_readout_bias():
	spec = NetworkSpec(3, [LayerSpec(4, CellKind.LSTM, ActivationKind.TANH)] * 2, 2)
	layers = [zero_layer(CellKind.LSTM, ActivationKind.TANH, 3, 4), zero_layer(CellKind.LSTM, ActivationKind.TANH, 4, 4)]
	net = Network(spec, layers, np.zeros((2, 4)), np.array([0.5, -1.0]))
	logits, _, _ = stack_forward(net, SeededRng(12).normal((5, 2, 3)))
	assert_array_equal(logits, np.broadcast_to([0.5, -1.0], (5, 2, 2)))


def test_two_layer_network_composes_single_layers():
	spec = NetworkSpec(2, [LayerSpec(2, CellKind.LSTWM, ActivationKind.TANH), LayerSpec(2, CellKind.LSTM, ActivationKind.TANH)], 3)
	bottom = random_layer(CellKind.LSTWM, ActivationKind.TANH, 2, 2, seed=13)
	top = random_layer(CellKind.LSTM, ActivationKind.TANH, 2, 2, seed=14)
	net = Network(spec, [bottom, top], SeededRng(15).normal((3, 2)), np.zeros(3))
	sequence = SeededRng(16).normal((4, 1, 2))
	logits, _, _ = stack_forward(net, sequence)

	low, high = LayerState.zeros(1, 2), LayerState.zeros(1, 2)
	for t in range(4):
		low, _ = lstwm_step(bottom, sequence[t], low)
		high, _ = lstm_step(top, low.y, high)
		assert_allclose(logits[t], affine(net.W_out, net.b_out, high.y), rtol=1e-13)


def test_stack_forward_rejects_empty_sequences():
	net = init_params(NetworkSpec.from_name("LSTM-2", 2, 2), SeededRng(0))
	with pytest.raises(ValueError):
		stack_forward(net, np.zeros((0, 1, 2)))


def test_network_spec_names():
	spec = NetworkSpec.from_name("LSTWM-32-32-32-32-log", 28, 10)
	assert [layer.width for layer in spec.layers] == [32, 32, 32, 32]
	assert spec.layers[0].activation == ActivationKind.LOG
	assert spec.name == "LSTWM-32-32-32-32-log"
	assert NetworkSpec.from_name("LSTM-32-33", 28, 10, ActivationKind.TANH).name == "LSTM-32-33-tanh"
	with pytest.raises(ValueError):
		NetworkSpec.from_name("GRU-32", 28, 10)
	with pytest.raises(ValueError):
		NetworkSpec.from_name("LSTM-32-log", 28, 10, ActivationKind.TANH)


def test_parameter_matched_widths():
	lstm = init_params(NetworkSpec.from_name("LSTM-32-33-log", 28, 10), SeededRng(0))
	lstwm = init_params(NetworkSpec.from_name("LSTWM-32-32-log", 28, 10), SeededRng(0))
	assert lstm.parameter_count > lstwm.parameter_count


def test_from_tensors_round_trip():
	net = init_params(NetworkSpec.from_name("LSTWM-3-4", 2, 5), SeededRng(17))
	copy = Network.from_tensors(net.spec, {k: v.copy() for k, v in net.named_tensors().items()})
	for name, tensor in net.named_tensors().items():
		assert_array_equal(copy.named_tensors()[name], tensor)
	tensors = net.named_tensors()
	del tensors["layer1.w_v2"]
	with pytest.raises(ValueError, match="layer1.w_v2"):
		Network.from_tensors(net.spec, tensors)


@pytest.mark.parametrize("kind", [CellKind.LSTM, CellKind.LSTWM])
def test_saturated_gates_store_the_cell_indefinitely(kind):
	p = random_layer(kind, ActivationKind.LOG, 3, 4, seed=20)
	p.W_gi[...] = 0.0
	p.W_gs[...] = 0.0
	p.b_gi[...] = -1000.0
	p.b_gs[...] = 1000.0
	rng = SeededRng(21)
	start = rng.normal((2, 4))
	state = LayerState(start.copy(), rng.normal((2, 4)))
	step = lstm_step if kind == CellKind.LSTM else lstwm_step
	for x in rng.normal((40, 2, 3)):
		state, _ = step(p, x, state)
		assert_array_equal(state.c, start)


def test_outputs_do_not_depend_on_later_inputs():
	spec = NetworkSpec(3, [LayerSpec(5, CellKind.LSTWM, ActivationKind.LOG), LayerSpec(4, CellKind.LSTM, ActivationKind.TANH)], 2)
	net = init_params(spec, SeededRng(22))
	rng = SeededRng(23)
	for layer in net.layers:
		for tensor in layer.named_tensors().values():
			tensor[...] = rng.normal(tensor.shape, 0.5)
	sequence = SeededRng(24).normal((10, 2, 3))
	before, _, _ = stack_forward(net, sequence)
	for t in range(9):
		changed = sequence.copy()
		changed[t + 1:] += 3.0
		after, _, _ = stack_forward(net, changed)
		assert_array_equal(after[:t + 1], before[:t + 1])
		assert not np.array_equal(after[t + 1], before[t + 1])


@pytest.mark.parametrize("kind", [CellKind.LSTM, CellKind.LSTWM])
@pytest.mark.parametrize("activation", [ActivationKind.TANH, ActivationKind.LOG])
def test_step_cache_replays_the_output_and_gates_stay_open(kind, activation):
	p = random_layer(kind, activation, 3, 6, seed=25)
	rng = SeededRng(26)
	step = lstm_step if kind == CellKind.LSTM else lstwm_step
	state = LayerState(rng.normal((4, 6)), rng.normal((4, 6)))
	for x in rng.normal((8, 4, 3)):
		state, cache = step(p, x, state)
		assert_allclose(cache.go * activate(activation, cache.c), cache.y, rtol=1e-15, atol=0.0)
		assert_array_equal(cache.y, state.y)
		for gate in (cache.gi, cache.go, cache.gs):
			assert np.all(gate > 0.0) and np.all(gate < 1.0)


def test_step_rejects_a_batch_mismatch():
	p = zero_layer(CellKind.LSTM, ActivationKind.TANH, 3, 2)
	with pytest.raises(ValueError, match=r"\(3, 3\).*\(2, 2\)"):
		lstm_step(p, np.zeros((3, 3)), LayerState.zeros(2, 2))
	with pytest.raises(ValueError, match="batch"):
		lstm_step(p, np.zeros((2, 3)), LayerState.zeros(1, 2))
