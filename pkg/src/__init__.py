from .MathCore import ActivationKind, SeededRng, activate, activate_deriv, affine, log_act, roll, sigmoid
from .Cells import CellKind, CellParams, LayerState, lstm_step, lstwm_step
from .Network import LayerSpec, Network, NetworkSpec, init_params, stack_forward
from .Gradients import Gradients, LossBreakdown, bptt, finite_diff_check, sequence_loss
from .Optim import AdamState, RegConfig, adam_step, bpc, cell_penalty, softmax_xent, weight_penalty

__all__ = [
	"ActivationKind", "SeededRng", "activate", "activate_deriv", "affine", "log_act", "roll", "sigmoid",
	"CellKind", "CellParams", "LayerState", "lstm_step", "lstwm_step",
	"LayerSpec", "Network", "NetworkSpec", "init_params", "stack_forward",
	"Gradients", "LossBreakdown", "bptt", "finite_diff_check", "sequence_loss",
	"AdamState", "RegConfig", "adam_step", "bpc", "cell_penalty", "softmax_xent", "weight_penalty"
]
