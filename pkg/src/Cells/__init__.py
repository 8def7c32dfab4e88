from .CellParams import CellKind, CellParams, LayerState, StepCache
from .CellBase import CellBase
from .LSTMCell import LSTMCell, lstm_step
from .LSTWMCell import LSTWMCell, lstwm_step

__all__ = [
	"CellKind", "CellParams", "LayerState", "StepCache",
	"CellBase", "LSTMCell", "LSTWMCell", "lstm_step", "lstwm_step"
]
