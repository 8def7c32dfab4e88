import hashlib
import os
from typing import Optional

import attr
from configobj import ConfigObj, ConfigObjError

from ..MathCore import ActivationKind
from ..Network import NetworkSpec
from ..Optim import RegConfig

TASKS = ("text", "combo", "digit")


class ConfigError(ValueError):
	pass


def _positive(instance, attribute, value):
	if value is None or value <= 0:
		raise ConfigError("{} must be positive, got {}".format(attribute.name, value))


def _non_negative(instance, attribute, value):
	if value is not None and value < 0:
		raise ConfigError("{} must be non-negative, got {}".format(attribute.name, value))


def _unit_interval(instance, attribute, value):
	if not 0.0 <= value < 1.0:
		raise ConfigError("{} must lie in [0, 1), got {}".format(attribute.name, value))


def _one_of(*choices):
	def check(instance, attribute, value):
		if value not in choices:
			raise ConfigError("{} must be one of {}, got {}".format(attribute.name, ", ".join(choices), value))
	return check


def _bool(value) -> bool:
	if isinstance(value, str):
		if value.strip().lower() in ("1", "true", "yes", "on"):
			return True
		if value.strip().lower() in ("0", "false", "no", "off"):
			return False
		raise ConfigError("{} is not a boolean".format(value))
	return bool(value)


def _optional(convert):
	def wrapped(value):
		if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
			return None
		return convert(value)
	return wrapped


@attr.s(auto_attribs=True, frozen=True, kw_only=True)
class ExperimentConfig:
	"""Everything that determines a run. Two runs with equal configs produce identical
	parameter trajectories and metrics.
	"""
	task: str = attr.ib(default="combo", validator=_one_of(*TASKS))
	architecture: str = "LSTWM-32-32"
	activation: str = attr.ib(default="log", validator=_one_of("tanh", "log"))

	alpha: float = attr.ib(default=0.001, converter=float, validator=_positive)
	beta1: float = attr.ib(default=0.9, converter=float, validator=_unit_interval)
	beta2: float = attr.ib(default=0.999, converter=float, validator=_unit_interval)
	adam_epsilon: float = attr.ib(default=1e-8, converter=float, validator=_positive)
	eta: float = attr.ib(default=1e-3, converter=float, validator=_non_negative)
	eta_w: Optional[float] = attr.ib(default=None, converter=_optional(float), validator=_non_negative)

	batch_size: int = attr.ib(default=32, converter=int, validator=_positive)
	epochs: int = attr.ib(default=6, converter=int, validator=_positive)
	log_interval: int = attr.ib(default=100, converter=int, validator=_positive)
	ema_decay: float = attr.ib(default=0.99, converter=float, validator=_unit_interval)
	checkpoint_interval: int = attr.ib(default=500, converter=int, validator=_positive)
	seed: int = attr.ib(default=0, converter=int, validator=_non_negative)
	output_dir: str = "runs/default"

	# text prediction
	corpus_path: Optional[str] = attr.ib(default=None, converter=_optional(str))
	corpus_limit: int = attr.ib(default=0, converter=int, validator=_non_negative)
	pretrain_length: int = attr.ib(default=200, converter=int, validator=_positive)
	sequence_length: int = attr.ib(default=2000, converter=int, validator=_positive)
	eval_length: Optional[int] = attr.ib(default=None, converter=_optional(int), validator=_non_negative)
	pretrain_noise: float = attr.ib(default=0.01, converter=float, validator=_non_negative)

	# digit tasks
	digits: int = attr.ib(default=4, converter=int, validator=_positive)
	running_sum: bool = attr.ib(default=False, converter=_bool)
	digit_noise: float = attr.ib(default=1e-5, converter=float, validator=_non_negative)
	digit_blur: bool = attr.ib(default=True, converter=_bool)
	steps_per_epoch: int = attr.ib(default=1000, converter=int, validator=_positive)
	test_count: int = attr.ib(default=10000, converter=int, validator=_positive)
	test_seed: int = attr.ib(default=20161, converter=int, validator=_non_negative)
	mnist_train_images: Optional[str] = attr.ib(default=None, converter=_optional(str))
	mnist_train_labels: Optional[str] = attr.ib(default=None, converter=_optional(str))
	mnist_test_images: Optional[str] = attr.ib(default=None, converter=_optional(str))
	mnist_test_labels: Optional[str] = attr.ib(default=None, converter=_optional(str))

	def __attrs_post_init__(self):
		try:
			NetworkSpec.from_name(self.architecture, 1, 1, self.activation_kind)
		except ValueError as e:
			raise ConfigError("architecture: {}".format(e)) from None
		if self.task == "digit" and self.digits != 1:
			raise ConfigError("digits must be 1 for the digit task, got {}".format(self.digits))
		if self.task == "text":
			if not self.corpus_path:
				raise ConfigError("corpus_path is required for the text task")
			if self.pretrain_length < 2 or self.sequence_length < 2:
				raise ConfigError("text sequence lengths must be at least 2")
		elif not all((self.mnist_train_images, self.mnist_train_labels, self.mnist_test_images, self.mnist_test_labels)):
			raise ConfigError("the {} task needs all four mnist_* paths".format(self.task))

	@property
	def activation_kind(self) -> ActivationKind:
		return ActivationKind(self.activation)

	@property
	def reg(self) -> RegConfig:
		return RegConfig(self.eta, self.eta_w)

	@property
	def digit_count(self) -> int:
		return 1 if self.task == "digit" else self.digits

	def network_spec(self, input_width: int, output_width: int) -> NetworkSpec:
		return NetworkSpec.from_name(self.architecture, input_width, output_width, self.activation_kind)

	def to_dict(self) -> dict:
		return {name: ("" if value is None else value) for name, value in attr.asdict(self).items()}

	def to_text(self) -> str:
		"""Flat `key = value` lines in field order."""
		return "".join("{} = {}\n".format(name, value) for name, value in self.to_dict().items())

	@property
	def digest(self) -> str:
		"""SHA-256 of the config text without `output_dir`, so a run may be resumed into
		another directory."""
		text = "".join(line for line in self.to_text().splitlines(keepends=True) if not line.startswith("output_dir = "))
		return hashlib.sha256(text.encode("utf-8")).hexdigest()

	def save(self, path: str):
		with open(path, "w", encoding="utf-8") as f:
			f.write(self.to_text())

	@classmethod
	def from_dict(cls, values: dict):
		"""Builds a config from string or typed values.

		Raises:
			ConfigError: On unknown keys or invalid values
		"""
		known = {a.name for a in attr.fields(cls)}
		unknown = sorted(set(values) - known)
		if unknown:
			raise ConfigError("unknown config keys: {}".format(", ".join(unknown)))
		try:
			return cls(**values)
		except (TypeError, ValueError) as e:
			if isinstance(e, ConfigError):
				raise
			raise ConfigError(str(e)) from None

	@classmethod
	def from_file(cls, path: str):
		"""Reads a flat `key = value` config file. Sections are not allowed.

		Raises:
			FileNotFoundError: If the file does not exist
			ConfigError: On a malformed file, unknown keys or invalid values
		"""
		if not os.path.isfile(path):
			raise FileNotFoundError("file not found: {}".format(path))
		try:
			parsed = ConfigObj(path, encoding="utf-8", list_values=False, raise_errors=True)
		except ConfigObjError as e:
			raise ConfigError("{}: {}".format(path, e)) from None
		if parsed.sections:
			raise ConfigError("{}: sections are not supported ({})".format(path, ", ".join(parsed.sections)))
		return cls.from_dict(dict(parsed))

	def evolve(self, **changes):
		return self.from_dict({**attr.asdict(self), **changes})
