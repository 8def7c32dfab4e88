import logging
import os
import struct
from typing import Dict, Optional

import attr
import msgpack
import numpy as np

from ..Network import Network
from ..Optim import AdamState
from .Config import ConfigError, ExperimentConfig

logger = logging.getLogger(__name__)

MAGIC = b"LSTWMCKP"
VERSION = 1
# 64-bit little-endian reals
TENSOR_DTYPE = np.dtype("<f8")


class CheckpointError(ValueError):
	pass


@attr.s(auto_attribs=True, eq=False)
class Checkpoint:
	"""A resumable snapshot of a run.

	On disk: the magic string, a little-endian u32 format version and a u32 header length,
	a msgpack header (config echo and digest, counters, generator state, tensor names and
	shapes), then every tensor as raw 64-bit little-endian reals in header order:
	parameters, ADAM first moments, ADAM second moments.
	"""
	config: ExperimentConfig
	input_width: int
	output_width: int
	tensors: Dict[str, np.ndarray]
	adam: AdamState
	step: int = 0
	epoch: int = 0
	epoch_step: int = 0
	ema: Optional[float] = None
	rng_state: Optional[dict] = None
	alphabet: Optional[bytes] = None
	epoch_cell_total: float = 0.0

	def __str__(self):
		return f"<Checkpoint architecture={self.config.architecture}-{self.config.activation}, task={self.config.task}, step={self.step}, epoch={self.epoch}, epoch_step={self.epoch_step}>"

	def network(self) -> Network:
		spec = self.config.network_spec(self.input_width, self.output_width)
		try:
			return Network.from_tensors(spec, self.tensors)
		except ValueError as e:
			raise CheckpointError("checkpoint does not match {}: {}".format(spec.name, e)) from None

	def metadata(self) -> dict:
		return {
			"version": VERSION,
			"architecture": self.config.network_spec(self.input_width, self.output_width).name,
			"task": self.config.task,
			"config_digest": self.config.digest,
			"step": self.step,
			"epoch": self.epoch,
			"epoch_step": self.epoch_step,
			"adam_t": self.adam.t,
			"inputs": self.input_width,
			"outputs": self.output_width,
			"parameters": int(sum(t.size for t in self.tensors.values())),
		}

	def save(self, path: str):
		"""Writes the checkpoint atomically: a temporary file is renamed over `path`."""
		moments = [name for name in self.tensors if name in self.adam.m]
		header = {
			"config": self.config.to_text(),
			"config_digest": self.config.digest,
			"input_width": self.input_width,
			"output_width": self.output_width,
			"step": self.step,
			"epoch": self.epoch,
			"epoch_step": self.epoch_step,
			"ema": self.ema,
			"rng_state": self.rng_state,
			"alphabet": self.alphabet,
			"epoch_cell_total": self.epoch_cell_total,
			"adam": {
				"alpha": self.adam.alpha, "beta1": self.adam.beta1, "beta2": self.adam.beta2,
				"epsilon": self.adam.epsilon, "t": self.adam.t, "moments": moments,
			},
			"tensors": [[name, list(tensor.shape)] for name, tensor in self.tensors.items()],
		}
		packed = msgpack.packb(header, use_bin_type=True)
		tmp = path + ".tmp"
		with open(tmp, "wb") as f:
			f.write(MAGIC)
			f.write(struct.pack("<II", VERSION, len(packed)))
			f.write(packed)
			for tensor in self.tensors.values():
				f.write(np.ascontiguousarray(tensor, dtype=TENSOR_DTYPE).tobytes())
			for store in (self.adam.m, self.adam.v):
				for name in moments:
					f.write(np.ascontiguousarray(store[name], dtype=TENSOR_DTYPE).tobytes())
		os.replace(tmp, path)
		logger.info("Saved %s to %s", self, path)

	@classmethod
	def load(cls, path: str):
		"""Reads a checkpoint written by `save`.

		Raises:
			FileNotFoundError: If the file does not exist
			CheckpointError: On a foreign, truncated or newer-version file
		"""
		if not os.path.isfile(path):
			raise FileNotFoundError("file not found: {}".format(path))
		with open(path, "rb") as f:
			data = f.read()
		if data[:len(MAGIC)] != MAGIC:
			raise CheckpointError("{} is not a checkpoint".format(path))
		offset = len(MAGIC)
		try:
			version, header_len = struct.unpack_from("<II", data, offset)
			offset += 8
			header = msgpack.unpackb(data[offset:offset + header_len], raw=False)
		except (struct.error, ValueError, msgpack.ExtraData) as e:
			raise CheckpointError("{} has a corrupt header: {}".format(path, e)) from None
		if version != VERSION:
			raise CheckpointError("{} has format version {}, expected {}".format(path, version, VERSION))
		offset += header_len

		def read_tensor(shape):
			nonlocal offset
			count = int(np.prod(shape, dtype=np.int64))
			if offset + count * TENSOR_DTYPE.itemsize > len(data):
				raise CheckpointError("{} is truncated".format(path))
			tensor = np.frombuffer(data, dtype=TENSOR_DTYPE, count=count, offset=offset).astype(np.float64).reshape(shape)
			offset += count * TENSOR_DTYPE.itemsize
			return tensor

		shapes = {name: tuple(shape) for name, shape in header["tensors"]}
		tensors = {name: read_tensor(shape) for name, shape in shapes.items()}
		adam_header = header["adam"]
		moments = adam_header["moments"]
		m = {name: read_tensor(shapes[name]) for name in moments}
		v = {name: read_tensor(shapes[name]) for name in moments}
		adam = AdamState(adam_header["alpha"], adam_header["beta1"], adam_header["beta2"], adam_header["epsilon"], adam_header["t"], m, v)

		values = {}
		for line in header["config"].splitlines():
			key, _, value = line.partition(" = ")
			values[key] = value
		try:
			config = ExperimentConfig.from_dict(values)
		except ConfigError as e:
			raise CheckpointError("{} carries an invalid config: {}".format(path, e)) from None
		if config.digest != header["config_digest"]:
			raise CheckpointError("{} config digest does not match its config".format(path))

		return cls(
			config, header["input_width"], header["output_width"], tensors, adam,
			header["step"], header["epoch"], header["epoch_step"], header["ema"],
			header["rng_state"], header["alphabet"], header["epoch_cell_total"],
		)
