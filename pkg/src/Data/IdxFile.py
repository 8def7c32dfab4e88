import gzip
import logging
import struct
from enum import Enum

import numpy as np

logger = logging.getLogger(__name__)

# refuse headers that declare more than this many payload bytes
MAX_PAYLOAD = 2 ** 31


class IdxError(ValueError):
	"""Base class of the IDX parsing errors."""


class BadMagicError(IdxError):
	pass


class TruncatedPayloadError(IdxError):
	pass


class DimensionOverflowError(IdxError):
	pass


class LabelRangeError(IdxError):
	pass


class IdxMagic(Enum):
	"""An enum class containing the magic numbers of the supported IDX files.
	"""
	LABELS = 0x00000801
	IMAGES = 0x00000803


def parse_idx(data: bytes) -> np.ndarray:
	"""Parses an IDX container of unsigned bytes.

	The header is big-endian: a 32-bit magic number (2051 for images, 2049 for labels)
	followed by one 32-bit size per dimension.

	Args:
		data (bytes): The file contents, already decompressed

	Raises:
		BadMagicError: If the magic number is neither images nor labels
		TruncatedPayloadError: If the header or the payload is shorter than declared
		DimensionOverflowError: If the declared dimensions exceed the payload limit
		LabelRangeError: If a label is not a digit

	Returns:
		np.ndarray: Images of shape (count, rows, cols) scaled to [0, 1], or labels of shape (count,)
	"""
	if len(data) < 4:
		raise TruncatedPayloadError("IDX header is truncated: {} bytes".format(len(data)))
	magic = struct.unpack(">I", data[:4])[0]
	try:
		kind = IdxMagic(magic)
	except ValueError:
		raise BadMagicError("bad magic {} (expected 2049 or 2051)".format(magic)) from None
	ndim = 3 if kind == IdxMagic.IMAGES else 1
	header = 4 + 4 * ndim
	if len(data) < header:
		raise TruncatedPayloadError("IDX header is truncated: {} bytes, expected {}".format(len(data), header))
	dims = struct.unpack(">" + "I" * ndim, data[4:header])
	size = int(np.prod(dims, dtype=object))
	if size > MAX_PAYLOAD:
		raise DimensionOverflowError("IDX dimensions {} declare {} bytes, more than {}".format(dims, size, MAX_PAYLOAD))
	if len(data) - header < size:
		raise TruncatedPayloadError("IDX payload is truncated: {} bytes, expected {}".format(len(data) - header, size))

	payload = np.frombuffer(data, dtype=np.uint8, count=size, offset=header).reshape(dims)
	if kind == IdxMagic.LABELS:
		if np.any(payload > 9):
			raise LabelRangeError("label out of range: {}".format(int(payload.max())))
		return payload.astype(np.int64)
	return payload.astype(np.float64) / 255.0


def read_idx(path: str) -> np.ndarray:
	"""Reads and parses an IDX file, gzip-compressed if the name ends in `.gz`."""
	opener = gzip.open if str(path).endswith(".gz") else open
	with opener(path, "rb") as f:
		return parse_idx(f.read())


class MnistSet:
	"""28x28 grayscale digit images in [0, 1] with their labels.
	"""

	def __init__(self, images: np.ndarray, labels: np.ndarray):
		if images.ndim != 3 or len(images) != len(labels):
			raise ValueError("Got images of shape {} for {} labels".format(images.shape, len(labels)))
		if images.size and (images.min() < 0.0 or images.max() > 1.0):
			raise ValueError("Pixels must lie in [0, 1]")
		self.images = images
		self.labels = np.asarray(labels, dtype=np.int64)

	def __repr__(self):
		return f"<MnistSet count={len(self)}, dims={self.images.shape[1:]}>"

	def __len__(self):
		return len(self.labels)

	@classmethod
	def from_files(cls, images_path: str, labels_path: str):
		mnist = cls(read_idx(images_path), read_idx(labels_path))
		logger.info("Loaded %s from %s", mnist, images_path)
		return mnist
