from typing import Iterator, Optional, Tuple

import attr
import numpy as np

from ..MathCore import SeededRng, log_act
from .IdxFile import MnistSet

IMAGE_SIDE = 28
NOISE_SCALE = 1e-5
# separable binomial approximation of a 3x3 Gaussian
BLUR_KERNEL = np.array([1.0, 2.0, 1.0]) / 4.0


def blur(img: np.ndarray) -> np.ndarray:
	"""3x3 Gaussian blur, applied as a [1, 2, 1] / 4 pass along each axis with reflected borders."""
	for axis in (0, 1):
		padded = np.pad(img, [(1, 1) if a == axis else (0, 0) for a in (0, 1)], mode="reflect")
		lo = [slice(None)] * 2
		mid = [slice(None)] * 2
		hi = [slice(None)] * 2
		n = img.shape[axis]
		lo[axis], mid[axis], hi[axis] = slice(0, n), slice(1, n + 1), slice(2, n + 2)
		img = BLUR_KERNEL[0] * padded[tuple(lo)] + BLUR_KERNEL[1] * padded[tuple(mid)] + BLUR_KERNEL[2] * padded[tuple(hi)]
	return img


def preprocess_digit(img: np.ndarray, rng: Optional[SeededRng], noise_scale: float = NOISE_SCALE, smooth: bool = True) -> np.ndarray:
	"""Noise, blur, per-image mean subtraction and log squashing, in that order.

	Args:
		img (np.ndarray): 28x28 image with pixels in [0, 1]
		rng (Optional[SeededRng]): Stream for the noise. Unused when `noise_scale` is 0.
		noise_scale (float, optional): Standard-normal draws are multiplied by this. Defaults to 1e-5.
		smooth (bool, optional): Apply the blur. Defaults to True.

	Returns:
		np.ndarray: The preprocessed image
	"""
	out = np.asarray(img, dtype=np.float64)
	if noise_scale > 0:
		out = out + rng.normal(out.shape, noise_scale)
	if smooth:
		out = blur(out)
	out = out - out.mean()
	return log_act(out)


def sum_digit_count(k: int) -> int:
	"""Decimal digits of the largest possible sum of `k` digits."""
	return len(str(9 * k))


def sum_digits(value: int, width: int) -> np.ndarray:
	"""The decimal digits of `value`, most significant first, zero-padded to `width`."""
	return np.array([int(d) for d in str(value).zfill(width)], dtype=np.int64)


@attr.s(auto_attribs=True, eq=False)
class ComboSequence:
	"""One sample of the digit-combo task.

	`columns` holds the 28k image columns followed by P + 1 zero placeholders, P being
	the digit count of the largest possible sum. `targets` has one entry per column and
	is -1 wherever `mask` is zero. `picks` are the pool indices of the images.
	"""
	columns: np.ndarray
	mask: np.ndarray
	targets: np.ndarray
	total: int
	labels: np.ndarray
	picks: np.ndarray

	@property
	def answer(self) -> np.ndarray:
		"""The target digits of the final sum."""
		return self.targets[-sum_digit_count(len(self.labels)):]


def make_combo_sequence(mnist: MnistSet, k: int, rng: SeededRng, noise_scale: float = NOISE_SCALE,
		smooth: bool = True, running_sum: bool = False, picks: Optional[np.ndarray] = None) -> ComboSequence:
	"""Concatenates `k` digit images horizontally and presents the strip
	column by column, supervised by the decimal digits of the digits' sum.

	Args:
		mnist (MnistSet): The image pool
		k (int): Number of digit images, 1 for plain digit recognition
		rng (SeededRng): Stream for the draws and the preprocessing noise
		noise_scale (float, optional): Defaults to 1e-5.
		smooth (bool, optional): Blur the images. Defaults to True.
		running_sum (bool, optional): Also supervise the running sum over the last P columns
		of every image but the final one. Defaults to False.
		picks (Optional[np.ndarray], optional): Pool indices of the `k` images. Drawn
		uniformly from `rng` when None. Defaults to None.

	Raises:
		ValueError: If k < 1, or `picks` does not hold k indices into the pool

	Returns:
		ComboSequence: The sample
	"""
	if k < 1:
		raise ValueError("A combo sequence needs at least one digit, got {}".format(k))
	if picks is None:
		picks = rng.integers(0, len(mnist), k)
	elif len(picks) != k or np.min(picks) < 0 or np.max(picks) >= len(mnist):
		raise ValueError("Picks {} are not {} indices into a pool of {} images".format(list(picks), k, len(mnist)))
	labels = mnist.labels[picks]
	images = [preprocess_digit(mnist.images[i], rng, noise_scale, smooth) for i in picks]
	p = sum_digit_count(k)

	strip = np.concatenate(images, axis=1)
	columns = np.concatenate([strip.T, np.zeros((p + 1, IMAGE_SIDE))], axis=0)
	steps = len(columns)
	mask = np.zeros(steps)
	targets = np.full(steps, -1, dtype=np.int64)
	total = int(labels.sum())
	mask[-p:] = 1.0
	targets[-p:] = sum_digits(total, p)
	if running_sum:
		for j in range(k - 1):
			end = IMAGE_SIDE * (j + 1)
			mask[end - p:end] = 1.0
			targets[end - p:end] = sum_digits(int(labels[:j + 1].sum()), p)
	return ComboSequence(columns, mask, targets, total, labels, np.asarray(picks))


def make_combo_batch(mnist: MnistSet, k: int, batch: int, rng: SeededRng, **options) -> Tuple[np.ndarray, np.ndarray, np.ndarray, list]:
	"""Stacks `batch` fresh combo sequences.

	Returns:
		Tuple[np.ndarray, np.ndarray, np.ndarray, list]: Inputs (time, batch, 28), targets
		(time, batch), the shared mask (time,), and the sequences
	"""
	sequences = [make_combo_sequence(mnist, k, rng, **options) for _ in range(batch)]
	inputs = np.stack([s.columns for s in sequences], axis=1)
	targets = np.stack([s.targets for s in sequences], axis=1)
	return inputs, targets, sequences[0].mask, sequences


def combo_test_set(mnist: MnistSet, k: int, count: int, seed: int, **options) -> Iterator[ComboSequence]:
	"""A fixed set of `count` combo sequences, generated lazily from its own seed. Every call
	yields the same sequences.

	With one digit the sequences walk the test images in index order, so a `count` equal
	to the pool size scores every image exactly once. With more digits each slot draws
	from its own seeded permutation of the pool, reshuffled once it is used up, so no
	image repeats within a slot before the whole pool has been seen.
	"""
	rng = SeededRng(seed)
	n = len(mnist)
	orders = None
	for j in range(count):
		if k == 1:
			picks = np.array([j % n])
		else:
			if j % n == 0:
				orders = [rng.permutation(n) for _ in range(k)]
			picks = np.array([order[j % n] for order in orders])
		yield make_combo_sequence(mnist, k, rng, picks=picks, **options)
