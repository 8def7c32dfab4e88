"""Trains, evaluates and checks LSTM and LSTWM networks.

Usage:
  lstwm train --config PATH [--seed N] [--output DIR] [--resume CKPT] [--verbose]
  lstwm eval --checkpoint PATH [--config PATH] [--verbose]
  lstwm gradcheck [--cell KIND] [--activation ACT] [--width N] [--depth N] [--length N] [--batch N] [--eta ETA] [--seed N] [--epsilon EPS] [--verbose]
  lstwm inspect --checkpoint PATH
  lstwm (-h | --help)

Options:
  -h --help           Show this screen.
  --config PATH       Experiment config, flat `key = value` lines.
  --seed N            Seed override for train; the network seed for gradcheck.
  --output DIR        Output directory override.
  --resume CKPT       Continue the run this checkpoint was taken from.
  --checkpoint PATH   A checkpoint written by train.
  --cell KIND         lstm or lstwm [default: lstwm].
  --activation ACT    tanh or log [default: log].
  --width N           Layer width [default: 8].
  --depth N           Number of recurrent layers [default: 2].
  --length N          Sequence length [default: 12].
  --batch N           Batch size [default: 2].
  --eta ETA           Memory-cell and weight penalty [default: 1e-3].
  --epsilon EPS       Finite-difference step [default: 1e-5].
  --verbose           Log at DEBUG level.
"""

import json
import logging
import re
import sys
from typing import List, Optional

from docopt import DocoptExit, docopt

from .Cells import CellKind
from .Data import Corpus, MnistSet
from .Gradients import finite_diff_check, make_check_problem
from .Harness import Checkpoint, CheckpointError, ConfigError, ExperimentConfig, Trainer, TrainingDivergedError, evaluate
from .MathCore import ActivationKind
from .Optim import RegConfig

logger = logging.getLogger(__name__)

GRADCHECK_TOLERANCE = 1e-4
KNOWN_OPTIONS = set(re.findall(r"(?<![\w-])(--[a-z]+|-h)\b", __doc__))


class UsageError(ValueError):
	pass


def _int(args: dict, name: str) -> int:
	try:
		return int(args[name])
	except ValueError:
		raise UsageError("{} expects an integer, got {}".format(name, args[name])) from None


def _float(args: dict, name: str) -> float:
	try:
		return float(args[name])
	except ValueError:
		raise UsageError("{} expects a number, got {}".format(name, args[name])) from None


def _enum(kind, args: dict, name: str):
	try:
		return kind(args[name].lower() if kind is ActivationKind else args[name].upper())
	except ValueError:
		raise UsageError("{} does not accept {}".format(name, args[name])) from None


def run_train(args: dict) -> int:
	config = ExperimentConfig.from_file(args["--config"])
	changes = {}
	if args["--seed"] is not None:
		changes["seed"] = _int(args, "--seed")
	if args["--output"] is not None:
		changes["output_dir"] = args["--output"]
	if changes:
		config = config.evolve(**changes)
	checkpoint = Checkpoint.load(args["--resume"]) if args["--resume"] else None
	final = Trainer(config, checkpoint).train()
	print("trained {}: step {}, epoch {}".format(final.config.architecture, final.step, final.epoch))
	return 0


def run_eval(args: dict) -> int:
	checkpoint = Checkpoint.load(args["--checkpoint"])
	dataset = None
	if args["--config"]:
		config = ExperimentConfig.from_file(args["--config"])
		if config.task == "text":
			dataset = Corpus.from_file(config.corpus_path, config.corpus_limit)
		else:
			dataset = MnistSet.from_files(config.mnist_test_images, config.mnist_test_labels)
	record = evaluate(checkpoint, dataset)
	print("{} = {!r}".format(record.metric, record.value))
	if record.digit_accuracy is not None:
		print("digit_accuracy = {!r}".format(record.digit_accuracy))
	return 0


def run_gradcheck(args: dict) -> int:
	kind = _enum(CellKind, args, "--cell")
	activation = _enum(ActivationKind, args, "--activation")
	net, data = make_check_problem(
		kind, activation, _int(args, "--width"), _int(args, "--depth"), _int(args, "--length"),
		_int(args, "--batch"), _int(args, "--seed") if args["--seed"] is not None else 0,
	)
	epsilon = _float(args, "--epsilon")
	try:
		worst = finite_diff_check(net, data, epsilon, RegConfig(_float(args, "--eta")))
	except ValueError as e:
		raise UsageError(str(e)) from None
	print("{} max relative error: {:.3e}".format(net.spec.name, worst))
	return 0 if worst < GRADCHECK_TOLERANCE else 1


def run_inspect(args: dict) -> int:
	checkpoint = Checkpoint.load(args["--checkpoint"])
	print(json.dumps(checkpoint.metadata(), indent=2, sort_keys=True))
	return 0


COMMANDS = {
	"train": run_train,
	"eval": run_eval,
	"gradcheck": run_gradcheck,
	"inspect": run_inspect,
}


def _unknown_options(argv: List[str]) -> List[str]:
	return [arg.split("=", 1)[0] for arg in argv if arg.startswith("-") and arg.split("=", 1)[0] not in KNOWN_OPTIONS]


def main(argv: Optional[List[str]] = None) -> int:
	"""Runs one subcommand.

	Returns:
		int: 0 on success, 1 on a runtime failure or a failed gradient check, 2 on a usage error
	"""
	argv = sys.argv[1:] if argv is None else list(argv)
	try:
		args = docopt(__doc__, argv=argv)
	except DocoptExit as e:
		for option in _unknown_options(argv):
			print("unknown option: {}".format(option), file=sys.stderr)
		print(str(e), file=sys.stderr)
		return 2

	logging.basicConfig(
		level=logging.DEBUG if args.get("--verbose") else logging.INFO,
		format="%(asctime)s %(levelname)s %(name)s: %(message)s",
	)
	command = next(name for name in COMMANDS if args[name])
	try:
		return COMMANDS[command](args)
	except UsageError as e:
		logger.error("%s", e)
		return 2
	except FileNotFoundError as e:
		logger.error("file not found: %s", e.filename or str(e).replace("file not found: ", ""))
		return 1
	except (ConfigError, CheckpointError, TrainingDivergedError, ValueError, FloatingPointError) as e:
		logger.error("%s", e)
		return 1
