import random
import numpy as np
import torch

SEED_STREAMS = {"init": 0, "shuffle": 1, "jitter": 2, "dropout": 3, "synth": 4}


def seed_everything(seed):
	"""
	Seed all the possible sources of randomness to ensure reproducibility.

	Args:
	    seed (int): The seed value to set.
	"""
	random.seed(seed)

	np.random.seed(seed)

	torch.manual_seed(seed)

	torch.backends.cudnn.deterministic = True
	torch.backends.cudnn.benchmark = False


def derive_seed(seed: int, stream: str, epoch: int = 0) -> int:
	"""
	Derive an independent seed for one named random stream (and epoch) from the run seed.

	Args:
	    seed (int): The run seed.
	    stream (str): One of init, shuffle, jitter, dropout, synth.
	    epoch (int, optional): Epoch number for per-epoch streams. Defaults to 0.

	Returns:
	    int: A 63-bit seed, identical for identical arguments.
	"""
	if stream not in SEED_STREAMS:
		raise ValueError(f"Unknown seed stream: {stream}")
	state = np.random.SeedSequence([seed, SEED_STREAMS[stream], epoch]).generate_state(2, dtype=np.uint32)
	return int((int(state[0]) << 31) ^ int(state[1]))
