import logging
import math
import os
from dataclasses import dataclass
from utils.exceptions import NumericError

logger = logging.getLogger(__name__)

STORE_FILENAME = "store.tsv"


@dataclass(frozen=True)
class CheckpointEntry:
	validation_loss: float
	epoch: int
	path: str


class CheckpointStore:
	"""
	Keeps the `capacity` checkpoints with the lowest validation loss, ties broken by the earlier epoch.

	When `delete_evicted` is set, checkpoint files that drop out of the store are removed from disk.
	"""

	def __init__(self, capacity: int = 5, delete_evicted: bool = False):
		if capacity < 1:
			raise ValueError(f"Checkpoint store capacity must be at least 1, got {capacity}")
		self.capacity = capacity
		self.delete_evicted = delete_evicted
		self.entries: list[CheckpointEntry] = []

	def __len__(self):
		return len(self.entries)

	def __iter__(self):
		return iter(self.entries)

	def offer(self, validation_loss: float, epoch: int, path: str) -> bool:
		"""
		Offer a checkpoint to the store.

		Returns:
		    bool: True if the checkpoint was retained.
		"""
		if not math.isfinite(validation_loss):
			raise NumericError(f"Validation loss of epoch {epoch} is not finite: {validation_loss}")

		candidate = CheckpointEntry(validation_loss=float(validation_loss), epoch=epoch, path=path)
		entries = sorted(self.entries + [candidate], key=lambda e: (e.validation_loss, e.epoch))
		self.entries, evicted = entries[: self.capacity], entries[self.capacity :]

		for entry in evicted:
			if self.delete_evicted and os.path.exists(entry.path):
				os.remove(entry.path)
			logger.debug(f"Evicted checkpoint of epoch {entry.epoch} (validation loss {entry.validation_loss:.6f})")

		return candidate in self.entries

	def best(self) -> CheckpointEntry:
		if not self.entries:
			raise ValueError("Checkpoint store is empty")
		return self.entries[0]

	def save(self, path: str):
		"""
		Write store.tsv: one `epoch<TAB>validation_loss<TAB>checkpoint` line per entry, ascending loss.

		Checkpoint paths are written relative to the store file's directory.
		"""
		directory = os.path.dirname(os.path.abspath(path))
		with open(path, "w", encoding="utf-8") as f:
			for entry in self.entries:
				relative = os.path.relpath(os.path.abspath(entry.path), directory)
				f.write(f"{entry.epoch}\t{entry.validation_loss!r}\t{relative}\n")

	@classmethod
	def load(cls, path: str, capacity: int = 5) -> "CheckpointStore":
		directory = os.path.dirname(path)
		store = cls(capacity=capacity)
		with open(path, "r", encoding="utf-8") as f:
			for line in f:
				if not line.strip():
					continue
				epoch, validation_loss, checkpoint_path = line.rstrip("\n").split("\t")
				if not os.path.isabs(checkpoint_path):
					checkpoint_path = os.path.join(directory, checkpoint_path)
				store.offer(float(validation_loss), int(epoch), checkpoint_path)
		return store
