import math
from dataclasses import dataclass
import numpy as np


@dataclass(frozen=True)
class EventTrack:
	"""
	Speech intervals as half-open [onset_s, offset_s) pairs, sorted and non-overlapping.
	"""

	intervals: tuple[tuple[float, float], ...] = ()

	def __post_init__(self):
		intervals = tuple((float(onset), float(offset)) for onset, offset in self.intervals)
		previous_offset = 0.0
		for onset, offset in intervals:
			if not (math.isfinite(onset) and math.isfinite(offset)):
				raise ValueError(f"Interval ({onset}, {offset}) is not finite")
			if not 0 <= onset < offset:
				raise ValueError(f"Interval ({onset}, {offset}) violates 0 <= onset < offset")
			if onset < previous_offset:
				raise ValueError(f"Interval ({onset}, {offset}) overlaps or precedes the previous interval")
			previous_offset = offset
		object.__setattr__(self, "intervals", intervals)

	def __len__(self):
		return len(self.intervals)

	@property
	def onsets(self) -> np.ndarray:
		return np.array([onset for onset, _ in self.intervals], dtype=np.float64)

	@property
	def offsets(self) -> np.ndarray:
		return np.array([offset for _, offset in self.intervals], dtype=np.float64)


@dataclass(frozen=True)
class LabelVector:
	frame_rate_hz: float
	values: np.ndarray

	def __post_init__(self):
		values = np.array(self.values, dtype=np.uint8, copy=True).reshape(-1)
		if values.size and values.max() > 1:
			raise ValueError("Label vectors may only contain 0 and 1")
		values.flags.writeable = False
		object.__setattr__(self, "values", values)
		object.__setattr__(self, "frame_rate_hz", float(self.frame_rate_hz))

	def __len__(self):
		return self.values.shape[0]


def frame_centers(frame_rate_hz: float, n_frames: int) -> np.ndarray:
	return (np.arange(n_frames, dtype=np.float64) + 0.5) / frame_rate_hz


def rasterize_labels(events: EventTrack, frame_rate_hz: float, n_frames: int) -> LabelVector:
	"""
	Turn speech intervals into per-frame binary labels.

	Frame k is speech iff its center (k + 0.5) / frame_rate_hz lies in some [onset, offset).
	Intervals beyond the last frame are truncated.

	Args:
	    events (EventTrack): Speech intervals in seconds.
	    frame_rate_hz (float): Frame rate of the label vector.
	    n_frames (int): Number of frames to produce.

	Returns:
	    LabelVector: Binary labels of length n_frames.
	"""
	if n_frames < 1:
		raise ValueError(f"n_frames must be at least 1, got {n_frames}")

	centers = frame_centers(frame_rate_hz, n_frames)
	labels = np.zeros(n_frames, dtype=np.uint8)
	for onset, offset in events.intervals:
		start = np.searchsorted(centers, onset, side="left")
		end = np.searchsorted(centers, offset, side="left")
		labels[start:end] = 1

	return LabelVector(frame_rate_hz=frame_rate_hz, values=labels)


def load_events(path: str) -> EventTrack:
	"""
	Load an events file: one `onset_s<TAB>offset_s` interval per line, `#` lines are comments.
	"""
	intervals = []
	with open(path, "r", encoding="utf-8") as f:
		for line_number, line in enumerate(f, start=1):
			line = line.strip()
			if not line or line.startswith("#"):
				continue
			fields = line.split("\t")
			if len(fields) != 2:
				raise ValueError(f"{path}:{line_number}: expected 'onset<TAB>offset', got {line!r}")
			try:
				onset, offset = float(fields[0]), float(fields[1])
			except ValueError:
				raise ValueError(f"{path}:{line_number}: non-numeric interval {line!r}")
			if intervals and onset <= intervals[-1][0]:
				raise ValueError(f"{path}:{line_number}: onsets must be strictly increasing")
			intervals.append((onset, offset))

	return EventTrack(intervals=tuple(intervals))


def save_events(events: EventTrack, path: str):
	with open(path, "w", encoding="utf-8") as f:
		f.write("# onset_s\toffset_s\n")
		for onset, offset in events.intervals:
			f.write(f"{onset!r}\t{offset!r}\n")
