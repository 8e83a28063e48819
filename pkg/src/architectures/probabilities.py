from dataclasses import dataclass
import numpy as np

TRACE_HEADER_KEY = "rate_hz"


@dataclass(frozen=True)
class ProbabilitySequence:
	"""
	Per-frame speech probabilities at `frame_rate_hz`, optionally with the threshold applied to them.
	"""

	frame_rate_hz: float
	values: np.ndarray
	threshold: float | None = None

	def __post_init__(self):
		values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
		values.flags.writeable = False
		object.__setattr__(self, "values", values)
		object.__setattr__(self, "frame_rate_hz", float(self.frame_rate_hz))

	def __len__(self):
		return self.values.shape[0]


def save_trace(trace: ProbabilitySequence, path: str, integer_values: bool = False):
	"""
	Write a trace file: a `rate_hz=<float>` header, then one value per line.

	Probabilities are written with 6 decimal places, binary segmentations as 0/1 when `integer_values` is set.
	"""
	lines = [f"{TRACE_HEADER_KEY}={trace.frame_rate_hz!r}"]
	if integer_values:
		lines.extend(str(int(value)) for value in trace.values)
	else:
		lines.extend(f"{value:.6f}" for value in trace.values)

	with open(path, "w", encoding="utf-8") as f:
		f.write("\n".join(lines) + "\n")


def load_trace(path: str) -> ProbabilitySequence:
	with open(path, "r", encoding="utf-8") as f:
		header = f.readline().strip()
		key, _, rate = header.partition("=")
		if key != TRACE_HEADER_KEY:
			raise ValueError(f"{path}: expected a '{TRACE_HEADER_KEY}=<float>' header, got {header!r}")
		values = [float(line) for line in f if line.strip()]

	return ProbabilitySequence(frame_rate_hz=float(rate), values=np.array(values, dtype=np.float64))
