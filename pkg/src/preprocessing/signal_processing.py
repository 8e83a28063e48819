import math
import numpy as np
from preprocessing.recording import ChannelKind, Recording
from utils.exceptions import DegenerateInputError, EmptySelectionError

NORMALIZATION_EPSILON = 1e-8


def select_channels(rec: Recording, kind: ChannelKind | str) -> Recording:
	"""
	Keep only the channels of one kind, in their original order.

	Args:
	    rec (Recording): Source recording.
	    kind (ChannelKind | str): Channel kind to retain, e.g. "grad".

	Returns:
	    Recording: Recording with the matching rows only.
	"""
	kind = ChannelKind.parse(kind)
	rows = [i for i, channel in enumerate(rec.channels) if channel.kind == kind]
	if not rows:
		raise EmptySelectionError(f"Recording has no channels of kind '{kind.name.lower()}'")
	if len(rows) == rec.n_channels:
		return rec

	return Recording(
		sample_rate_hz=rec.sample_rate_hz,
		channels=tuple(rec.channels[i] for i in rows),
		data=rec.data[rows],
	)


def _round_half_up(value: float) -> int:
	return int(math.floor(value + 0.5))


def _moving_average(data: np.ndarray, width: int) -> tuple[np.ndarray, float]:
	"""
	Moving average along time, padded by odd reflection so linear trends pass the ends unchanged.

	Returns the filtered data and the time shift (in source samples) of each output sample's window center.
	"""
	left = width // 2
	right = width - 1 - left
	if data.shape[1] > 1:
		padded = np.pad(data, ((0, 0), (left, right)), mode="reflect", reflect_type="odd")
	else:
		padded = np.pad(data, ((0, 0), (left, right)), mode="edge")
	cumulative = np.cumsum(padded, axis=1, dtype=np.float64)
	cumulative = np.concatenate([np.zeros((data.shape[0], 1)), cumulative], axis=1)
	filtered = (cumulative[:, width:] - cumulative[:, :-width]) / width
	return filtered, (right - left) / 2


def _interp_extrapolate(target_times: np.ndarray, source_times: np.ndarray, values: np.ndarray) -> np.ndarray:
	"""Linear interpolation that continues the first and last source segments past the ends."""
	result = np.interp(target_times, source_times, values)
	if len(source_times) < 2:
		return result

	before = target_times < source_times[0]
	slope = (values[1] - values[0]) / (source_times[1] - source_times[0])
	result[before] = values[0] + slope * (target_times[before] - source_times[0])

	after = target_times > source_times[-1]
	slope = (values[-1] - values[-2]) / (source_times[-1] - source_times[-2])
	result[after] = values[-1] + slope * (target_times[after] - source_times[-1])
	return result


def resample(rec: Recording, target_hz: float) -> Recording:
	"""
	Resample every channel onto a uniform grid at `target_hz` anchored at t = 0.

	Downsampling first applies a moving-average low-pass of width round(rate / target_hz), then
	linearly interpolates. Grid points outside the source span continue the end segments linearly.
	Same-rate resampling returns the input unchanged.
	"""
	if not target_hz > 0:
		raise DegenerateInputError(f"Target rate must be positive, got {target_hz}")
	if target_hz == rec.sample_rate_hz:
		return rec

	n_out = _round_half_up(rec.n_samples * target_hz / rec.sample_rate_hz)
	if n_out < 1:
		raise DegenerateInputError(
			f"Resampling {rec.n_samples} samples from {rec.sample_rate_hz} Hz to {target_hz} Hz leaves no samples"
		)

	data = rec.data.astype(np.float64)
	shift = 0.0
	if target_hz < rec.sample_rate_hz:
		width = _round_half_up(rec.sample_rate_hz / target_hz)
		if width > 1:
			data, shift = _moving_average(data, width)

	source_times = (np.arange(rec.n_samples, dtype=np.float64) + shift) / rec.sample_rate_hz
	target_times = np.arange(n_out, dtype=np.float64) / target_hz
	resampled = np.empty((rec.n_channels, n_out), dtype=np.float64)
	for row in range(rec.n_channels):
		resampled[row] = _interp_extrapolate(target_times, source_times, data[row])

	return rec.with_data(resampled, sample_rate_hz=target_hz)


def zscore_rows(data: np.ndarray) -> np.ndarray:
	"""
	Z-score each row with the population standard deviation: (x - mean) / (std + 1e-8).
	"""
	values = np.asarray(data, dtype=np.float64)
	mean = values.mean(axis=1, keepdims=True)
	std = np.sqrt(((values - mean) ** 2).mean(axis=1, keepdims=True))
	return (values - mean) / (std + NORMALIZATION_EPSILON)


def normalize_temporal(rec: Recording) -> Recording:
	if rec.n_samples < 2:
		raise DegenerateInputError("Temporal normalization needs at least 2 samples")
	return rec.with_data(zscore_rows(rec.data))
