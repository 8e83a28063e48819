import logging
import math
import numpy as np
import torch
from architectures.mebm_speech import MEBMSpeech
from architectures.probabilities import ProbabilitySequence
from preprocessing.recording import Recording
from preprocessing.signal_processing import zscore_rows
from preprocessing.windowing import Session, WindowingConfig, window_starts
from utils.exceptions import ConfigError, DegenerateInputError, DimensionError

logger = logging.getLogger(__name__)


def merge_overlaps(windows: list[tuple[int, ProbabilitySequence]], session_len: int) -> ProbabilitySequence:
	"""
	Merge overlapping window predictions into one session-level trace.

	Each frame gets the arithmetic mean of every window covering it. Frames no window covers take the
	value of the nearest covered frame, the earlier one on a tie.

	Args:
	    windows (list[tuple[int, ProbabilitySequence]]): (start_frame, window probabilities) pairs.
	    session_len (int): Number of frames in the session.

	Returns:
	    ProbabilitySequence: The merged trace of length `session_len`.
	"""
	if not windows:
		raise DegenerateInputError("Cannot merge an empty list of window predictions")
	if session_len < 1:
		raise DegenerateInputError(f"Session length must be positive, got {session_len}")

	frame_rate_hz = windows[0][1].frame_rate_hz
	totals = np.zeros(session_len, dtype=np.float64)
	counts = np.zeros(session_len, dtype=np.int64)
	for start, probabilities in windows:
		if start < 0:
			raise DimensionError(f"Window start {start} is negative")
		stop = min(start + len(probabilities), session_len)
		if stop <= start:
			continue
		totals[start:stop] += probabilities.values[: stop - start]
		counts[start:stop] += 1

	covered = np.flatnonzero(counts)
	if covered.size == 0:
		raise DegenerateInputError(f"No window overlaps the {session_len}-frame session")

	merged = np.zeros(session_len, dtype=np.float64)
	merged[covered] = totals[covered] / counts[covered]
	if covered.size < session_len:
		frames = np.arange(session_len)
		# index of the first covered frame at or after each frame
		right = np.clip(np.searchsorted(covered, frames), 0, covered.size - 1)
		left = np.clip(right - 1, 0, covered.size - 1)
		use_left = np.abs(frames - covered[left]) <= np.abs(covered[right] - frames)
		nearest = np.where(use_left, covered[left], covered[right])
		merged = merged[nearest]

	return ProbabilitySequence(frame_rate_hz=frame_rate_hz, values=merged)


def resample_probs(p: ProbabilitySequence, target_hz: float) -> ProbabilitySequence:
	"""
	Linearly interpolate a trace onto a uniform grid at `target_hz` spanning the same time range.

	Both endpoints are kept: the output has round(span * target_hz) + 1 samples, where span is the
	time between the first and last input samples. Values are clipped to [0, 1].
	"""
	if len(p) < 2:
		raise DegenerateInputError(f"Resampling needs at least 2 probabilities, got {len(p)}")
	if not target_hz > 0:
		raise DegenerateInputError(f"Target rate must be positive, got {target_hz}")
	if target_hz == p.frame_rate_hz:
		return p

	span_s = (len(p) - 1) / p.frame_rate_hz
	n_out = int(math.floor(span_s * target_hz + 0.5)) + 1
	if n_out < 2:
		raise DegenerateInputError(f"A {span_s:g} s trace at {target_hz} Hz leaves {n_out} sample(s)")

	source_times = np.arange(len(p), dtype=np.float64) / p.frame_rate_hz
	target_times = np.linspace(0.0, span_s, n_out)
	values = np.clip(np.interp(target_times, source_times, p.values), 0.0, 1.0)
	return ProbabilitySequence(frame_rate_hz=target_hz, values=values)


def predict_session(
	model: MEBMSpeech, recording: Recording | Session, cfg: WindowingConfig, batch_size: int = 8
) -> ProbabilitySequence:
	"""
	Predict a whole preprocessed session: slide windows, normalize each, run the model, merge the overlaps.

	Args:
	    model (MEBMSpeech): Model in any mode; it is switched to evaluation mode.
	    recording (Recording | Session): Session signal, already at the frame rate.
	    cfg (WindowingConfig): Window length and step. Jitter is ignored.
	    batch_size (int, optional): Windows per forward pass. Defaults to 8.

	Returns:
	    ProbabilitySequence: One probability per session frame at the frame rate.
	"""
	if isinstance(recording, Session):
		recording = recording.recording
	if recording.sample_rate_hz != cfg.frame_rate_hz:
		raise ConfigError(
			f"Recording is at {recording.sample_rate_hz} Hz, inference expects {cfg.frame_rate_hz} Hz; resample first"
		)
	if recording.n_channels != model.config.c_in:
		raise ConfigError(f"Model expects {model.config.c_in} channels, recording has {recording.n_channels}")

	window = cfg.window_frames
	starts = window_starts(recording.n_samples, cfg)
	dtype = next(model.parameters()).dtype

	predictions = []
	with torch.no_grad():
		for offset in range(0, len(starts), batch_size):
			batch_starts = starts[offset : offset + batch_size]
			signals = np.stack([zscore_rows(recording.data[:, s : s + window]) for s in batch_starts])
			probabilities = model(torch.tensor(signals, dtype=dtype), training=False).double().numpy()
			predictions.extend(
				(start, ProbabilitySequence(frame_rate_hz=cfg.frame_rate_hz, values=row))
				for start, row in zip(batch_starts, probabilities)
			)

	logger.debug(f"Predicted {len(predictions)} windows over {recording.n_samples} frames")
	return merge_overlaps(predictions, recording.n_samples)
