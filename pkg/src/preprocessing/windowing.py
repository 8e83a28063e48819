import logging
from dataclasses import dataclass
import numpy as np
from preprocessing.events import EventTrack, LabelVector, rasterize_labels
from preprocessing.recording import Recording
from preprocessing.signal_processing import zscore_rows
from utils.exceptions import ConfigError, DegenerateInputError, DimensionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowingConfig:
	window_s: float = 12.0
	step_s: float = 6.0
	frame_rate_hz: float = 100.0
	jitter_frames: int = 2

	def __post_init__(self):
		if self.frame_rate_hz <= 0:
			raise ConfigError(f"frame_rate_hz must be positive, got {self.frame_rate_hz}")
		if not 0 < self.step_s <= self.window_s:
			raise ConfigError(f"Need 0 < step_s <= window_s, got step_s={self.step_s}, window_s={self.window_s}")
		if self.jitter_frames < 0:
			raise ConfigError(f"jitter_frames must be non-negative, got {self.jitter_frames}")
		if self.window_frames < 1 or self.step_frames < 1:
			raise ConfigError("Window and step must each span at least one frame")

	@property
	def window_frames(self) -> int:
		return int(round(self.window_s * self.frame_rate_hz))

	@property
	def step_frames(self) -> int:
		return int(round(self.step_s * self.frame_rate_hz))


@dataclass(frozen=True)
class TrainingWindow:
	start_frame: int
	signal: np.ndarray
	labels: LabelVector
	session_id: str = ""

	def __post_init__(self):
		if self.signal.ndim != 2 or self.signal.shape[1] != len(self.labels):
			raise DimensionError(
				f"Window signal shape {self.signal.shape} does not match {len(self.labels)} label frames"
			)

	@property
	def n_frames(self) -> int:
		return self.signal.shape[1]


@dataclass(frozen=True)
class Session:
	"""
	A preprocessed recording (already at the frame rate) together with its speech events.
	"""

	session_id: str
	recording: Recording
	events: EventTrack

	@property
	def n_frames(self) -> int:
		return self.recording.n_samples


def jitter_onsets(
	events: EventTrack, jitter_frames: int, frame_rate_hz: float, rng: np.random.Generator
) -> EventTrack:
	"""
	Shift every onset by an integer number of frames drawn uniformly from [-jitter_frames, +jitter_frames].

	Offsets stay put. A shifted onset is clamped to [0, offset - 1 frame] and to not precede the
	previous interval's offset, so the track remains sorted and non-overlapping.

	Args:
	    events (EventTrack): Source intervals.
	    jitter_frames (int): Maximum shift in frames.
	    frame_rate_hz (float): Frame rate that defines the frame length.
	    rng (np.random.Generator): Random stream, one draw per interval.

	Returns:
	    EventTrack: The jittered track.
	"""
	if jitter_frames == 0 or len(events) == 0:
		return events

	frame = 1.0 / frame_rate_hz
	shifts = rng.integers(-jitter_frames, jitter_frames + 1, size=len(events))
	intervals = []
	previous_offset = 0.0
	for (onset, offset), shift in zip(events.intervals, shifts):
		shifted = onset + int(shift) * frame
		shifted = min(shifted, offset - frame)
		shifted = max(shifted, 0.0, previous_offset)
		intervals.append((shifted, offset))
		previous_offset = offset

	return EventTrack(intervals=tuple(intervals))


def window_starts(n_frames: int, cfg: WindowingConfig) -> list[int]:
	window, step = cfg.window_frames, cfg.step_frames
	if n_frames < window:
		raise DegenerateInputError(f"Session has {n_frames} frames, shorter than one {window}-frame window")
	count = (n_frames - window) // step + 1
	return [i * step for i in range(count)]


def extract_windows(
	rec: Recording,
	events: EventTrack,
	cfg: WindowingConfig,
	rng: np.random.Generator = None,
	training: bool = True,
	session_id: str = "",
) -> list[TrainingWindow]:
	"""
	Slice a session into fixed windows at 0, step, 2*step, ... and attach frame labels.

	In training mode each window gets labels rasterized from its own freshly jittered copy of the
	events, in evaluation mode the events are used as is. Trailing partial windows are dropped.
	"""
	if rec.sample_rate_hz != cfg.frame_rate_hz:
		raise ConfigError(
			f"Recording is at {rec.sample_rate_hz} Hz, windowing expects {cfg.frame_rate_hz} Hz; resample first"
		)
	if training and cfg.jitter_frames > 0 and rng is None:
		raise ValueError("Training-mode windowing with jitter needs a random stream")

	n_frames = rec.n_samples
	window = cfg.window_frames
	starts = window_starts(n_frames, cfg)

	session_labels = None
	if not training or cfg.jitter_frames == 0:
		session_labels = rasterize_labels(events, cfg.frame_rate_hz, n_frames).values

	windows = []
	for start in starts:
		if session_labels is None:
			jittered = jitter_onsets(events, cfg.jitter_frames, cfg.frame_rate_hz, rng)
			labels = rasterize_labels(jittered, cfg.frame_rate_hz, n_frames).values[start : start + window]
		else:
			labels = session_labels[start : start + window]
		windows.append(
			TrainingWindow(
				start_frame=start,
				signal=rec.data[:, start : start + window],
				labels=LabelVector(frame_rate_hz=cfg.frame_rate_hz, values=labels),
				session_id=session_id,
			)
		)

	logger.debug(f"Extracted {len(windows)} windows from session '{session_id}' ({n_frames} frames)")
	return windows


def normalize_segment(w: TrainingWindow) -> TrainingWindow:
	if w.n_frames < 2:
		raise DegenerateInputError("Segment normalization needs at least 2 frames")
	signal = zscore_rows(w.signal).astype(np.float32)
	signal.flags.writeable = False
	return TrainingWindow(start_frame=w.start_frame, signal=signal, labels=w.labels, session_id=w.session_id)
