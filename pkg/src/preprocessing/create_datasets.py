import logging
import os
from preprocessing.events import load_events
from preprocessing.recording import ChannelKind, Recording, load_recording
from preprocessing.signal_processing import normalize_temporal, resample, select_channels
from preprocessing.windowing import Session, TrainingWindow, WindowingConfig, extract_windows, normalize_segment

logger = logging.getLogger(__name__)

RECORDING_SUFFIX = ".megr"
EVENTS_SUFFIX = ".events"


def preprocess_recording(rec: Recording, channel_kind: ChannelKind | str, frame_rate_hz: float) -> Recording:
	"""
	Session-level preprocessing: channel selection, resampling to the frame rate, then temporal z-scoring.
	"""
	selected = select_channels(rec, channel_kind)
	resampled = resample(selected, frame_rate_hz)
	return normalize_temporal(resampled)


def session_paths(stem: str) -> tuple[str, str]:
	"""
	Resolve a session stem (e.g. `data_synth/train`) to its recording and events paths.
	"""
	if stem.endswith(RECORDING_SUFFIX):
		stem = stem[: -len(RECORDING_SUFFIX)]
	return stem + RECORDING_SUFFIX, stem + EVENTS_SUFFIX


def load_session(stem: str, channel_kind: ChannelKind | str, frame_rate_hz: float) -> Session:
	recording_path, events_path = session_paths(stem)
	raw = load_recording(recording_path)
	events = load_events(events_path)
	recording = preprocess_recording(raw, channel_kind, frame_rate_hz)
	session_id = os.path.basename(stem)
	logger.info(
		f"Loaded session '{session_id}': {recording.n_channels} {ChannelKind.parse(channel_kind).name.lower()} "
		f"channels, {recording.n_samples} frames at {frame_rate_hz:g} Hz, {len(events)} speech intervals"
	)
	return Session(session_id=session_id, recording=recording, events=events)


def build_windows(session: Session, cfg: WindowingConfig, rng=None, training: bool = False) -> list[TrainingWindow]:
	windows = extract_windows(
		session.recording, session.events, cfg, rng=rng, training=training, session_id=session.session_id
	)
	return [normalize_segment(w) for w in windows]
