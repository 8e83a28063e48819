import numpy as np
import pytest
from preprocessing.events import EventTrack, frame_centers, rasterize_labels
from preprocessing.recording import ChannelKind, ChannelMeta, Recording
from preprocessing.windowing import (
	WindowingConfig,
	extract_windows,
	jitter_onsets,
	normalize_segment,
	window_starts,
)
from utils.exceptions import ConfigError, DegenerateInputError

FRAME_RATE = 100.0


def random_track(rng, duration_s=30.0):
	intervals = []
	t = rng.uniform(0.0, 0.5)
	while True:
		onset = t + rng.uniform(0.02, 1.0)
		offset = onset + rng.uniform(0.02, 2.0)
		if offset > duration_s:
			break
		intervals.append((onset, offset))
		t = offset
	return EventTrack(intervals=tuple(intervals))


def make_session(n_frames, n_channels=2, seed=0):
	rng = np.random.default_rng(seed)
	channels = tuple(ChannelMeta(name=f"G{i}", kind=ChannelKind.GRAD) for i in range(n_channels))
	return Recording(sample_rate_hz=FRAME_RATE, channels=channels, data=rng.standard_normal((n_channels, n_frames)))


@pytest.fixture
def small_config():
	return WindowingConfig(window_s=0.4, step_s=0.2, frame_rate_hz=FRAME_RATE, jitter_frames=2)


def test_default_windowing_config():
	cfg = WindowingConfig()
	assert (cfg.window_frames, cfg.step_frames, cfg.jitter_frames) == (1200, 600, 2)


@pytest.mark.parametrize(
	"kwargs", [{"step_s": 0.0}, {"step_s": 13.0}, {"frame_rate_hz": 0.0}, {"jitter_frames": -1}]
)
def test_windowing_config_rejects_invalid_values(kwargs):
	with pytest.raises(ConfigError):
		WindowingConfig(**kwargs)


def test_window_starts():
	assert window_starts(1800, WindowingConfig()) == [0, 600]
	assert window_starts(1200, WindowingConfig()) == [0]
	assert window_starts(2999, WindowingConfig()) == [0, 600, 1200]


def test_window_starts_short_session_raises():
	with pytest.raises(DegenerateInputError):
		window_starts(1199, WindowingConfig())


def test_jitter_zero_returns_events_unchanged():
	track = random_track(np.random.default_rng(0))
	assert jitter_onsets(track, 0, FRAME_RATE, np.random.default_rng(1)) is track


@pytest.mark.parametrize("seed", range(50))
def test_jittered_labels_differ_only_near_onsets(seed):
	rng = np.random.default_rng(seed)
	track = random_track(rng)
	n_frames = 3000
	jittered = jitter_onsets(track, 2, FRAME_RATE, rng)

	np.testing.assert_array_equal(jittered.offsets, track.offsets)
	original = rasterize_labels(track, FRAME_RATE, n_frames).values
	shifted = rasterize_labels(jittered, FRAME_RATE, n_frames).values
	onset_frames = np.searchsorted(frame_centers(FRAME_RATE, n_frames), track.onsets)

	for frame in np.flatnonzero(original != shifted):
		assert np.min(np.abs(onset_frames - frame)) <= 2


def test_jitter_draws_every_shift_in_range():
	track = EventTrack(intervals=((1.0, 2.0),))
	rng = np.random.default_rng(7)
	shifts = {
		int(round((jitter_onsets(track, 2, FRAME_RATE, rng).onsets[0] - 1.0) * FRAME_RATE)) for _ in range(200)
	}
	assert shifts == {-2, -1, 0, 1, 2}


def test_jitter_shifts_are_uniform():
	track = EventTrack(intervals=tuple((float(i), i + 0.5) for i in range(1, 10_001)))
	jittered = jitter_onsets(track, 2, FRAME_RATE, np.random.default_rng(0))
	shifts = np.round((jittered.onsets - track.onsets) * FRAME_RATE).astype(int)

	assert len(shifts) == 10_000
	for shift in (-2, -1, 0, 1, 2):
		assert np.mean(shifts == shift) == pytest.approx(0.2, abs=0.02)


def test_jitter_keeps_at_least_one_labeled_frame():
	# onsets may move up to offset - 1 frame inclusive
	track = EventTrack(intervals=((1.0, 1.01),))
	onsets = set()
	for seed in range(50):
		jittered = jitter_onsets(track, 2, FRAME_RATE, np.random.default_rng(seed))
		onsets.add(round(jittered.onsets[0] * FRAME_RATE))
		assert rasterize_labels(jittered, FRAME_RATE, 200).values.sum() >= 1

	assert max(onsets) == 100


def test_jitter_keeps_track_valid_at_boundaries():
	# onset at 0 and intervals one frame long touching each other
	track = EventTrack(intervals=((0.0, 0.01), (0.01, 0.02), (0.02, 0.5)))
	for seed in range(20):
		jittered = jitter_onsets(track, 2, FRAME_RATE, np.random.default_rng(seed))
		assert jittered.onsets.min() >= 0.0
		assert np.all(jittered.onsets < jittered.offsets)


def test_evaluation_windows_are_jitter_free(small_config):
	rec = make_session(100)
	track = EventTrack(intervals=((0.1, 0.3), (0.55, 0.9)))
	windows = extract_windows(rec, track, small_config, training=False, session_id="val")
	labels = rasterize_labels(track, FRAME_RATE, 100).values

	assert [w.start_frame for w in windows] == [0, 20, 40, 60]
	for w in windows:
		assert w.session_id == "val"
		np.testing.assert_array_equal(w.labels.values, labels[w.start_frame : w.start_frame + 40])
		np.testing.assert_array_equal(w.signal, rec.data[:, w.start_frame : w.start_frame + 40])


def test_training_windows_are_rejittered_per_window(small_config):
	rec = make_session(100)
	track = EventTrack(intervals=((0.1, 0.3), (0.55, 0.9)))
	rng = np.random.default_rng(3)
	windows = extract_windows(rec, track, small_config, rng=rng, training=True)
	clean = rasterize_labels(track, FRAME_RATE, 100).values

	for w in windows:
		differing = np.flatnonzero(w.labels.values != clean[w.start_frame : w.start_frame + 40]) + w.start_frame
		assert all(min(abs(frame - 10), abs(frame - 55)) <= 2 for frame in differing)


def test_training_windows_are_reproducible(small_config):
	rec = make_session(100)
	track = EventTrack(intervals=((0.1, 0.3), (0.55, 0.9)))
	first = extract_windows(rec, track, small_config, rng=np.random.default_rng(5))
	second = extract_windows(rec, track, small_config, rng=np.random.default_rng(5))

	for a, b in zip(first, second):
		np.testing.assert_array_equal(a.labels.values, b.labels.values)


def test_training_windows_need_random_stream(small_config):
	with pytest.raises(ValueError):
		extract_windows(make_session(100), EventTrack(), small_config, training=True)


def test_extract_windows_requires_frame_rate(small_config):
	rec = Recording(
		sample_rate_hz=250.0, channels=(ChannelMeta("G", ChannelKind.GRAD),), data=np.zeros((1, 400))
	)
	with pytest.raises(ConfigError):
		extract_windows(rec, EventTrack(), small_config, training=False)


def test_normalize_segment(small_config):
	rec = make_session(100)
	rec = rec.with_data(rec.data * 5.0 + 2.0)
	window = extract_windows(rec, EventTrack(), small_config, training=False)[1]
	normalized = normalize_segment(window)

	assert normalized.start_frame == window.start_frame
	assert normalized.signal.dtype == np.float32
	np.testing.assert_allclose(normalized.signal.mean(axis=1), 0.0, atol=1e-5)
	np.testing.assert_allclose(normalized.signal.std(axis=1), 1.0, atol=1e-5)
	np.testing.assert_array_equal(normalized.labels.values, window.labels.values)
