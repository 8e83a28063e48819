import numpy as np
import pytest
from architectures.mebm_speech import ModelConfig, init_params, predict_probabilities
from architectures.probabilities import ProbabilitySequence
from inference.session_inference import merge_overlaps, predict_session, resample_probs
from preprocessing.recording import ChannelKind, ChannelMeta, Recording
from preprocessing.signal_processing import zscore_rows
from preprocessing.windowing import WindowingConfig
from utils.exceptions import ConfigError, DegenerateInputError


def window(values, rate=100.0):
	return ProbabilitySequence(frame_rate_hz=rate, values=values)


@pytest.fixture
def tiny_model():
	cfg = ModelConfig(c_in=3, d=4, n_bm=1, n_ms=2, lstm_hidden=2, pool_window=7, pool_stride=3)
	return init_params(cfg, seed=0)


@pytest.fixture
def recording():
	channels = tuple(ChannelMeta(f"G{i}", ChannelKind.GRAD) for i in range(3))
	data = np.random.default_rng(0).standard_normal((3, 230)) * 3.0 + 1.0
	return Recording(sample_rate_hz=100.0, channels=channels, data=data)


def test_merge_averages_overlapping_windows():
	merged = merge_overlaps([(0, window([0.2, 0.2, 0.2])), (1, window([0.6, 0.6, 0.6]))], 4)
	np.testing.assert_allclose(merged.values, [0.2, 0.4, 0.4, 0.6])


def test_merge_non_overlapping_tiling_is_concatenation():
	merged = merge_overlaps([(0, window([0.1, 0.2])), (2, window([0.3, 0.4]))], 4)
	np.testing.assert_array_equal(merged.values, [0.1, 0.2, 0.3, 0.4])


def test_merge_default_geometry_coverage():
	windows = [(0, window(np.full(1200, 0.2))), (600, window(np.full(1200, 0.6)))]
	merged = merge_overlaps(windows, 1800).values

	np.testing.assert_allclose(merged[:600], 0.2)
	np.testing.assert_allclose(merged[600:1200], 0.4)
	np.testing.assert_allclose(merged[1200:], 0.6)


def test_merge_fills_uncovered_frames_from_nearest():
	merged = merge_overlaps([(0, window([0.1, 0.2])), (5, window([0.7, 0.8]))], 9).values
	# frame 3 is equally far from frames 1 and 5 and takes the earlier one
	np.testing.assert_allclose(merged, [0.1, 0.2, 0.2, 0.2, 0.7, 0.7, 0.8, 0.8, 0.8])


def test_merge_stays_within_contributing_range():
	rng = np.random.default_rng(0)
	for _ in range(50):
		session_len = int(rng.integers(10, 60))
		length = int(rng.integers(2, 10))
		windows = [(start, window(rng.random(length))) for start in range(0, session_len - length + 1, 3)]
		merged = merge_overlaps(windows, session_len).values
		for frame in range(session_len):
			covering = [p.values[frame - s] for s, p in windows if s <= frame < s + length]
			if covering:
				assert min(covering) - 1e-12 <= merged[frame] <= max(covering) + 1e-12


def test_merge_empty_list_raises():
	with pytest.raises(DegenerateInputError):
		merge_overlaps([], 10)


def test_resample_probs_same_rate_is_identity():
	p = window([0.1, 0.5, 0.9])
	assert resample_probs(p, 100.0) is p


def test_resample_probs_endpoint_aligned():
	resampled = resample_probs(window([0.0, 1.0], rate=1.0), 4.0)
	assert resampled.frame_rate_hz == 4.0
	np.testing.assert_allclose(resampled.values, [0.0, 0.25, 0.5, 0.75, 1.0])


def test_resample_probs_constant_trace():
	resampled = resample_probs(window(np.full(101, 0.3)), 250.0)
	assert len(resampled) == 251
	np.testing.assert_allclose(resampled.values, 0.3)


def test_resample_probs_degenerate_inputs():
	with pytest.raises(DegenerateInputError):
		resample_probs(window([0.5]), 50.0)
	with pytest.raises(DegenerateInputError):
		resample_probs(window([0.0, 1.0]), 10.0)


def test_predict_session_merges_normalized_windows(tiny_model, recording):
	cfg = WindowingConfig(window_s=0.6, step_s=0.3, jitter_frames=0)
	trace = predict_session(tiny_model, recording, cfg)

	expected = merge_overlaps(
		[
			(start, predict_probabilities(tiny_model, zscore_rows(recording.data[:, start : start + 60]).astype(np.float32)))
			for start in range(0, 171, 30)
		],
		230,
	)
	assert len(trace) == 230
	assert np.all((trace.values >= 0) & (trace.values <= 1))
	np.testing.assert_allclose(trace.values, expected.values, atol=1e-6)


def test_predict_session_checks_rate_and_channels(tiny_model, recording):
	with pytest.raises(ConfigError):
		predict_session(tiny_model, recording, WindowingConfig(window_s=0.6, step_s=0.3, frame_rate_hz=50.0))

	two_channels = Recording(sample_rate_hz=100.0, channels=recording.channels[:2], data=recording.data[:2])
	with pytest.raises(ConfigError):
		predict_session(tiny_model, two_channels, WindowingConfig(window_s=0.6, step_s=0.3))
