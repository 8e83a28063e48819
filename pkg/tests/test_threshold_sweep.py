import random
import numpy as np
import pytest
from architectures.checkpoint import load_checkpoint, save_checkpoint
from architectures.mebm_speech import ModelConfig, init_params
from architectures.probabilities import ProbabilitySequence
from evaluation.metrics import apply_threshold, f1_macro
from evaluation.threshold_sweep import (
	THRESHOLDS,
	CandidateTrace,
	Selection,
	load_selection,
	save_selection,
	save_sweep_table,
	select_best,
	select_best_from_traces,
	sweep_thresholds,
)
from inference.session_inference import predict_session
from preprocessing.events import EventTrack, rasterize_labels
from preprocessing.recording import ChannelKind, ChannelMeta, Recording
from preprocessing.windowing import Session, WindowingConfig
from training.checkpoint_store import CheckpointStore


def brute_force(candidates):
	best = None
	for candidate in candidates:
		for tau in THRESHOLDS:
			score = f1_macro(apply_threshold(ProbabilitySequence(100.0, candidate.probabilities), tau), candidate.truth)
			key = (-score, candidate.validation_loss, tau, candidate.epoch)
			if best is None or key < best[0]:
				best = (key, candidate.checkpoint, tau, score)
	return best


def random_candidates(rng, n):
	n_frames = rng.randint(2, 40)
	truth = np.array([rng.randint(0, 1) for _ in range(n_frames)])
	return [
		CandidateTrace(
			checkpoint=f"ckpt_epoch_{epoch}.mebm",
			validation_loss=rng.choice([0.1, 0.2, 0.3]),
			probabilities=np.array([rng.randint(0, 20) / 20 for _ in range(n_frames)]),
			truth=truth,
			epoch=epoch,
		)
		for epoch in range(1, n + 1)
	]


def test_threshold_grid():
	assert len(THRESHOLDS) == 99
	assert THRESHOLDS[0] == 0.01 and THRESHOLDS[-1] == 0.99
	assert list(THRESHOLDS) == sorted(THRESHOLDS)


def test_sweep_perfect_band():
	sweep = sweep_thresholds(ProbabilitySequence(100.0, [0.2, 0.4, 0.6, 0.8]), np.array([0, 0, 1, 1]))
	perfect = [round(tau, 2) for tau, f1 in sweep if f1 == 1.0]

	assert len(sweep) == 99
	assert perfect == [round(k / 100, 2) for k in range(41, 61)]
	assert all(f1 < 1.0 for tau, f1 in sweep if round(tau, 2) not in perfect)


def test_sweep_constant_probability():
	sweep = dict(sweep_thresholds(ProbabilitySequence(100.0, [0.5] * 4), np.ones(4, dtype=int)))
	assert all(f1 == 0.5 for tau, f1 in sweep.items() if tau <= 0.5)
	assert all(f1 == 0.0 for tau, f1 in sweep.items() if tau > 0.5)


def test_sweep_matches_brute_force():
	rng = np.random.default_rng(0)
	for _ in range(100):
		n = int(rng.integers(1, 50))
		p = ProbabilitySequence(100.0, np.round(rng.random(n), 3))
		truth = rng.integers(0, 2, n)
		for tau, score in sweep_thresholds(p, truth):
			assert score == f1_macro(apply_threshold(p, tau), truth)


def test_select_single_checkpoint_reduces_to_sweep_argmax():
	candidate = CandidateTrace("a", 0.2, np.array([0.2, 0.4, 0.6, 0.8]), np.array([0, 0, 1, 1]), epoch=1)
	selection, sweeps = select_best_from_traces([candidate])

	assert selection == Selection(checkpoint="a", threshold=0.41, f1_macro=1.0, validation_loss=0.2, epoch=1)
	assert len(sweeps["a"]) == 99


def test_select_prefers_higher_f1():
	truth = np.array([0, 0, 1, 1])
	worse = CandidateTrace("worse", 0.1, np.array([0.2, 0.7, 0.6, 0.8]), truth, epoch=1)
	better = CandidateTrace("better", 0.3, np.array([0.2, 0.4, 0.6, 0.8]), truth, epoch=2)
	assert select_best_from_traces([worse, better])[0].checkpoint == "better"


def test_select_ties_go_to_lower_validation_loss():
	truth = np.array([0, 0, 1, 1])
	p = np.array([0.2, 0.4, 0.6, 0.8])
	candidates = [CandidateTrace("high", 0.3, p, truth, epoch=1), CandidateTrace("low", 0.1, p, truth, epoch=2)]
	assert select_best_from_traces(candidates)[0].checkpoint == "low"


def test_select_matches_exhaustive_search_and_ignores_order():
	rng = random.Random(0)
	for _ in range(50):
		candidates = random_candidates(rng, rng.randint(1, 5))
		selection, _ = select_best_from_traces(candidates)
		_, checkpoint, tau, score = brute_force(candidates)

		assert (selection.checkpoint, selection.threshold, selection.f1_macro) == (checkpoint, tau, score)
		shuffled = candidates[:]
		rng.shuffle(shuffled)
		assert select_best_from_traces(shuffled)[0] == selection


def test_select_from_empty_list_raises():
	with pytest.raises(ValueError):
		select_best_from_traces([])


def test_select_best_on_stored_checkpoints(tmp_path):
	cfg = ModelConfig(c_in=3, d=4, n_bm=1, n_ms=2, lstm_hidden=2, pool_window=7, pool_stride=3)
	windowing = WindowingConfig(window_s=0.6, step_s=0.3, jitter_frames=0)
	rng = np.random.default_rng(0)
	channels = tuple(ChannelMeta(f"G{i}", ChannelKind.GRAD) for i in range(3))
	session = Session(
		session_id="val",
		recording=Recording(sample_rate_hz=100.0, channels=channels, data=rng.standard_normal((3, 200))),
		events=EventTrack(intervals=((0.3, 0.9), (1.2, 1.6))),
	)

	store = CheckpointStore(capacity=5)
	for epoch, loss in [(1, 0.3), (2, 0.2)]:
		path = str(tmp_path / f"ckpt_epoch_{epoch}.mebm")
		save_checkpoint(init_params(cfg, seed=epoch), path, epoch=epoch, validation_loss=loss)
		store.offer(loss, epoch, path)

	selection, sweeps = select_best(store, [session], windowing)

	truth = rasterize_labels(session.events, 100.0, 200).values
	expected = []
	for entry in store:
		model, epoch, _ = load_checkpoint(entry.path)
		p = predict_session(model, session.recording, windowing).values
		expected.append(CandidateTrace(entry.path, entry.validation_loss, p, truth, epoch=epoch))
	assert selection == select_best_from_traces(expected)[0]
	assert set(sweeps) == {entry.path for entry in store}


def test_sweep_table_and_selection_files(tmp_path):
	sweeps = {str(tmp_path / "ckpt_epoch_1.mebm"): [(tau, 0.5) for tau in THRESHOLDS]}
	save_sweep_table(sweeps, tmp_path / "sweep.tsv", relative_to=str(tmp_path))
	lines = (tmp_path / "sweep.tsv").read_text().splitlines()

	assert lines[0] == "checkpoint\tthreshold\tf1_macro"
	assert len(lines) == 1 + 99
	assert lines[1] == "ckpt_epoch_1.mebm\t0.01\t0.500000"

	selection = Selection(str(tmp_path / "ckpt_epoch_1.mebm"), 0.37, 0.5, 0.125, epoch=1)
	save_selection(selection, tmp_path / "selection.txt", relative_to=str(tmp_path))
	assert "checkpoint=ckpt_epoch_1.mebm\n" in (tmp_path / "selection.txt").read_text()
	assert "threshold=0.37\n" in (tmp_path / "selection.txt").read_text()

	loaded = load_selection(str(tmp_path / "selection.txt"))
	assert loaded.checkpoint == str(tmp_path / "ckpt_epoch_1.mebm")
	assert loaded.threshold == 0.37
	assert loaded.epoch == 1
