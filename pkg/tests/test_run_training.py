import os
import pytest
from architectures.checkpoint import load_checkpoint
from architectures.mebm_speech import ModelConfig
from cli.main import main
from preprocessing.create_datasets import build_windows, preprocess_recording
from preprocessing.windowing import Session, WindowingConfig
from synthesis.synthetic_session import SynthConfig, generate_session
from training.checkpoint_store import STORE_FILENAME, CheckpointStore
from training.run_training import LOSS_LOG_FILENAME, TrainingConfig, checkpoint_filename, train

MODEL_CONFIG = ModelConfig(c_in=4, d=4, n_bm=1, n_ms=2, ms_kernel_sizes=(3, 5), lstm_hidden=2)
WINDOWING_CONFIG = WindowingConfig(window_s=4.0, step_s=2.0)


def make_session(session_id, seed, duration_s=20.0):
	recording, events = generate_session(
		SynthConfig(n_channels=4, n_informative=2, duration_s=duration_s, sample_rate_hz=200.0, seed=seed)
	)
	return Session(session_id=session_id, recording=preprocess_recording(recording, "grad", 100.0), events=events)


@pytest.fixture(scope="module")
def sessions():
	train_session = make_session("train", seed=0)
	val_windows = build_windows(make_session("val", seed=1, duration_s=10.0), WINDOWING_CONFIG)
	return [train_session], val_windows


def run(sessions, checkpoint_dir, epochs=3, capacity=2):
	train_sessions, val_windows = sessions
	os.makedirs(checkpoint_dir, exist_ok=True)
	return train(
		train_sessions,
		val_windows,
		MODEL_CONFIG,
		WINDOWING_CONFIG,
		TrainingConfig(checkpoint_dir=str(checkpoint_dir), epochs=epochs, batch_size=4, seed=0, checkpoint_capacity=capacity),
	)


def test_training_writes_store_and_loss_log(tmp_path, sessions):
	store = run(sessions, tmp_path)
	losses = (tmp_path / LOSS_LOG_FILENAME).read_text().splitlines()

	assert len(store) == 2
	assert losses[0] == "epoch\ttrain_loss\tval_loss"
	assert [line.split("\t")[0] for line in losses[1:]] == ["1", "2", "3"]

	reloaded = CheckpointStore.load(str(tmp_path / STORE_FILENAME), capacity=2)
	assert [(e.epoch, e.validation_loss) for e in reloaded] == [(e.epoch, e.validation_loss) for e in store]


def test_only_retained_checkpoints_stay_on_disk(tmp_path, sessions):
	store = run(sessions, tmp_path)
	retained = {entry.epoch for entry in store}

	for epoch in (1, 2, 3):
		assert (tmp_path / checkpoint_filename(epoch)).exists() == (epoch in retained)


def test_store_entries_match_checkpoint_contents(tmp_path, sessions):
	store = run(sessions, tmp_path)
	losses = {
		int(line.split("\t")[0]): float(line.split("\t")[2])
		for line in (tmp_path / LOSS_LOG_FILENAME).read_text().splitlines()[1:]
	}

	for entry in store:
		model, epoch, validation_loss = load_checkpoint(entry.path)
		assert model.config == MODEL_CONFIG
		assert (epoch, validation_loss) == (entry.epoch, entry.validation_loss)
		assert validation_loss == pytest.approx(losses[epoch], abs=1e-8)


def test_training_is_deterministic(tmp_path, sessions):
	run(sessions, tmp_path / "a", epochs=2)
	run(sessions, tmp_path / "b", epochs=2)

	for name in (STORE_FILENAME, LOSS_LOG_FILENAME, checkpoint_filename(1), checkpoint_filename(2)):
		assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_training_without_validation_windows_raises(tmp_path, sessions):
	with pytest.raises(ValueError):
		train(sessions[0], [], MODEL_CONFIG, WINDOWING_CONFIG, TrainingConfig(checkpoint_dir=str(tmp_path)))


def test_desk_training_loss_drops_on_synthetic_sessions(tmp_path):
	for name, seed in (("train", 100), ("val", 101)):
		assert main(["synth", "--out", str(tmp_path), "--name", name, "--seed", str(seed)]) == 0

	out = tmp_path / "run"
	args = [
		"train",
		"--config",
		os.path.join("training_configs", "desk.yaml"),
		"--out",
		str(out),
		"--epochs",
		"3",
		"--train_sessions",
		str(tmp_path / "train"),
		"--val_sessions",
		str(tmp_path / "val"),
	]
	assert main(args) == 0

	rows = [line.split("\t") for line in (out / LOSS_LOG_FILENAME).read_text().splitlines()[1:]]
	train_losses = {int(epoch): float(loss) for epoch, loss, _ in rows}
	assert train_losses[3] < train_losses[1]
