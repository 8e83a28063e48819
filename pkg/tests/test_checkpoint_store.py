import random
import pytest
from training.checkpoint_store import CheckpointStore
from utils.exceptions import NumericError


def offer_all(store, losses, directory="ckpts"):
	for epoch, loss in enumerate(losses, start=1):
		store.offer(loss, epoch, f"{directory}/ckpt_epoch_{epoch}.mebm")
	return store


def test_retains_five_lowest_losses():
	store = offer_all(CheckpointStore(capacity=5), [0.9, 0.5, 0.7, 0.4, 0.6, 0.3, 0.8])

	assert [entry.epoch for entry in store] == [6, 4, 2, 5, 3]
	assert store.best().validation_loss == 0.3


def test_offer_reports_retention():
	store = CheckpointStore(capacity=2)
	assert store.offer(0.5, 1, "a")
	assert store.offer(0.4, 2, "b")
	assert not store.offer(0.6, 3, "c")
	assert store.offer(0.1, 4, "d")
	assert [entry.path for entry in store] == ["d", "b"]


def test_ties_keep_earlier_epoch():
	store = offer_all(CheckpointStore(capacity=2), [0.5, 0.5, 0.5])
	assert [entry.epoch for entry in store] == [1, 2]


def test_matches_sort_and_truncate_oracle():
	rng = random.Random(0)
	for _ in range(100):
		capacity = rng.randint(1, 6)
		# coarse losses so ties are common
		losses = [rng.randint(0, 8) / 8 for _ in range(rng.randint(1, 15))]
		store = offer_all(CheckpointStore(capacity=capacity), losses)

		expected = sorted(((loss, epoch) for epoch, loss in enumerate(losses, start=1)))[:capacity]
		assert [(entry.validation_loss, entry.epoch) for entry in store] == expected


def test_non_finite_loss_raises():
	with pytest.raises(NumericError):
		CheckpointStore().offer(float("nan"), 1, "a")


def test_capacity_must_be_positive():
	with pytest.raises(ValueError):
		CheckpointStore(capacity=0)


def test_evicted_checkpoint_files_are_deleted(tmp_path):
	store = CheckpointStore(capacity=1, delete_evicted=True)
	first, second = tmp_path / "first.mebm", tmp_path / "second.mebm"
	first.write_bytes(b"1")
	second.write_bytes(b"2")

	store.offer(0.5, 1, str(first))
	store.offer(0.2, 2, str(second))

	assert not first.exists()
	assert second.exists()


def test_save_writes_relative_paths_and_load_resolves_them(tmp_path):
	store = CheckpointStore(capacity=3)
	store.offer(0.25, 2, str(tmp_path / "ckpt_epoch_2.mebm"))
	store.offer(0.125, 1, str(tmp_path / "ckpt_epoch_1.mebm"))
	store.save(tmp_path / "store.tsv")

	assert (tmp_path / "store.tsv").read_text() == "1\t0.125\tckpt_epoch_1.mebm\n2\t0.25\tckpt_epoch_2.mebm\n"

	loaded = CheckpointStore.load(str(tmp_path / "store.tsv"))
	assert [(e.epoch, e.validation_loss, e.path) for e in loaded] == [
		(1, 0.125, str(tmp_path / "ckpt_epoch_1.mebm")),
		(2, 0.25, str(tmp_path / "ckpt_epoch_2.mebm")),
	]
