import logging
import os
from dataclasses import dataclass
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import torch
from tqdm import tqdm
from architectures.checkpoint import save_checkpoint
from architectures.mebm_speech import MEBMSpeech, ModelConfig, count_params, init_params
from preprocessing.create_datasets import build_windows
from preprocessing.windowing import Session, TrainingWindow, WindowingConfig
from training.checkpoint_store import STORE_FILENAME, CheckpointStore
from training.dataset import Dataset
from training.loss import param_gradients
from training.optimizer import adamw_step, build_optimizer
from training.seeding import derive_seed
from utils.exceptions import NumericError

logger = logging.getLogger(__name__)

LOSS_LOG_FILENAME = "losses.tsv"
LOSS_PLOT_FILENAME = "losses.pdf"


@dataclass(frozen=True)
class TrainingConfig:
	checkpoint_dir: str
	epochs: int = 10
	batch_size: int = 8
	seed: int = 0
	learning_rate: float = 1e-3
	weight_decay: float = 0.01
	checkpoint_capacity: int = 5
	plot: bool = False


def checkpoint_filename(epoch: int) -> str:
	return f"ckpt_epoch_{epoch}.mebm"


def validation_loss(model: MEBMSpeech, val_windows: list[TrainingWindow], batch_size: int = 8) -> float:
	"""
	Mean of the per-window MSE over the validation windows, in evaluation mode.

	Args:
	    model (MEBMSpeech): The model to evaluate.
	    val_windows (list[TrainingWindow]): Unjittered, segment-normalized windows.
	    batch_size (int, optional): Number of windows per forward pass. Defaults to 8.

	Returns:
	    float: The validation loss.
	"""
	if not val_windows:
		raise ValueError("validation_loss needs at least one window")

	dtype = next(model.parameters()).dtype
	loader = torch.utils.data.DataLoader(Dataset(val_windows, dtype=dtype), batch_size=batch_size, shuffle=False)
	per_window = []
	with torch.no_grad():
		for batch in loader:
			probabilities = model(batch["signal"], training=False)
			per_window.append(((probabilities - batch["labels"]) ** 2).mean(dim=1).double())

	return torch.cat(per_window).mean().item()


def _write_loss_log(path: str, history: list[tuple[int, float, float]]):
	with open(path, "w", encoding="utf-8") as f:
		f.write("epoch\ttrain_loss\tval_loss\n")
		for epoch, train_loss, val_loss in history:
			f.write(f"{epoch}\t{train_loss:.8f}\t{val_loss:.8f}\n")


def plot_losses(history: list[tuple[int, float, float]], save_path: str):
	epochs, train_losses, val_losses = zip(*history)
	plt.figure()
	plt.plot(epochs, train_losses, marker="o", label="training")
	plt.plot(epochs, val_losses, marker="o", label="validation")
	plt.xlabel("Epoch")
	plt.ylabel("MSE loss")
	plt.title("Training and validation loss")
	plt.legend()
	plt.savefig(save_path, format="pdf")
	plt.close()


def train(
	train_sessions: list[Session],
	val_windows: list[TrainingWindow],
	model_config: ModelConfig,
	windowing_config: WindowingConfig,
	run: TrainingConfig,
) -> CheckpointStore:
	"""
	Train the decoder with MSE loss and AdamW and keep the best checkpoints by validation loss.

	Every epoch draws fresh jittered labels for all training windows, shuffles them with a
	per-epoch seed, takes batched gradient steps, then evaluates on the validation windows and
	offers the epoch's checkpoint to the store. Epochs are numbered from 1.

	Args:
	    train_sessions (list[Session]): Preprocessed training sessions with their speech events.
	    val_windows (list[TrainingWindow]): Unjittered validation windows.
	    model_config (ModelConfig): Architecture hyperparameters.
	    windowing_config (WindowingConfig): Window length, step and jitter.
	    run (TrainingConfig): Epochs, batch size, seed, optimizer settings and the checkpoint directory.

	Returns:
	    CheckpointStore: The retained checkpoints, also written to `<checkpoint_dir>/store.tsv`.
	"""
	if not train_sessions:
		raise ValueError("train() needs at least one training session")
	if not val_windows:
		raise ValueError("train() needs at least one validation window")

	model = init_params(model_config, derive_seed(run.seed, "init"))
	optimizer = build_optimizer(model, learning_rate=run.learning_rate, weight_decay=run.weight_decay)
	dropout_generator = torch.Generator().manual_seed(derive_seed(run.seed, "dropout"))
	store = CheckpointStore(capacity=run.checkpoint_capacity, delete_evicted=True)
	logger.info(f"Training model with {count_params(model_config):,} parameters for {run.epochs} epochs")

	history = []
	for epoch in tqdm(range(1, run.epochs + 1), desc="Training", unit="epoch"):
		jitter_rng = np.random.default_rng(derive_seed(run.seed, "jitter", epoch))
		windows = [
			window
			for session in train_sessions
			for window in build_windows(session, windowing_config, rng=jitter_rng, training=True)
		]
		train_loader = torch.utils.data.DataLoader(
			Dataset(windows),
			batch_size=run.batch_size,
			shuffle=True,
			generator=torch.Generator().manual_seed(derive_seed(run.seed, "shuffle", epoch)),
		)

		total_loss = 0.0
		for batch in tqdm(train_loader, desc=f"Epoch {epoch}/{run.epochs}", leave=False):
			loss, gradients = param_gradients(
				model, list(zip(batch["signal"], batch["labels"])), generator=dropout_generator
			)
			adamw_step(model, gradients, optimizer)
			total_loss += loss

		avg_loss = total_loss / len(train_loader)
		val_loss = validation_loss(model, val_windows, batch_size=run.batch_size)
		if not np.isfinite(val_loss):
			raise NumericError(f"Non-finite validation loss at epoch {epoch}")

		checkpoint_path = os.path.join(run.checkpoint_dir, checkpoint_filename(epoch))
		save_checkpoint(model, checkpoint_path, epoch=epoch, validation_loss=val_loss)
		retained = store.offer(val_loss, epoch, checkpoint_path)
		history.append((epoch, avg_loss, val_loss))
		_write_loss_log(os.path.join(run.checkpoint_dir, LOSS_LOG_FILENAME), history)

		logger.info(
			f"Epoch {epoch}/{run.epochs} | Avg. training loss per batch: {avg_loss:.4f} | "
			f"Validation loss: {val_loss:.4f} | {'retained' if retained else 'discarded'}"
		)

	store.save(os.path.join(run.checkpoint_dir, STORE_FILENAME))
	if run.plot:
		plot_losses(history, os.path.join(run.checkpoint_dir, LOSS_PLOT_FILENAME))

	return store

