import logging
import os
from dataclasses import dataclass
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from tqdm import tqdm
from architectures.checkpoint import load_checkpoint
from architectures.probabilities import ProbabilitySequence
from evaluation.metrics import ConfusionCounts, f1_from_counts
from inference.session_inference import predict_session
from preprocessing.events import LabelVector, rasterize_labels
from preprocessing.windowing import Session, WindowingConfig
from training.checkpoint_store import CheckpointStore
from utils.exceptions import DimensionError
from utils.utils import load_key_value_report, save_key_value_report

logger = logging.getLogger(__name__)

THRESHOLDS = tuple(k / 100 for k in range(1, 100))


@dataclass(frozen=True)
class Selection:
	checkpoint: str
	threshold: float
	f1_macro: float
	validation_loss: float
	epoch: int = 0

	def to_dict(self) -> dict:
		return {
			"checkpoint": self.checkpoint,
			"epoch": self.epoch,
			"threshold": self.threshold,
			"f1_macro": self.f1_macro,
			"validation_loss": self.validation_loss,
		}


@dataclass(frozen=True)
class CandidateTrace:
	"""
	One checkpoint's validation probabilities together with the matching ground truth.
	"""

	checkpoint: str
	validation_loss: float
	probabilities: np.ndarray
	truth: np.ndarray
	epoch: int = 0


def sweep_thresholds(p: ProbabilitySequence, truth: LabelVector) -> list[tuple[float, float]]:
	"""
	F1_macro at each threshold 0.01, 0.02, ..., 0.99, in ascending threshold order.
	"""
	probabilities = np.asarray(getattr(p, "values", p), dtype=np.float64)
	truth = np.asarray(getattr(truth, "values", truth)).astype(bool)
	if probabilities.shape != truth.shape:
		raise DimensionError(f"Probability length {probabilities.shape[0]} does not match truth length {truth.shape[0]}")

	predictions = probabilities[None, :] >= np.asarray(THRESHOLDS)[:, None]
	tp = np.count_nonzero(predictions & truth, axis=1)
	fp = np.count_nonzero(predictions & ~truth, axis=1)
	fn = np.count_nonzero(~predictions & truth, axis=1)
	tn = np.count_nonzero(~predictions & ~truth, axis=1)

	return [
		(tau, f1_from_counts(ConfusionCounts(tp=int(tp[i]), fp=int(fp[i]), fn=int(fn[i]), tn=int(tn[i]))))
		for i, tau in enumerate(THRESHOLDS)
	]


def select_best_from_traces(candidates: list[CandidateTrace]) -> tuple[Selection, dict[str, list]]:
	"""
	Global argmax of F1_macro over (checkpoint × threshold).

	Ties go to the lower validation loss, then the lower threshold, then the earlier epoch.

	Returns:
	    tuple[Selection, dict[str, list]]: The selection and the full sweep per checkpoint.
	"""
	if not candidates:
		raise ValueError("No checkpoints to select from")

	best_key, best = None, None
	sweeps = {}
	for candidate in candidates:
		sweep = sweep_thresholds(candidate.probabilities, candidate.truth)
		sweeps[candidate.checkpoint] = sweep
		for tau, f1 in sweep:
			key = (-f1, candidate.validation_loss, tau, candidate.epoch, candidate.checkpoint)
			if best_key is None or key < best_key:
				best_key = key
				best = Selection(
					checkpoint=candidate.checkpoint,
					threshold=tau,
					f1_macro=f1,
					validation_loss=candidate.validation_loss,
					epoch=candidate.epoch,
				)

	return best, sweeps


def select_best(
	checkpoints: CheckpointStore, val_sessions: list[Session], cfg: WindowingConfig, batch_size: int = 8
) -> tuple[Selection, dict[str, list]]:
	"""
	Pick the checkpoint-threshold pair with the highest F1_macro on the merged validation traces.

	For every stored checkpoint, each validation session is predicted window by window, the windows
	are merged into one session trace, and all sessions are concatenated before the 99-threshold sweep.

	Args:
	    checkpoints (CheckpointStore): Candidate checkpoints.
	    val_sessions (list[Session]): Preprocessed validation sessions.
	    cfg (WindowingConfig): Windowing used at inference time.
	    batch_size (int, optional): Windows per forward pass. Defaults to 8.

	Returns:
	    tuple[Selection, dict[str, list]]: The selection and the sweep table per checkpoint path.
	"""
	if len(checkpoints) == 0:
		raise ValueError("Checkpoint store is empty")

	truth = np.concatenate(
		[rasterize_labels(session.events, cfg.frame_rate_hz, session.n_frames).values for session in val_sessions]
	)
	candidates = []
	for entry in tqdm(list(checkpoints), desc="Sweeping checkpoints", unit="checkpoint"):
		model, epoch, _ = load_checkpoint(entry.path)
		traces = [predict_session(model, session.recording, cfg, batch_size=batch_size) for session in val_sessions]
		candidates.append(
			CandidateTrace(
				checkpoint=entry.path,
				validation_loss=entry.validation_loss,
				probabilities=np.concatenate([trace.values for trace in traces]),
				truth=truth,
				epoch=epoch,
			)
		)

	selection, sweeps = select_best_from_traces(candidates)
	logger.info(
		f"Selected {os.path.basename(selection.checkpoint)} at threshold {selection.threshold:.2f} "
		f"(F1_macro {selection.f1_macro:.4f})"
	)
	return selection, sweeps


def save_sweep_table(sweeps: dict[str, list], path: str, relative_to: str = None):
	with open(path, "w", encoding="utf-8") as f:
		f.write("checkpoint\tthreshold\tf1_macro\n")
		for checkpoint, sweep in sweeps.items():
			name = os.path.relpath(checkpoint, relative_to) if relative_to else checkpoint
			for tau, f1 in sweep:
				f.write(f"{name}\t{tau:.2f}\t{f1:.6f}\n")


def save_selection(selection: Selection, path: str, relative_to: str = None):
	report = selection.to_dict()
	if relative_to:
		report["checkpoint"] = os.path.relpath(selection.checkpoint, relative_to)
	report["threshold"] = f"{selection.threshold:.2f}"
	save_key_value_report(report, path)


def load_selection(path: str) -> Selection:
	"""
	Load a selection report; a relative checkpoint path is resolved against the report's directory.
	"""
	report = load_key_value_report(path)
	checkpoint = report["checkpoint"]
	if not os.path.isabs(checkpoint):
		checkpoint = os.path.join(os.path.dirname(path), checkpoint)
	return Selection(
		checkpoint=checkpoint,
		threshold=float(report["threshold"]),
		f1_macro=float(report["f1_macro"]),
		validation_loss=float(report["validation_loss"]),
		epoch=int(report.get("epoch", 0)),
	)


def plot_sweeps(sweeps: dict[str, list], selection: Selection, save_path: str):
	plt.figure()
	for checkpoint, sweep in sweeps.items():
		taus, scores = zip(*sweep)
		plt.plot(taus, scores, label=os.path.basename(checkpoint))
	plt.axvline(selection.threshold, color="gray", linestyle="--")
	plt.xlabel("Threshold")
	plt.ylabel("F1_macro")
	plt.title("Threshold sweep on the validation sessions")
	plt.legend()
	plt.savefig(save_path, format="pdf")
	plt.close()
