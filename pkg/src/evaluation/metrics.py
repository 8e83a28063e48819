import logging
from dataclasses import dataclass
import numpy as np
from architectures.probabilities import ProbabilitySequence
from preprocessing.events import LabelVector
from utils.exceptions import DimensionError
from utils.utils import load_key_value_report, save_key_value_report

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionCounts:
	tp: int
	fp: int
	fn: int
	tn: int

	@property
	def total(self) -> int:
		return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricReport:
	f1_macro: float
	acc_macro: float
	precision: tuple[float, float]
	recall: tuple[float, float]
	f1: tuple[float, float]
	counts: ConfusionCounts
	class_absent: bool = False
	threshold: float | None = None
	checkpoint: str | None = None

	def to_dict(self) -> dict:
		report = {
			"f1_macro": self.f1_macro,
			"acc_macro": self.acc_macro,
			"tp": self.counts.tp,
			"fp": self.counts.fp,
			"fn": self.counts.fn,
			"tn": self.counts.tn,
			"precision_silence": self.precision[0],
			"recall_silence": self.recall[0],
			"f1_silence": self.f1[0],
			"precision_speech": self.precision[1],
			"recall_speech": self.recall[1],
			"f1_speech": self.f1[1],
			"class_absent": int(self.class_absent),
		}
		if self.threshold is not None:
			report["threshold"] = self.threshold
		if self.checkpoint is not None:
			report["checkpoint"] = self.checkpoint
		return report


def _values(labels) -> np.ndarray:
	return np.asarray(getattr(labels, "values", labels))


def apply_threshold(p: ProbabilitySequence, tau: float) -> LabelVector:
	"""
	Frame k is speech iff p_k >= tau.
	"""
	if not 0 < tau < 1:
		raise ValueError(f"Threshold must lie strictly between 0 and 1, got {tau}")
	return LabelVector(frame_rate_hz=p.frame_rate_hz, values=(p.values >= tau).astype(np.uint8))


def confusion_counts(pred, truth) -> ConfusionCounts:
	pred, truth = _values(pred).astype(bool), _values(truth).astype(bool)
	if pred.shape != truth.shape:
		raise DimensionError(f"Prediction length {pred.shape[0]} does not match truth length {truth.shape[0]}")
	if pred.size == 0:
		raise DimensionError("Cannot score empty label vectors")
	return ConfusionCounts(
		tp=int(np.count_nonzero(pred & truth)),
		fp=int(np.count_nonzero(pred & ~truth)),
		fn=int(np.count_nonzero(~pred & truth)),
		tn=int(np.count_nonzero(~pred & ~truth)),
	)


def _class_scores(hits: int, false_alarms: int, misses: int) -> tuple[float, float, float]:
	"""
	Precision, recall and F1 for one class; each is 0 when its denominator is 0.
	"""
	precision = hits / (hits + false_alarms) if hits + false_alarms else 0.0
	recall = hits / (hits + misses) if hits + misses else 0.0
	denominator = 2 * hits + false_alarms + misses
	f1 = 2 * hits / denominator if denominator else 0.0
	return precision, recall, f1


def f1_from_counts(counts: ConfusionCounts) -> float:
	_, _, f1_speech = _class_scores(counts.tp, counts.fp, counts.fn)
	_, _, f1_silence = _class_scores(counts.tn, counts.fn, counts.fp)
	return (f1_silence + f1_speech) / 2


def f1_macro(pred, truth) -> float:
	"""
	Unweighted mean of the silence-class and speech-class F1 scores.

	A class whose 2·TP + FP + FN is 0 contributes an F1 of 0.
	"""
	return f1_from_counts(confusion_counts(pred, truth))


def _balanced_accuracy(counts: ConfusionCounts) -> tuple[float, bool]:
	recalls = []
	class_absent = False
	# (hits, misses, predicted-as-class count) for silence then speech
	for hits, misses, predicted in (
		(counts.tn, counts.fp, counts.tn + counts.fn),
		(counts.tp, counts.fn, counts.tp + counts.fp),
	):
		if hits + misses == 0:
			class_absent = True
			recalls.append(1.0 if predicted == 0 else 0.0)
		else:
			recalls.append(hits / (hits + misses))
	return (recalls[0] + recalls[1]) / 2, class_absent


def acc_macro(pred, truth) -> float:
	"""
	Balanced accuracy: the mean of the per-class recalls.

	A class absent from the truth gets a recall of 1 if it is also absent from the prediction, 0 otherwise.
	"""
	value, class_absent = _balanced_accuracy(confusion_counts(pred, truth))
	if class_absent:
		logger.warning("A class is absent from the ground truth; its recall follows the absent-class convention")
	return value


def compute_metric_report(pred, truth, threshold: float = None, checkpoint: str = None) -> MetricReport:
	counts = confusion_counts(pred, truth)
	precision_speech, recall_speech, f1_speech = _class_scores(counts.tp, counts.fp, counts.fn)
	precision_silence, recall_silence, f1_silence = _class_scores(counts.tn, counts.fn, counts.fp)
	balanced_accuracy, class_absent = _balanced_accuracy(counts)
	if class_absent:
		logger.warning("A class is absent from the ground truth; acc_macro uses the absent-class convention")

	return MetricReport(
		f1_macro=(f1_silence + f1_speech) / 2,
		acc_macro=balanced_accuracy,
		precision=(precision_silence, precision_speech),
		recall=(recall_silence, recall_speech),
		f1=(f1_silence, f1_speech),
		counts=counts,
		class_absent=class_absent,
		threshold=threshold,
		checkpoint=checkpoint,
	)


def save_metric_report(report: MetricReport, path: str):
	save_key_value_report(report.to_dict(), path)


def load_metric_report(path: str) -> dict[str, str]:
	return load_key_value_report(path)
