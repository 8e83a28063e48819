import argparse
import logging
import os
import sys
import numpy as np
import yaml
from architectures.checkpoint import load_checkpoint
from architectures.mebm_speech import ModelConfig, branch_parameter_counts, count_params
from architectures.probabilities import ProbabilitySequence, load_trace, save_trace
from cli.run_config import RunConfig, field_types, resolve_run_config
from evaluation.aggregate_reports import aggregate_report_files
from evaluation.metrics import apply_threshold, compute_metric_report, save_metric_report
from evaluation.threshold_sweep import load_selection, plot_sweeps, save_selection, save_sweep_table, select_best
from inference.session_inference import predict_session, resample_probs
from preprocessing.create_datasets import build_windows, load_session, preprocess_recording
from preprocessing.events import load_events, rasterize_labels, save_events
from preprocessing.recording import load_recording, save_recording
from synthesis.synthetic_session import generate_session
from training.checkpoint_store import STORE_FILENAME, CheckpointStore
from training.run_training import train
from training.seeding import derive_seed, seed_everything
from utils.exceptions import ConfigError, DimensionError, exit_code_for
from utils.utils import ensure_output_dir, print_metrics

logger = logging.getLogger(__name__)

SWEEP_TABLE_FILENAME = "sweep.tsv"
SELECTION_FILENAME = "selection.txt"
SWEEP_PLOT_FILENAME = "sweep.pdf"
PROBABILITIES_FILENAME = "probabilities.txt"
SEGMENTATION_FILENAME = "segmentation.txt"
METRICS_FILENAME = "metrics.txt"
AGGREGATE_FILENAME = "aggregate.txt"


def _check_channels(model_config: ModelConfig, n_channels: int, source: str):
	if n_channels != model_config.c_in:
		raise ConfigError(f"c_in is {model_config.c_in} but {source} has {n_channels} selected channels")


def _require(run: RunConfig, key: str):
	value = getattr(run, key)
	if value in ("", (), None):
		raise ConfigError(f"This command needs --{key}")
	return value


def cmd_synth(run: RunConfig):
	if not os.path.isdir(run.out):
		raise FileNotFoundError(f"Output directory does not exist: {run.out}")

	recording, events = generate_session(run.synth_config(derive_seed(run.seed, "synth")))
	stem = os.path.join(run.out, run.name)
	save_recording(recording, stem + ".megr")
	save_events(events, stem + ".events")

	labels = rasterize_labels(events, run.frame_rate_hz, int(round(recording.duration_s * run.frame_rate_hz)))
	print(f"Wrote {stem}.megr and {stem}.events")
	print_metrics(
		{
			"samples": recording.n_samples,
			"frames": len(labels),
			"speech_intervals": len(events),
			"speech_fraction": float(labels.values.mean()),
		}
	)


def _load_sessions(run: RunConfig, key: str):
	sessions = [load_session(stem, run.channel_kind, run.frame_rate_hz) for stem in _require(run, key)]
	for session in sessions:
		_check_channels(run.model_config(), session.recording.n_channels, f"session '{session.session_id}'")
	return sessions


def cmd_train(run: RunConfig):
	seed_everything(run.seed)
	model_config, windowing_config = run.model_config(), run.windowing_config()
	train_sessions = _load_sessions(run, "train_sessions")
	val_sessions = _load_sessions(run, "val_sessions")
	val_windows = [w for session in val_sessions for w in build_windows(session, windowing_config, training=False)]

	ensure_output_dir(run.out)
	store = train(train_sessions, val_windows, model_config, windowing_config, run.training_config())
	best = store.best()
	print(f"Retained {len(store)} checkpoints in {os.path.join(run.out, STORE_FILENAME)}")
	print(f"Best: epoch {best.epoch}, validation loss {best.validation_loss:.6f}")


def cmd_sweep(run: RunConfig):
	store_path = os.path.join(run.out, STORE_FILENAME)
	store = CheckpointStore.load(store_path, capacity=run.checkpoint_capacity)
	if len(store) == 0:
		raise ConfigError(f"Checkpoint store {store_path} is empty")

	val_sessions = _load_sessions(run, "val_sessions")
	selection, sweeps = select_best(store, val_sessions, run.windowing_config(), batch_size=run.batch_size)

	save_sweep_table(sweeps, os.path.join(run.out, SWEEP_TABLE_FILENAME), relative_to=run.out)
	save_selection(selection, os.path.join(run.out, SELECTION_FILENAME), relative_to=run.out)
	if run.plot:
		plot_sweeps(sweeps, selection, os.path.join(run.out, SWEEP_PLOT_FILENAME))

	print(f"Selected {os.path.relpath(selection.checkpoint, run.out)} at threshold {selection.threshold:.2f}")
	print_metrics({"f1_macro": selection.f1_macro, "validation_loss": selection.validation_loss})


def _checkpoint_and_threshold(run: RunConfig) -> tuple[str, float | None]:
	if run.selection:
		selection = load_selection(run.selection)
		checkpoint = run.checkpoint or selection.checkpoint
		threshold = run.threshold if run.threshold is not None else selection.threshold
		return checkpoint, threshold
	return _require(run, "checkpoint"), run.threshold


def cmd_infer(run: RunConfig):
	checkpoint, threshold = _checkpoint_and_threshold(run)
	model, epoch, _ = load_checkpoint(checkpoint)
	recording = preprocess_recording(load_recording(_require(run, "recording")), run.channel_kind, run.frame_rate_hz)
	_check_channels(model.config, recording.n_channels, run.recording)

	probabilities = predict_session(model, recording, run.windowing_config(), batch_size=run.batch_size)
	if run.rate_hz is not None:
		probabilities = resample_probs(probabilities, run.rate_hz)

	ensure_output_dir(run.out)
	output_path = run.predictions or os.path.join(run.out, PROBABILITIES_FILENAME)
	save_trace(probabilities, output_path)
	logger.info(f"Wrote {len(probabilities)} probabilities at {probabilities.frame_rate_hz:g} Hz to {output_path}")

	if threshold is not None:
		labels = apply_threshold(probabilities, threshold)
		segmentation = ProbabilitySequence(
			frame_rate_hz=labels.frame_rate_hz, values=labels.values, threshold=threshold
		)
		segmentation_path = os.path.join(run.out, SEGMENTATION_FILENAME)
		save_trace(segmentation, segmentation_path, integer_values=True)
		logger.info(f"Wrote segmentation at threshold {threshold:.2f} to {segmentation_path}")

	print(f"Predicted {len(probabilities)} frames with checkpoint of epoch {epoch}")


def cmd_eval(run: RunConfig):
	checkpoint, threshold = _checkpoint_and_threshold(run) if run.selection else (run.checkpoint, run.threshold)
	trace = load_trace(_require(run, "predictions"))

	if threshold is not None:
		pred = apply_threshold(trace, threshold)
	elif np.isin(trace.values, (0.0, 1.0)).all():
		pred = trace.values.astype(np.uint8)
	else:
		raise ConfigError("Predictions are probabilities; pass --threshold or --selection")

	if run.truth:
		truth = load_trace(run.truth).values.astype(np.uint8)
		if len(truth) != len(trace):
			raise DimensionError(f"{run.predictions} has {len(trace)} frames but {run.truth} has {len(truth)}")
	else:
		truth = rasterize_labels(load_events(_require(run, "events")), trace.frame_rate_hz, len(trace))

	report = compute_metric_report(
		pred,
		truth,
		threshold=threshold,
		checkpoint=os.path.relpath(checkpoint, run.out) if checkpoint else None,
	)
	ensure_output_dir(run.out)
	save_metric_report(report, os.path.join(run.out, METRICS_FILENAME))
	print_metrics({"f1_macro": report.f1_macro, "acc_macro": report.acc_macro})


def cmd_info(run: RunConfig):
	model_config = run.model_config()
	print(f"Trainable parameters: {count_params(model_config):,}")
	print_metrics(branch_parameter_counts(model_config))
	print(yaml.safe_dump(run.to_dict(), sort_keys=False), end="")


def cmd_aggregate(run: RunConfig):
	ensure_output_dir(run.out)
	aggregated = aggregate_report_files(list(_require(run, "reports")), os.path.join(run.out, AGGREGATE_FILENAME))
	print_metrics(aggregated)


COMMANDS = {
	"synth": (cmd_synth, "Generate a synthetic session with known speech intervals"),
	"train": (cmd_train, "Train the decoder and keep the best checkpoints"),
	"sweep": (cmd_sweep, "Select the best checkpoint and threshold on validation sessions"),
	"infer": (cmd_infer, "Predict a speech probability trace for a recording"),
	"eval": (cmd_eval, "Score predictions against ground truth"),
	"info": (cmd_info, "Print the parameter count and the resolved configuration"),
	"aggregate": (cmd_aggregate, "Mean and standard deviation over per-seed metric reports"),
}


def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(prog="mebm", description="MEG speech activity detection")
	subparsers = parser.add_subparsers(dest="command", required=True)
	for name, (_, help_text) in COMMANDS.items():
		subparser = subparsers.add_parser(name, help=help_text)
		subparser.add_argument("--config", type=str, help="Path to the YAML configuration file")
		for key in field_types():
			subparser.add_argument(f"--{key}", type=str, default=argparse.SUPPRESS)
	return parser


def main(argv: list[str] = None) -> int:
	logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
	args = vars(build_parser().parse_args(argv))
	command = args.pop("command")
	config_path = args.pop("config")

	try:
		run = resolve_run_config(config_path, args)
		COMMANDS[command][0](run)
	except Exception as e:
		exit_code = exit_code_for(e)
		if exit_code == 1:
			logger.exception(f"{command} failed unexpectedly")
		else:
			logger.error(f"{command} failed: {e}")
		return exit_code
	return 0


if __name__ == "__main__":
	sys.exit(main())
