import dataclasses
import typing
from dataclasses import dataclass
from architectures.mebm_speech import ModelConfig
from preprocessing.windowing import WindowingConfig
from synthesis.synthetic_session import SynthConfig
from training.run_training import TrainingConfig
from utils.exceptions import ConfigError
from utils.utils import load_config

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


@dataclass(frozen=True)
class RunConfig:
	"""
	Every key a command may consume, in one flat namespace.

	Values resolve as dataclass defaults < `--config` YAML file < `--<key>` command-line flags.
	"""

	seed: int = 0
	out: str = "runs/default"

	# model
	c_in: int = 204
	d: int = 128
	n_bm: int = 5
	n_ms: int = 12
	ms_kernel_sizes: tuple[int, ...] = (3, 5, 7, 9)
	lstm_hidden: int = 960
	dropout_p: float = 0.01
	pool_window: int = 31
	pool_stride: int = 15
	ds_kernel_size: int = 7
	bm_kernel_size: int = 3
	bm_on: bool = True
	ms_on: bool = True
	lstm_on: bool = True

	# windowing and preprocessing
	window_s: float = 12.0
	step_s: float = 6.0
	frame_rate_hz: float = 100.0
	jitter_frames: int = 2
	channel_kind: str = "grad"

	# training
	epochs: int = 10
	batch_size: int = 8
	learning_rate: float = 1e-3
	weight_decay: float = 0.01
	checkpoint_capacity: int = 5
	plot: bool = False

	# synthesis
	name: str = "session"
	n_channels: int = 8
	n_informative: int = 4
	duration_s: float = 120.0
	sample_rate_hz: float = 250.0
	snr: float = 2.0
	speech_dur_range_s: tuple[float, float] = (0.5, 4.0)
	silence_dur_range_s: tuple[float, float] = (0.3, 2.0)

	# paths
	train_sessions: tuple[str, ...] = ()
	val_sessions: tuple[str, ...] = ()
	recording: str = ""
	events: str = ""
	truth: str = ""
	checkpoint: str = ""
	selection: str = ""
	predictions: str = ""
	reports: tuple[str, ...] = ()

	# inference and evaluation
	threshold: float | None = None
	rate_hz: float | None = None

	def model_config(self) -> ModelConfig:
		return ModelConfig(**{f.name: getattr(self, f.name) for f in dataclasses.fields(ModelConfig)})

	def windowing_config(self) -> WindowingConfig:
		return WindowingConfig(**{f.name: getattr(self, f.name) for f in dataclasses.fields(WindowingConfig)})

	def training_config(self) -> TrainingConfig:
		return TrainingConfig(
			checkpoint_dir=self.out,
			epochs=self.epochs,
			batch_size=self.batch_size,
			seed=self.seed,
			learning_rate=self.learning_rate,
			weight_decay=self.weight_decay,
			checkpoint_capacity=self.checkpoint_capacity,
			plot=self.plot,
		)

	def synth_config(self, seed: int) -> SynthConfig:
		return SynthConfig(
			n_channels=self.n_channels,
			n_informative=self.n_informative,
			duration_s=self.duration_s,
			sample_rate_hz=self.sample_rate_hz,
			snr=self.snr,
			speech_dur_range_s=self.speech_dur_range_s,
			silence_dur_range_s=self.silence_dur_range_s,
			seed=seed,
		)

	def to_dict(self) -> dict:
		return {key: list(value) if isinstance(value, tuple) else value for key, value in dataclasses.asdict(self).items()}


def field_types() -> dict[str, type]:
	return typing.get_type_hints(RunConfig)


def _convert_scalar(key: str, value, target: type):
	if isinstance(value, str):
		value = value.strip()
	try:
		if target is bool:
			if isinstance(value, bool):
				return value
			if str(value).lower() in _TRUE:
				return True
			if str(value).lower() in _FALSE:
				return False
			raise ValueError(value)
		if target is int:
			if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
				raise ValueError(value)
			return int(value)
		if target is float:
			if isinstance(value, bool):
				raise ValueError(value)
			return float(value)
		return str(value)
	except ValueError:
		raise ConfigError(f"Config key '{key}' expects {target.__name__}, got {value!r}")


def convert_value(key: str, value, annotation):
	"""
	Convert a raw value from a YAML file or a command-line flag to the declared field type.

	Lists are YAML lists in files and comma-separated strings on the command line.
	"""
	origin = typing.get_origin(annotation)
	args = typing.get_args(annotation)

	if origin is tuple:
		if isinstance(value, str):
			items = [item for item in value.split(",") if item.strip()]
		elif isinstance(value, (list, tuple)):
			items = list(value)
		elif value is None:
			items = []
		else:
			items = [value]
		if len(args) == 2 and args[1] is Ellipsis:
			return tuple(_convert_scalar(key, item, args[0]) for item in items)
		if len(items) != len(args):
			raise ConfigError(f"Config key '{key}' expects {len(args)} values, got {len(items)}")
		return tuple(_convert_scalar(key, item, arg) for item, arg in zip(items, args))

	if type(None) in args:
		if value is None or (isinstance(value, str) and value.strip().lower() in {"", "none", "null"}):
			return None
		annotation = next(arg for arg in args if arg is not type(None))

	if value is None:
		raise ConfigError(f"Config key '{key}' must not be empty")
	return _convert_scalar(key, value, annotation)


def _typed(values: dict, source: str) -> dict:
	types = field_types()
	unknown = sorted(set(values) - set(types))
	if unknown:
		raise ConfigError(f"Unknown config key(s) in {source}: {', '.join(unknown)}")
	return {key: convert_value(key, value, types[key]) for key, value in values.items()}


def resolve_run_config(config_path: str = None, overrides: dict = None) -> RunConfig:
	"""
	Build the run configuration from defaults, an optional YAML file and command-line overrides.

	Args:
	    config_path (str, optional): YAML mapping with one flat level of keys.
	    overrides (dict, optional): Raw `--<key>` flag values, which win over the file.

	Returns:
	    RunConfig: The resolved configuration.
	"""
	values = {}
	if config_path:
		file_values = load_config(config_path)
		if not isinstance(file_values, dict):
			raise ConfigError(f"{config_path} must contain a mapping of config keys")
		values.update(_typed(file_values, config_path))
	if overrides:
		values.update(_typed(overrides, "command-line flags"))
	return RunConfig(**values)
