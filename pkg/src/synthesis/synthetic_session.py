import logging
import math
from dataclasses import dataclass
import numpy as np
from preprocessing.events import EventTrack
from preprocessing.recording import ChannelKind, ChannelMeta, Recording
from utils.exceptions import ConfigError

logger = logging.getLogger(__name__)

CARRIER_HZ = 10.0
RAMP_S = 0.05


@dataclass(frozen=True)
class SynthConfig:
	n_channels: int = 8
	n_informative: int = 4
	duration_s: float = 120.0
	sample_rate_hz: float = 250.0
	snr: float = 2.0
	speech_dur_range_s: tuple[float, float] = (0.5, 4.0)
	silence_dur_range_s: tuple[float, float] = (0.3, 2.0)
	seed: int = 0

	def __post_init__(self):
		if self.n_channels < 1:
			raise ConfigError(f"n_channels must be at least 1, got {self.n_channels}")
		if not 0 <= self.n_informative <= self.n_channels:
			raise ConfigError(f"Need 0 <= n_informative <= n_channels, got {self.n_informative} of {self.n_channels}")
		if not (math.isfinite(self.duration_s) and self.duration_s > 0):
			raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
		if not (math.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
			raise ConfigError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
		if not (math.isfinite(self.snr) and self.snr >= 0):
			raise ConfigError(f"snr must be non-negative, got {self.snr}")
		for name in ("speech_dur_range_s", "silence_dur_range_s"):
			low, high = getattr(self, name)
			if not 0 < low < high:
				raise ConfigError(f"{name} must satisfy 0 < min < max, got ({low}, {high})")
			object.__setattr__(self, name, (float(low), float(high)))

	@property
	def n_samples(self) -> int:
		return int(math.floor(self.duration_s * self.sample_rate_hz + 0.5))


def _draw_intervals(cfg: SynthConfig, rng: np.random.Generator) -> EventTrack:
	"""
	Alternate silence and speech, starting with silence, until the session is filled.
	"""
	intervals = []
	t, speech = 0.0, False
	while t < cfg.duration_s:
		low, high = cfg.speech_dur_range_s if speech else cfg.silence_dur_range_s
		end = min(t + rng.uniform(low, high), cfg.duration_s)
		if speech:
			intervals.append((t, end))
		t, speech = end, not speech
	return EventTrack(intervals=tuple(intervals))


def _envelope(times: np.ndarray, onset: float, offset: float) -> np.ndarray:
	# half-cosine ramps; short intervals never reach full amplitude
	rise = np.clip((times - onset) / RAMP_S, 0.0, 1.0)
	fall = np.clip((offset - times) / RAMP_S, 0.0, 1.0)
	return 0.5 * (1.0 - np.cos(np.pi * np.minimum(rise, fall)))


def generate_session(cfg: SynthConfig) -> tuple[Recording, EventTrack]:
	"""
	Generate a synthetic MEG-like session with known speech intervals.

	Every channel carries unit-variance Gaussian noise. During speech, the first `n_informative`
	channels also carry a 10 Hz sinusoid of amplitude `snr`, with a random phase per interval and
	50 ms half-cosine ramps at both boundaries.

	Args:
	    cfg (SynthConfig): Generator settings, including the seed that fully determines the output.

	Returns:
	    tuple[Recording, EventTrack]: The float32 recording (all channels gradiometers) and its speech intervals.
	"""
	rng = np.random.default_rng(cfg.seed)
	events = _draw_intervals(cfg, rng)

	n_samples = cfg.n_samples
	times = np.arange(n_samples, dtype=np.float64) / cfg.sample_rate_hz
	data = rng.standard_normal((cfg.n_channels, n_samples))

	signal = np.zeros(n_samples, dtype=np.float64)
	phases = rng.uniform(0.0, 2 * np.pi, size=len(events))
	for (onset, offset), phase in zip(events.intervals, phases):
		start, stop = np.searchsorted(times, [onset, offset], side="left")
		segment = times[start:stop]
		signal[start:stop] = _envelope(segment, onset, offset) * np.sin(2 * np.pi * CARRIER_HZ * segment + phase)
	data[: cfg.n_informative] += cfg.snr * signal

	channels = tuple(ChannelMeta(name=f"MEG{index + 1:04d}", kind=ChannelKind.GRAD) for index in range(cfg.n_channels))
	recording = Recording(sample_rate_hz=cfg.sample_rate_hz, channels=channels, data=data.astype(np.float32))

	speech_s = float(np.sum(events.offsets - events.onsets))
	logger.info(
		f"Generated {cfg.duration_s:g} s session: {len(events)} speech intervals, "
		f"speech fraction {speech_s / cfg.duration_s:.3f}"
	)
	return recording, events
