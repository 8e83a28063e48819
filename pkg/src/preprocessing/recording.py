import enum
import logging
import math
import struct
from dataclasses import dataclass
import numpy as np
from utils.exceptions import ChannelNameError, HeaderError, PayloadLengthError, RecordingFormatError

logger = logging.getLogger(__name__)

MAGIC = b"MEGR"
VERSION = 1
# magic, version, n_channels, n_samples, sample_rate_hz
_HEADER = struct.Struct("<4sIIQd")
_NAME_LENGTH = struct.Struct("<H")
_KIND = struct.Struct("<B")


class ChannelKind(enum.IntEnum):
	GRAD = 0
	MAG = 1
	OTHER = 2

	@classmethod
	def parse(cls, value: "str | int | ChannelKind") -> "ChannelKind":
		if isinstance(value, str):
			try:
				return cls[value.upper()]
			except KeyError:
				raise ValueError(f"Unknown channel kind: {value}")
		return cls(value)


@dataclass(frozen=True)
class ChannelMeta:
	name: str
	kind: ChannelKind


@dataclass(frozen=True)
class Recording:
	"""
	A multichannel recording, `data` is (n_channels, n_samples) float32 and read-only.
	"""

	sample_rate_hz: float
	channels: tuple[ChannelMeta, ...]
	data: np.ndarray

	def __post_init__(self):
		channels = tuple(self.channels)
		data = np.array(self.data, dtype=np.float32, order="C", copy=True)
		if data.ndim != 2:
			raise ValueError(f"Recording data must be 2-D, got shape {data.shape}")
		if data.shape[0] != len(channels):
			raise ValueError(f"Recording has {len(channels)} channels but {data.shape[0]} data rows")
		if data.shape[1] < 1:
			raise ValueError("Recording must contain at least one sample")
		if not math.isfinite(self.sample_rate_hz) or self.sample_rate_hz <= 0:
			raise ValueError(f"Sample rate must be positive and finite, got {self.sample_rate_hz}")
		names = [channel.name for channel in channels]
		if len(set(names)) != len(names):
			raise ValueError("Channel names must be unique within a recording")

		data.flags.writeable = False
		object.__setattr__(self, "channels", channels)
		object.__setattr__(self, "data", data)
		object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

	@property
	def n_channels(self) -> int:
		return self.data.shape[0]

	@property
	def n_samples(self) -> int:
		return self.data.shape[1]

	@property
	def duration_s(self) -> float:
		return self.n_samples / self.sample_rate_hz

	def with_data(self, data: np.ndarray, sample_rate_hz: float = None) -> "Recording":
		return Recording(
			sample_rate_hz=self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz,
			channels=self.channels,
			data=data,
		)


def encode_recording(rec: Recording) -> bytes:
	parts = [_HEADER.pack(MAGIC, VERSION, rec.n_channels, rec.n_samples, rec.sample_rate_hz)]
	for channel in rec.channels:
		if "\x00" in channel.name:
			raise ChannelNameError(f"Channel name {channel.name!r} contains a NUL byte")
		name = channel.name.encode("utf-8")
		if len(name) > 0xFFFF:
			raise ChannelNameError(f"Channel name {channel.name[:32]!r}... is longer than 65535 bytes")
		parts.append(_NAME_LENGTH.pack(len(name)))
		parts.append(name)
		parts.append(_KIND.pack(int(channel.kind)))
	parts.append(rec.data.astype("<f4", copy=False).tobytes(order="C"))
	return b"".join(parts)


def decode_recording(payload: bytes, source: str = "<bytes>") -> Recording:
	if len(payload) < _HEADER.size:
		raise HeaderError(f"{source}: file is shorter than the {_HEADER.size}-byte MEGR header")

	magic, version, n_channels, n_samples, sample_rate_hz = _HEADER.unpack_from(payload, 0)
	if magic != MAGIC:
		raise RecordingFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
	if version != VERSION:
		raise RecordingFormatError(f"{source}: unsupported MEGR version {version}")
	if not math.isfinite(sample_rate_hz) or sample_rate_hz <= 0:
		raise HeaderError(f"{source}: invalid sample rate {sample_rate_hz}")
	if n_samples < 1:
		raise HeaderError(f"{source}: invalid sample count {n_samples}")

	offset = _HEADER.size
	channels = []
	for index in range(n_channels):
		if offset + _NAME_LENGTH.size > len(payload):
			raise PayloadLengthError(f"{source}: truncated channel table at channel {index}")
		(name_length,) = _NAME_LENGTH.unpack_from(payload, offset)
		offset += _NAME_LENGTH.size
		if offset + name_length + _KIND.size > len(payload):
			raise PayloadLengthError(f"{source}: truncated channel table at channel {index}")
		try:
			name = payload[offset : offset + name_length].decode("utf-8")
		except UnicodeDecodeError as e:
			raise ChannelNameError(f"{source}: channel {index} name is not valid UTF-8") from e
		if "\x00" in name:
			raise ChannelNameError(f"{source}: channel {index} name contains a NUL byte")
		offset += name_length
		(kind,) = _KIND.unpack_from(payload, offset)
		offset += _KIND.size
		try:
			channels.append(ChannelMeta(name=name, kind=ChannelKind(kind)))
		except ValueError as e:
			raise HeaderError(f"{source}: channel {index} has unknown kind code {kind}") from e

	expected = n_channels * n_samples * 4
	remaining = len(payload) - offset
	if remaining != expected:
		raise PayloadLengthError(
			f"{source}: payload holds {remaining} bytes, header declares {n_channels}x{n_samples} float32 "
			f"({expected} bytes)"
		)
	data = np.frombuffer(payload, dtype="<f4", count=n_channels * n_samples, offset=offset)
	data = data.reshape(n_channels, n_samples)

	return Recording(sample_rate_hz=sample_rate_hz, channels=tuple(channels), data=data)


def load_recording(path: str) -> Recording:
	"""
	Load a recording stored in the MEGR binary format.

	Args:
	    path (str): Path to the `.megr` file.

	Returns:
	    Recording: The decoded recording.
	"""
	with open(path, "rb") as f:
		payload = f.read()
	recording = decode_recording(payload, source=path)
	logger.debug(f"Loaded {path}: {recording.n_channels} channels x {recording.n_samples} samples")
	return recording


def save_recording(rec: Recording, path: str):
	payload = encode_recording(rec)
	with open(path, "wb") as f:
		f.write(payload)
