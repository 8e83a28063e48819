import dataclasses
import struct
import typing
import numpy as np
import torch
from architectures.mebm_speech import MEBMSpeech, ModelConfig
from utils.exceptions import CheckpointFormatError

MAGIC = b"MEBM"
VERSION = 1

# field tags of the serialized ModelConfig
_TAG_INT = 0
_TAG_FLOAT = 1
_TAG_BOOL = 2
_TAG_INT_LIST = 3


class _Reader:
	def __init__(self, payload: bytes, source: str):
		self.payload = payload
		self.source = source
		self.offset = 0

	def unpack(self, fmt: str):
		size = struct.calcsize(fmt)
		if self.offset + size > len(self.payload):
			raise CheckpointFormatError(f"{self.source}: truncated checkpoint at byte {self.offset}")
		values = struct.unpack_from(fmt, self.payload, self.offset)
		self.offset += size
		return values

	def read_bytes(self, size: int) -> bytes:
		if self.offset + size > len(self.payload):
			raise CheckpointFormatError(f"{self.source}: truncated checkpoint at byte {self.offset}")
		chunk = self.payload[self.offset : self.offset + size]
		self.offset += size
		return chunk

	def read_name(self) -> str:
		(length,) = self.unpack("<H")
		return self.read_bytes(length).decode("utf-8")


def _pack_name(name: str) -> bytes:
	encoded = name.encode("utf-8")
	return struct.pack("<H", len(encoded)) + encoded


def _encode_config(cfg: ModelConfig) -> bytes:
	fields = dataclasses.fields(cfg)
	parts = [struct.pack("<H", len(fields))]
	for field in fields:
		value = getattr(cfg, field.name)
		parts.append(_pack_name(field.name))
		if isinstance(value, bool):
			parts.append(struct.pack("<BB", _TAG_BOOL, int(value)))
		elif isinstance(value, int):
			parts.append(struct.pack("<Bq", _TAG_INT, value))
		elif isinstance(value, float):
			parts.append(struct.pack("<Bd", _TAG_FLOAT, value))
		else:
			values = list(value)
			parts.append(struct.pack(f"<BH{len(values)}q", _TAG_INT_LIST, len(values), *values))
	return b"".join(parts)


def _decode_config(reader: _Reader) -> ModelConfig:
	known = {field.name for field in dataclasses.fields(ModelConfig)}
	(n_fields,) = reader.unpack("<H")
	values = {}
	for _ in range(n_fields):
		name = reader.read_name()
		(tag,) = reader.unpack("<B")
		if tag == _TAG_BOOL:
			(value,) = reader.unpack("<B")
			value = bool(value)
		elif tag == _TAG_INT:
			(value,) = reader.unpack("<q")
		elif tag == _TAG_FLOAT:
			(value,) = reader.unpack("<d")
		elif tag == _TAG_INT_LIST:
			(length,) = reader.unpack("<H")
			value = tuple(reader.unpack(f"<{length}q"))
		else:
			raise CheckpointFormatError(f"{reader.source}: unknown config field tag {tag} for '{name}'")
		if name not in known:
			raise CheckpointFormatError(f"{reader.source}: unknown config field '{name}'")
		values[name] = value
	return ModelConfig(**values)


def encode_checkpoint(
	cfg: ModelConfig, state_dict: typing.Mapping[str, torch.Tensor], epoch: int, validation_loss: float
) -> bytes:
	parts = [MAGIC, struct.pack("<I", VERSION), _encode_config(cfg), struct.pack("<I", len(state_dict))]
	for name, tensor in state_dict.items():
		data = tensor.detach().cpu().to(torch.float32).contiguous().numpy()
		parts.append(_pack_name(name))
		parts.append(struct.pack(f"<B{data.ndim}I", data.ndim, *data.shape))
		parts.append(data.astype("<f4", copy=False).tobytes())
	parts.append(struct.pack("<Id", epoch, validation_loss))
	return b"".join(parts)


def decode_checkpoint(payload: bytes, source: str = "<bytes>") -> tuple[ModelConfig, dict, int, float]:
	reader = _Reader(payload, source)
	if reader.read_bytes(4) != MAGIC:
		raise CheckpointFormatError(f"{source}: not an MEBM checkpoint (bad magic)")
	(version,) = reader.unpack("<I")
	if version != VERSION:
		raise CheckpointFormatError(f"{source}: unsupported checkpoint version {version}")

	cfg = _decode_config(reader)
	(n_tensors,) = reader.unpack("<I")
	state_dict = {}
	for _ in range(n_tensors):
		name = reader.read_name()
		(ndim,) = reader.unpack("<B")
		shape = reader.unpack(f"<{ndim}I")
		count = int(np.prod(shape, dtype=np.int64))
		data = np.frombuffer(reader.read_bytes(4 * count), dtype="<f4").reshape(shape)
		state_dict[name] = torch.from_numpy(data.copy())
	epoch, validation_loss = reader.unpack("<Id")
	if reader.offset != len(payload):
		raise CheckpointFormatError(f"{source}: {len(payload) - reader.offset} trailing bytes after the footer")

	return cfg, state_dict, epoch, validation_loss


def save_checkpoint(model: MEBMSpeech, path: str, epoch: int, validation_loss: float):
	payload = encode_checkpoint(model.config, model.state_dict(), epoch, validation_loss)
	with open(path, "wb") as f:
		f.write(payload)


def load_checkpoint(path: str) -> tuple[MEBMSpeech, int, float]:
	"""
	Load a checkpoint file and rebuild the model it describes.

	Args:
	    path (str): Path to the `.mebm` file.

	Returns:
	    tuple[MEBMSpeech, int, float]: The model in eval mode, its epoch and its validation loss.
	"""
	with open(path, "rb") as f:
		payload = f.read()
	cfg, state_dict, epoch, validation_loss = decode_checkpoint(payload, source=path)
	model = MEBMSpeech(cfg)
	try:
		model.load_state_dict(state_dict)
	except RuntimeError as e:
		raise CheckpointFormatError(f"{path}: tensors do not match the stored config: {e}") from e
	model.eval()
	return model, epoch, validation_loss
