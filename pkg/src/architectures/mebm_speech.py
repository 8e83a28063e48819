import dataclasses
import logging
from dataclasses import dataclass
import numpy as np
import torch
from architectures.blocks import (
	BiLSTMBranch,
	BMEncoder,
	DepthwiseSeparableFusion,
	MultiScaleConv,
	SeededDropout,
	SpatialAttention,
	average_pool,
	concat_features,
	pooled_length,
	upsample_linear,
)
from architectures.probabilities import ProbabilitySequence
from utils.exceptions import ConfigError, DimensionError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelConfig:
	c_in: int = 204
	d: int = 128
	n_bm: int = 5
	n_ms: int = 12
	ms_kernel_sizes: tuple[int, ...] = (3, 5, 7, 9)
	# tuned so the default model has ~10.2 M parameters
	lstm_hidden: int = 960
	dropout_p: float = 0.01
	pool_window: int = 31
	pool_stride: int = 15
	ds_kernel_size: int = 7
	bm_kernel_size: int = 3
	bm_on: bool = True
	ms_on: bool = True
	lstm_on: bool = True

	def __post_init__(self):
		object.__setattr__(self, "ms_kernel_sizes", tuple(int(k) for k in self.ms_kernel_sizes))
		dims = {
			"c_in": self.c_in,
			"d": self.d,
			"n_bm": self.n_bm,
			"n_ms": self.n_ms,
			"lstm_hidden": self.lstm_hidden,
			"pool_window": self.pool_window,
			"pool_stride": self.pool_stride,
			"ds_kernel_size": self.ds_kernel_size,
			"bm_kernel_size": self.bm_kernel_size,
		}
		for name, value in dims.items():
			if value < 1:
				raise ConfigError(f"ModelConfig.{name} must be at least 1, got {value}")
		if not self.ms_kernel_sizes or min(self.ms_kernel_sizes) < 1:
			raise ConfigError(f"ms_kernel_sizes must be a non-empty list of positive sizes, got {self.ms_kernel_sizes}")
		if not 0 <= self.dropout_p < 1:
			raise ConfigError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
		if self.pool_stride > self.pool_window:
			raise ConfigError(f"pool_stride ({self.pool_stride}) must not exceed pool_window ({self.pool_window})")
		if not (self.bm_on or self.ms_on or self.lstm_on):
			raise ConfigError("At least one of bm_on, ms_on, lstm_on must be true")

	@property
	def gate_dim(self) -> int:
		return max(1, self.c_in // 4)

	@property
	def fused_dim(self) -> int:
		return self.d * (int(self.bm_on) + int(self.ms_on)) + 2 * self.lstm_hidden * int(self.lstm_on)

	@property
	def block_kernel_sizes(self) -> list[int]:
		return [self.ms_kernel_sizes[j % len(self.ms_kernel_sizes)] for j in range(self.n_ms)]

	def to_dict(self) -> dict:
		return dataclasses.asdict(self)


def branch_parameter_counts(cfg: ModelConfig) -> dict[str, int]:
	"""
	Closed-form parameter count per component, without allocating any weights.
	"""
	c, d, gate, hidden = cfg.c_in, cfg.d, cfg.gate_dim, cfg.lstm_hidden
	fused = cfg.fused_dim

	spatial_attention = (c * gate + gate) + (gate * c + c) + (c * d + d)
	bm_block = (d * d * cfg.bm_kernel_size + d) + (d * d + d)
	lstm_direction = 4 * hidden * (d + hidden) + 8 * hidden

	return {
		"spatial_attention": spatial_attention,
		"bm_encoder": cfg.n_bm * bm_block if cfg.bm_on else 0,
		"multiscale_conv": sum(d * d * k + d for k in cfg.block_kernel_sizes) if cfg.ms_on else 0,
		"bilstm": 2 * lstm_direction if cfg.lstm_on else 0,
		"ds_fusion": (fused * cfg.ds_kernel_size + fused) + (fused * d + d),
		"head": d + 1,
	}


def count_params(cfg: ModelConfig) -> int:
	return sum(branch_parameter_counts(cfg).values())


def _check_finite(tensor: torch.Tensor, layer: str):
	if not torch.isfinite(tensor).all():
		raise NumericError(f"Non-finite activations in layer '{layer}'")


def _clamp_open_unit(probabilities: torch.Tensor) -> torch.Tensor:
	eps = torch.finfo(probabilities.dtype).eps
	return probabilities.clamp(eps, 1 - eps)


class MEBMSpeech(torch.nn.Module):
	"""
	Multi-branch speech-activity decoder.

	spatial attention -> {BM encoder, multi-scale conv, BiLSTM} -> concat -> depthwise-separable fusion
	-> average pooling -> sigmoid head -> linear upsampling back to the input length.
	"""

	def __init__(self, cfg: ModelConfig):
		super().__init__()
		self.config = cfg
		self.spatial_attention = SpatialAttention(cfg.c_in, cfg.d, cfg.gate_dim)
		self.bm_encoder = BMEncoder(cfg.d, cfg.n_bm, cfg.bm_kernel_size) if cfg.bm_on else None
		self.multiscale_conv = (
			MultiScaleConv(cfg.d, cfg.n_ms, cfg.ms_kernel_sizes, cfg.dropout_p) if cfg.ms_on else None
		)
		self.bilstm = BiLSTMBranch(cfg.d, cfg.lstm_hidden) if cfg.lstm_on else None
		self.ds_fusion = DepthwiseSeparableFusion(cfg.fused_dim, cfg.d, cfg.ds_kernel_size)
		self.fusion_dropout = SeededDropout(cfg.dropout_p)
		self.head = torch.nn.Linear(cfg.d, 1)

	def head_forward(self, pooled: torch.Tensor) -> torch.Tensor:
		"""
		Sigmoid head on pooled features of shape (batch, d, L).

		Probabilities are clamped to [eps, 1 - eps] of the parameter dtype, so saturated logits stay strictly
		inside (0, 1).
		"""
		return _clamp_open_unit(torch.sigmoid(self.head(pooled.transpose(1, 2))).squeeze(-1))

	def pooled_probabilities(self, x, generator: torch.Generator = None, training: bool = None):
		if x.dim() == 2:
			x = x.unsqueeze(0)
		if x.dim() != 3 or x.shape[1] != self.config.c_in:
			raise DimensionError(f"Expected input of shape (batch, {self.config.c_in}, T), got {tuple(x.shape)}")

		h = self.spatial_attention(x)
		_check_finite(h, "spatial_attention")

		f_bm = f_ms = f_lstm = None
		if self.bm_encoder is not None:
			f_bm = self.bm_encoder(h)
			_check_finite(f_bm, "bm_encoder")
		if self.multiscale_conv is not None:
			f_ms = self.multiscale_conv(h, generator=generator, training=training)
			_check_finite(f_ms, "multiscale_conv")
		if self.bilstm is not None:
			f_lstm = self.bilstm(h)
			_check_finite(f_lstm, "bilstm")

		features = self.ds_fusion(concat_features(f_bm, f_ms, f_lstm))
		fused = self.fusion_dropout(features, generator=generator, training=training)
		_check_finite(fused, "ds_fusion")
		pooled = average_pool(fused, self.config.pool_window, self.config.pool_stride)
		return self.head_forward(pooled)

	def forward(self, x, generator: torch.Generator = None, training: bool = None):
		"""
		Args:
		    x (torch.Tensor): Signal of shape (batch, c_in, T) or (c_in, T).
		    generator (torch.Generator, optional): Random stream for dropout masks in training mode.
		    training (bool, optional): Dropout on or off for this call. Defaults to the module mode.

		Returns:
		    torch.Tensor: Speech probabilities of shape (batch, T).
		"""
		n_frames = x.shape[-1]
		pooled = self.pooled_probabilities(x, generator=generator, training=training)
		# interpolation rounding can touch the bounds again
		probabilities = _clamp_open_unit(upsample_linear(pooled, n_frames))
		_check_finite(probabilities, "head")
		return probabilities

	def pooled_length(self, n_frames: int) -> int:
		return pooled_length(n_frames, self.config.pool_window, self.config.pool_stride)


def init_params(cfg: ModelConfig, seed: int) -> MEBMSpeech:
	"""
	Build a model and initialize it deterministically from `seed`.

	Weights are uniform in ±sqrt(6 / (fan_in + fan_out)), biases are zero, and the forget-gate slice
	of every LSTM input bias is 1.0.

	Args:
	    cfg (ModelConfig): Architecture hyperparameters.
	    seed (int): Initialization seed.

	Returns:
	    MEBMSpeech: The initialized model.
	"""
	model = MEBMSpeech(cfg)
	generator = torch.Generator().manual_seed(seed)
	with torch.no_grad():
		for name, param in model.named_parameters():
			if param.dim() >= 2:
				torch.nn.init.xavier_uniform_(param, generator=generator)
			else:
				param.zero_()
				if name.startswith("bilstm.") and "bias_ih" in name:
					hidden = cfg.lstm_hidden
					param[hidden : 2 * hidden] = 1.0
	return model


def predict_probabilities(model: MEBMSpeech, signal: np.ndarray, frame_rate_hz: float = 100.0) -> ProbabilitySequence:
	"""
	Evaluation-mode forward pass of a single (c_in, T) window.
	"""
	dtype = next(model.parameters()).dtype
	with torch.no_grad():
		probabilities = model(torch.tensor(np.array(signal), dtype=dtype).unsqueeze(0), training=False)
	return ProbabilitySequence(frame_rate_hz=frame_rate_hz, values=probabilities[0].double().numpy())
