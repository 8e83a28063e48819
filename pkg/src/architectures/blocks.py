import torch
from utils.exceptions import ConfigError, DegenerateInputError, DimensionError


def _check_channels(x: torch.Tensor, expected: int, layer: str):
	if x.dim() != 3 or x.shape[1] != expected:
		raise DimensionError(f"{layer}: expected input of shape (batch, {expected}, T), got {tuple(x.shape)}")


class SeededDropout(torch.nn.Module):
	"""
	Inverted dropout whose mask is drawn from an explicit torch.Generator.

	With no generator the global torch RNG is used. Identity in eval mode, unless `training` overrides the
	module mode for a single call.
	"""

	def __init__(self, p: float):
		super().__init__()
		self.p = p

	def forward(self, x, generator: torch.Generator = None, training: bool = None):
		active = self.training if training is None else training
		if not active or self.p == 0:
			return x
		keep = torch.rand(x.shape, generator=generator, dtype=x.dtype, device=x.device) >= self.p
		return x * keep / (1 - self.p)


class SpatialAttention(torch.nn.Module):
	"""
	Squeeze-style channel gate followed by a per-time-step projection to the feature space.

	g = sigmoid(W2 · gelu(W1 · mean_t(x))), output = P · (x ⊙ g).
	"""

	def __init__(self, c_in: int, d: int, gate_dim: int):
		super().__init__()
		self.c_in = c_in
		self.squeeze = torch.nn.Linear(c_in, gate_dim)
		self.excite = torch.nn.Linear(gate_dim, c_in)
		self.projection = torch.nn.Linear(c_in, d)
		self.activation = torch.nn.GELU()

	def gate(self, x):
		return torch.sigmoid(self.excite(self.activation(self.squeeze(x.mean(dim=-1)))))

	def forward(self, x):
		_check_channels(x, self.c_in, "spatial_attention")
		weighted = x * self.gate(x).unsqueeze(-1)
		return self.projection(weighted.transpose(1, 2)).transpose(1, 2)


class BMEncoderBlock(torch.nn.Module):
	def __init__(self, d: int, kernel_size: int, dilation: int):
		super().__init__()
		self.conv_in = torch.nn.Conv1d(d, d, kernel_size, dilation=dilation, padding="same")
		self.conv_out = torch.nn.Conv1d(d, d, 1)
		self.activation = torch.nn.GELU()

	def forward(self, h):
		return h + self.conv_out(self.activation(self.conv_in(h)))


class BMEncoder(torch.nn.Module):
	"""
	BM encoder: a stack of residual dilated convolutions.

	Block k uses a kernel-3 convolution with dilation 2^(k mod 5), a GELU and a 1x1 output convolution.
	"""

	def __init__(self, d: int, n_blocks: int, kernel_size: int = 3):
		super().__init__()
		self.d = d
		self.blocks = torch.nn.ModuleList(
			[BMEncoderBlock(d, kernel_size, dilation=2 ** (k % 5)) for k in range(n_blocks)]
		)

	def forward(self, h):
		_check_channels(h, self.d, "bm_encoder")
		for block in self.blocks:
			h = block(h)
		return h


class MultiScaleBlock(torch.nn.Module):
	def __init__(self, d: int, kernel_size: int, dropout_p: float):
		super().__init__()
		self.conv = torch.nn.Conv1d(d, d, kernel_size, padding="same")
		self.activation = torch.nn.GELU()
		self.dropout = SeededDropout(dropout_p)

	def forward(self, h, generator: torch.Generator = None, training: bool = None):
		return h + self.dropout(self.activation(self.conv(h)), generator=generator, training=training)


class MultiScaleConv(torch.nn.Module):
	def __init__(self, d: int, n_blocks: int, kernel_sizes: tuple[int, ...], dropout_p: float):
		super().__init__()
		self.d = d
		self.kernel_sizes = [kernel_sizes[j % len(kernel_sizes)] for j in range(n_blocks)]
		self.blocks = torch.nn.ModuleList([MultiScaleBlock(d, k, dropout_p) for k in self.kernel_sizes])

	def forward(self, h, generator: torch.Generator = None, training: bool = None):
		_check_channels(h, self.d, "multiscale_conv")
		for block in self.blocks:
			h = block(h, generator=generator, training=training)
		return h


class BiLSTMBranch(torch.nn.Module):
	"""
	Single-layer bidirectional LSTM over time, zero initial states.

	Per direction, with gates in torch order (input, forget, cell, output):
	    i = σ(W_ii x + b_ii + W_hi h + b_hi)
	    f = σ(W_if x + b_if + W_hf h + b_hf)
	    g = tanh(W_ig x + b_ig + W_hg h + b_hg)
	    o = σ(W_io x + b_io + W_ho h + b_ho)
	    c' = f ⊙ c + i ⊙ g,   h' = o ⊙ tanh(c')
	Output rows are [forward hidden; backward hidden].
	"""

	def __init__(self, d: int, hidden: int):
		super().__init__()
		self.d = d
		self.hidden = hidden
		self.lstm = torch.nn.LSTM(input_size=d, hidden_size=hidden, num_layers=1, batch_first=True, bidirectional=True)

	def forward(self, h):
		_check_channels(h, self.d, "bilstm")
		output, _ = self.lstm(h.transpose(1, 2))
		return output.transpose(1, 2)


def concat_features(f_bm=None, f_ms=None, f_lstm=None) -> torch.Tensor:
	"""
	Stack the enabled branch outputs along the feature axis in the order (bm, ms, lstm).

	Disabled branches are passed as None.
	"""
	features = [f for f in (f_bm, f_ms, f_lstm) if f is not None]
	if not features:
		raise ConfigError("At least one temporal branch must be enabled")
	lengths = {f.shape[-1] for f in features}
	if len(lengths) != 1:
		raise DimensionError(f"Branch outputs disagree on the number of time steps: {sorted(lengths)}")
	if len(features) == 1:
		return features[0]
	return torch.cat(features, dim=1)


class DepthwiseSeparableFusion(torch.nn.Module):
	def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 7):
		super().__init__()
		self.in_channels = in_channels
		self.depthwise = torch.nn.Conv1d(in_channels, in_channels, kernel_size, padding="same", groups=in_channels)
		self.pointwise = torch.nn.Conv1d(in_channels, out_channels, 1)
		self.activation = torch.nn.GELU()

	def forward(self, f):
		_check_channels(f, self.in_channels, "ds_fusion")
		return self.activation(self.pointwise(self.depthwise(f)))


def pooled_length(n_frames: int, window: int, stride: int) -> int:
	return (n_frames - window) // stride + 1


def average_pool(h: torch.Tensor, window: int, stride: int) -> torch.Tensor:
	if h.shape[-1] < window:
		raise DegenerateInputError(f"Cannot pool {h.shape[-1]} time steps with a window of {window}")
	return torch.nn.functional.avg_pool1d(h, kernel_size=window, stride=stride)


def upsample_linear(p: torch.Tensor, target_len: int) -> torch.Tensor:
	"""
	Endpoint-aligned linear interpolation along the last axis of a (batch, L) tensor.
	"""
	if p.shape[-1] < 2:
		raise DegenerateInputError(f"Linear upsampling needs at least 2 source points, got {p.shape[-1]}")
	if target_len < 2:
		raise DegenerateInputError(f"Linear upsampling needs a target length of at least 2, got {target_len}")
	if target_len == p.shape[-1]:
		return p
	upsampled = torch.nn.functional.interpolate(p.unsqueeze(1), size=target_len, mode="linear", align_corners=True)
	return upsampled.squeeze(1)
