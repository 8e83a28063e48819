import torch
from utils.exceptions import NumericError


def build_optimizer(
	model: torch.nn.Module,
	learning_rate: float = 1e-3,
	weight_decay: float = 0.01,
	betas: tuple[float, float] = (0.9, 0.999),
	eps: float = 1e-8,
) -> torch.optim.AdamW:
	"""
	AdamW with decoupled weight decay on weight matrices / kernels only.

	Biases (1-D tensors, LSTM biases included) are placed in a group without decay.
	"""
	decay, no_decay = [], []
	for param in model.parameters():
		if not param.requires_grad:
			continue
		(decay if param.dim() >= 2 else no_decay).append(param)

	groups = [{"params": decay, "weight_decay": weight_decay}]
	if no_decay:
		groups.append({"params": no_decay, "weight_decay": 0.0})
	return torch.optim.AdamW(groups, lr=learning_rate, betas=betas, eps=eps)


def adamw_step(model: torch.nn.Module, gradients: dict[str, torch.Tensor], optimizer: torch.optim.AdamW):
	"""
	Apply one AdamW update with the given gradients.

	θ ← θ − lr · (m̂ / (√v̂ + ε) + wd · θ), with bias-corrected moments; the optimizer's step count advances.
	"""
	for name, param in model.named_parameters():
		if name not in gradients:
			raise KeyError(f"No gradient supplied for parameter '{name}'")
		gradient = gradients[name]
		if not torch.isfinite(gradient).all():
			raise NumericError(f"Non-finite gradient for parameter '{name}'")
		param.grad = gradient.detach().to(param.dtype).clone()

	optimizer.step()
	optimizer.zero_grad(set_to_none=True)


def step_count(optimizer: torch.optim.Optimizer) -> int:
	steps = [state["step"] for state in optimizer.state.values() if "step" in state]
	return int(max(steps)) if steps else 0
