import numpy as np
import torch
from architectures.mebm_speech import MEBMSpeech
from utils.exceptions import DimensionError, NumericError


def _as_tensor(values) -> torch.Tensor:
	if isinstance(values, torch.Tensor):
		return values
	return torch.tensor(np.array(getattr(values, "values", values), dtype=np.float64))


def mse_loss(probabilities, labels) -> torch.Tensor:
	"""
	Mean squared error between predicted probabilities and binary labels, averaged over frames and windows.

	Accepts tensors, arrays, ProbabilitySequence / LabelVector objects, of shape (T,) or (batch, T).
	"""
	probabilities = _as_tensor(probabilities)
	labels = _as_tensor(labels)
	if probabilities.shape != labels.shape:
		raise DimensionError(
			f"Probabilities of shape {tuple(probabilities.shape)} vs labels of shape {tuple(labels.shape)}"
		)
	return torch.nn.functional.mse_loss(probabilities, labels.to(probabilities.dtype))


def param_gradients(
	model: MEBMSpeech, batch: list[tuple], generator: torch.Generator = None, training: bool = True
) -> tuple[float, dict[str, torch.Tensor]]:
	"""
	Gradient of the batch-mean MSE with respect to every model parameter.

	Args:
	    model (MEBMSpeech): The model. Its parameters and its train/eval mode are left untouched.
	    batch (list[tuple]): Non-empty list of (signal (c_in, T), labels (T,)) pairs of equal T.
	    generator (torch.Generator, optional): Random stream for dropout masks.
	    training (bool, optional): Dropout on for this forward pass. Defaults to True.

	Returns:
	    tuple[float, dict[str, torch.Tensor]]: The loss value and one gradient per named parameter.
	        Parameters the loss does not depend on get an all-zero gradient.
	"""
	if not batch:
		raise ValueError("param_gradients needs a non-empty batch")

	dtype = next(model.parameters()).dtype
	signals = torch.stack([_as_tensor(x).to(dtype) for x, _ in batch])
	labels = torch.stack([_as_tensor(y).to(dtype) for _, y in batch])

	probabilities = model(signals, generator=generator, training=training)
	loss = mse_loss(probabilities, labels)
	if not torch.isfinite(loss):
		raise NumericError(f"Non-finite training loss: {loss.item()}")

	names, params = zip(*[(name, p) for name, p in model.named_parameters() if p.requires_grad])
	grads = torch.autograd.grad(loss, params, allow_unused=True)
	gradients = {
		name: torch.zeros_like(param) if grad is None else grad for name, param, grad in zip(names, params, grads)
	}
	return loss.item(), gradients
