import torch
from preprocessing.windowing import TrainingWindow


class Dataset(torch.utils.data.Dataset):
	def __init__(self, windows: list[TrainingWindow], dtype: torch.dtype = torch.float32):
		self.windows = windows
		self.dtype = dtype

	def __len__(self):
		return len(self.windows)

	def __getitem__(self, idx):
		window = self.windows[idx]
		return {
			"signal": torch.tensor(window.signal, dtype=self.dtype),
			"labels": torch.tensor(window.labels.values, dtype=self.dtype),
		}
