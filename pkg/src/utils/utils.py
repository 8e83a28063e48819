import os
import yaml


def load_config(path: str) -> dict:
	with open(path, "r", encoding="utf-8") as file:
		config = yaml.safe_load(file)
	return config if config is not None else {}


def save_key_value_report(data: dict, output_path: str):
	"""
	Save a flat report as `key=value` lines, in insertion order.

	Floats are written with 6 decimal places, everything else with str().

	Args:
	    data (dict): The report to be saved.
	    output_path (str): Destination file. Its directory must already exist.
	"""
	lines = []
	for key, value in data.items():
		if isinstance(value, float):
			lines.append(f"{key}={value:.6f}")
		else:
			lines.append(f"{key}={value}")

	with open(output_path, "w", encoding="utf-8") as f:
		f.write("\n".join(lines) + "\n")


def load_key_value_report(file_path: str) -> dict[str, str]:
	"""
	Load a flat `key=value` report. Values are returned as strings.

	Args:
	    file_path (str): Path to the report.

	Returns:
	    dict[str, str]: Report entries in file order.
	"""
	report = {}
	with open(file_path, "r", encoding="utf-8") as f:
		for line in f:
			line = line.strip()
			if not line or line.startswith("#"):
				continue
			key, _, value = line.partition("=")
			report[key.strip()] = value.strip()
	return report


def ensure_output_dir(output_dir: str):
	os.makedirs(output_dir, exist_ok=True)


def print_metrics(metrics):
	"""
	Print formatted metric names and values.

	Args:
	    metrics (dict): Dictionary of metric names and their values.
	"""
	for metric, value in zip(metrics.keys(), metrics.values()):
		if isinstance(value, float):
			print(f"  {metric:<25} {value:>10.4f}")
		else:
			print(f"  {metric:<25} {value:>10}")
