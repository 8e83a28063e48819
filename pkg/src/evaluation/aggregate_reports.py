import logging
import numpy as np
from utils.utils import load_key_value_report, save_key_value_report

logger = logging.getLogger(__name__)


def _as_number(value: str) -> float | None:
	try:
		return float(value)
	except ValueError:
		return None


def aggregate_reports(reports: list[dict[str, str]]) -> dict[str, float]:
	"""
	Mean and population standard deviation of every numeric key shared by all reports.

	Args:
	    reports (list[dict[str, str]]): Loaded metric reports, one per seed.

	Returns:
	    dict[str, float]: `<key>_mean`, `<key>_std` for each numeric key, plus `n_reports`.
	"""
	if not reports:
		raise ValueError("No reports to aggregate")

	aggregated = {"n_reports": len(reports)}
	for key in reports[0]:
		values = [_as_number(report.get(key, "")) for report in reports]
		if any(value is None for value in values):
			continue
		values = np.array(values, dtype=np.float64)
		aggregated[f"{key}_mean"] = float(values.mean())
		aggregated[f"{key}_std"] = float(values.std())

	return aggregated


def aggregate_report_files(paths: list[str], output_path: str = None) -> dict[str, float]:
	aggregated = aggregate_reports([load_key_value_report(path) for path in paths])
	if "f1_macro_mean" in aggregated:
		logger.info(
			f"F1_macro over {len(paths)} runs: {aggregated['f1_macro_mean']:.4f} ± {aggregated['f1_macro_std']:.4f}"
		)
	if output_path is not None:
		save_key_value_report(aggregated, output_path)
	return aggregated
