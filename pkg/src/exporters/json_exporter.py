import json
import os
from typing import Any, Dict, Optional, Sequence

from src.interfaces import ExporterInterface
from src.metrics.report import MetricReport


class JSONExporter(ExporterInterface):
    def export(self, data: Any, output_path: str) -> str:
        """
        Export any data to a JSON file

        Args:
            data: JSON-serialisable data
            output_path: Path where to save the JSON file

        Returns:
            str: Path to the exported file
        """
        directory = os.path.dirname(output_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(output_path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)
        return output_path

    def export_reports(
        self,
        reports: Dict[str, MetricReport],
        output_path: str,
        summary: Optional[Dict[str, Sequence[float]]] = None,
    ) -> str:
        """
        Export per-file metric reports, plus an optional mean/CI summary

        Args:
            reports: Relative file path -> report
            output_path: Path where to save the JSON file
            summary: Metric name -> (mean, 95% half-width)

        Returns:
            str: Path to the exported file
        """
        data: Dict[str, Any] = {
            "count": len(reports),
            "reports": {name: report.to_dict() for name, report in reports.items()},
        }
        if summary is not None:
            data["summary"] = {
                name: {"mean": values[0], "ci95": values[1]} for name, values in summary.items()
            }
        return self.export(data, output_path)
