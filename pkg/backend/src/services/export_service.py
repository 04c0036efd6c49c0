"""Service for rendering reports as aligned text, CSV and JSON."""

from __future__ import annotations

from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd

from backend.src.processors.valuation import ValueReport
from backend.src.services.comparison_service import ComparisonReport
from backend.src.utils.logger import Logger


logger: Logger = Logger(__name__)

EXPORT_FORMATS: tuple[str, ...] = ("txt", "csv", "json")


class ExportService:
    """Turns reports into tables and writes them in the requested formats."""

    @staticmethod
    def generate_filename(subject: str, fmt: str = "csv") -> str:
        """``<subject>_<YYYYMMDD>.<fmt>`` with the subject made filesystem-safe."""
        clean: str = "".join(c if c.isalnum() or c in "-_" else "_" for c in subject).strip("_")
        return f"{clean or 'report'}_{datetime.now().strftime('%Y%m%d')}.{fmt}"

    @staticmethod
    def export_to_csv(frame: pd.DataFrame, index: bool = True) -> str:
        return frame.to_csv(index=index)

    @staticmethod
    def export_to_json(frame: pd.DataFrame) -> str:
        return frame.to_json(orient="split", indent=2)

    @staticmethod
    def export_to_text(frame: pd.DataFrame, float_format: str = "{:.4g}") -> str:
        """Aligned plain-text table."""
        return frame.to_string(float_format=float_format.format)

    # -- report tables -------------------------------------------------------
    @staticmethod
    def comparison_table(report: ComparisonReport) -> pd.DataFrame:
        return report.table()

    @staticmethod
    def value_table(report: ValueReport) -> pd.DataFrame:
        """Storage value rows; per-door ratios are gross values per installed MW."""
        rows: dict[str, float] = {
            "Storage Room": report.storage_room,
            "Storage Door": report.storage_door,
            "Net Energy Value": report.energy_value,
            "Net Capacity Value": report.capacity_value,
            "Energy Value per Door (gross)": report.energy_value_per_door,
            "Capacity Value per Door (gross)": report.capacity_value_per_door,
            "Room Rent Sum": report.room_rent_sum,
            "Door Rent Sum": report.door_rent_sum,
            "Omega Positive Differences": report.omega_pos_diff_sum,
        }
        return pd.DataFrame({"value": rows})

    @staticmethod
    def identity_table(report: ValueReport) -> pd.DataFrame:
        return pd.DataFrame([c.to_dict() for c in report.checks])

    @staticmethod
    def cycles_table(report: ValueReport) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {"start": c.start, "end": c.end, "value": c.value, "monotone": c.monotone}
                for c in report.cycles
            ],
            columns=["start", "end", "value", "monotone"],
        )

    @staticmethod
    def hourly_table(result_arrays: dict[str, np.ndarray]) -> pd.DataFrame:
        frame = pd.DataFrame(result_arrays)
        frame.index.name = "hour"
        return frame

    # -- writing -------------------------------------------------------------
    @classmethod
    def render(cls, frame: pd.DataFrame, fmt: str) -> str:
        if fmt == "txt":
            return cls.export_to_text(frame)
        if fmt == "csv":
            return cls.export_to_csv(frame)
        if fmt == "json":
            return cls.export_to_json(frame)
        raise ValueError(f"unknown export format {fmt!r}; expected one of {EXPORT_FORMATS}")

    @classmethod
    def write(
        cls,
        frame: pd.DataFrame,
        directory: str | Path,
        subject: str,
        formats: tuple[str, ...] = ("txt", "csv"),
    ) -> list[Path]:
        out_dir = Path(directory)
        out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        for fmt in formats:
            path = out_dir / cls.generate_filename(subject, fmt)
            path.write_text(cls.render(frame, fmt), encoding="utf-8")
            written.append(path)
        logger.info("report written", subject=subject, files=[p.name for p in written])
        return written
