"""
Report rows and their JSON and CSV encodings.

Reports carry no timestamps and floats are written with ``repr``, so the
same configuration and seed always produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

FIDELITY_SLACK = 1e-9


class ReportError(Exception):
    """Raised when a report cannot be written or read back."""

    def __init__(self, message: str, file_path: Path | None = None):
        self.file_path = file_path
        if file_path:
            full_message = f"{message} (file: {file_path})"
        else:
            full_message = message
        super().__init__(full_message)


class RowValueError(Exception):
    """Raised when a computed value cannot appear in a report row."""

    def __init__(self, message: str, column: str):
        self.column = column
        super().__init__(f"{message} (column: {column})")


@dataclass
class ReportRow:
    """One line of a report; unused columns stay empty."""

    protocol: str
    ordering: str = ""
    alpha: float | None = None
    beta: float | None = None
    oracle: str = ""
    control: str = ""
    outcomes: str = ""
    detector: str = ""
    readout: str = ""
    probability: float | None = None
    count: int | None = None
    fidelity: float | None = None
    fidelity_ff_off: float | None = None
    ideal_fidelity: float | None = None
    stabilizer_fidelity: float | None = None
    purity: float | None = None
    measured_fidelity: float | None = None
    measured_error: float | None = None
    noise_p: float = 1.0
    depolarizing: str = ""
    ff: bool = True
    frame: str = ""
    amplitudes: str = ""

    def __post_init__(self):
        for name in ("fidelity", "fidelity_ff_off", "ideal_fidelity", "stabilizer_fidelity"):
            value = getattr(self, name)
            if value is not None and not -FIDELITY_SLACK <= value <= 1 + FIDELITY_SLACK:
                raise RowValueError(f"{value!r} outside [0, 1]", column=name)

    def to_record(self) -> dict[str, Any]:
        return asdict(self)


COLUMNS = tuple(f.name for f in fields(ReportRow))
_FLOAT_COLUMNS = {
    "alpha",
    "beta",
    "probability",
    "fidelity",
    "fidelity_ff_off",
    "ideal_fidelity",
    "stabilizer_fidelity",
    "purity",
    "measured_fidelity",
    "measured_error",
    "noise_p",
}
_INT_COLUMNS = {"count"}
_BOOL_COLUMNS = {"ff"}


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(column: str, text: str) -> Any:
    if column in _BOOL_COLUMNS:
        return text == "true"
    if column in _FLOAT_COLUMNS:
        return float(text) if text else None
    if column in _INT_COLUMNS:
        return int(text) if text else None
    return text


def render_json(rows: Iterable[ReportRow], meta: Mapping[str, Any]) -> str:
    document = {"meta": dict(meta), "rows": [row.to_record() for row in rows]}
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_csv(rows: Iterable[ReportRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        record = row.to_record()
        writer.writerow([_csv_cell(record[column]) for column in COLUMNS])
    return buffer.getvalue()


def read_csv_rows(text: str) -> list[ReportRow]:
    """
    Parse a CSV report back into typed rows.

    Raises:
        ReportError: If the header does not match the report columns
    """
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ReportError("CSV header does not match the report columns")
    return [
        ReportRow(**{column: _parse_cell(column, record[column]) for column in COLUMNS})
        for record in reader
    ]


def read_json_rows(text: str) -> list[ReportRow]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ReportError(f"Invalid report JSON at line {e.lineno}: {e.msg}") from e
    return [ReportRow(**record) for record in document.get("rows", [])]


class ReportWriter:
    """Renders report rows in one format and writes them to a file or string."""

    def __init__(self, format: str = "json"):
        if format not in ("json", "csv"):
            raise ReportError(f"Unknown report format '{format}'")
        self.format = format

    def render(self, rows: list[ReportRow], meta: Mapping[str, Any]) -> str:
        if self.format == "csv":
            return render_csv(rows)
        return render_json(rows, meta)

    def write(self, rows: list[ReportRow], meta: Mapping[str, Any], output_path: Path) -> None:
        """
        Write the rendered report.

        Raises:
            ReportError: If the file cannot be written
        """
        output_path = Path(output_path)
        text = self.render(rows, meta)
        try:
            output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(output_path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as e:
            raise ReportError(f"Cannot write report: {e}", file_path=output_path) from e
        logger.info(f"Wrote {len(rows)} rows to {output_path} ({self.format})")
