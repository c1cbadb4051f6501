"""
Result tables: CSV and JSON writers with exact float round trips
"""
import json
from dataclasses import asdict
from typing import IO, Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"

SWEEP_COLUMNS = [
    "T",
    "S_plus_dB",
    "S_minus_dB",
    "product",
    "S_plus_pre_dB",
    "S_minus_pre_dB",
    "product_pre",
    "analytic_S_plus_dB",
    "analytic_S_minus_dB",
]
SIMULATE_COLUMNS = ["quantity", "pipeline_dB", "analytic_dB", "delta_dB"]
SPECTRUM_COLUMNS = ["f_THz", "S_plus_dB", "S_minus_dB", "cancellation_dB"]


def records_to_frame(records: Iterable[Any], columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    rows = [asdict(record) for record in records]
    return pd.DataFrame(rows, columns=list(columns) if columns else None)


def _format_summary_value(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def write_csv(frame: pd.DataFrame, stream: IO[str], summary: Optional[Dict[str, Any]] = None) -> None:
    """Header, rows, then the summary as `# key,value` comment lines"""
    frame.to_csv(stream, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    for key, value in (summary or {}).items():
        stream.write(f"# {key},{_format_summary_value(value)}\n")


def read_csv(source: Union[str, IO[str]]) -> pd.DataFrame:
    return pd.read_csv(source, comment="#", float_precision="round_trip")


def read_summary(text: str) -> Dict[str, str]:
    """Summary block of a CSV written by write_csv, values left as text"""
    summary = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(",")
            summary[key] = value
    return summary


def _native(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    # JSON has no NaN or infinity
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(frame: pd.DataFrame, stream: IO[str], summary: Optional[Dict[str, Any]] = None) -> None:
    """Rows as a list of objects keyed by column; with a summary, {"rows": ..., "summary": ...}"""
    rows: List[Dict[str, Any]] = [
        {column: _native(value) for column, value in zip(frame.columns, row)}
        for row in frame.itertuples(index=False, name=None)
    ]
    payload: Any = rows
    if summary:
        payload = {"rows": rows, "summary": {key: _native(value) for key, value in summary.items()}}
    json.dump(payload, stream, indent=2, allow_nan=False)
    stream.write("\n")


def format_matrix(matrix: np.ndarray) -> str:
    """Row-major plain text, 17 significant digits"""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return "\n".join(" ".join(FLOAT_FORMAT % value for value in row) for row in matrix)
