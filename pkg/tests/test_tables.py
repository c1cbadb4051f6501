"""
Tests for result table writers
"""
import io
import json

import numpy as np
import pandas as pd
import pytest

from squeezing_gate_sim.core.gate import SweepRecord
from squeezing_gate_sim.core.tables import (
    SWEEP_COLUMNS,
    format_matrix,
    read_csv,
    read_summary,
    records_to_frame,
    write_csv,
    write_json,
)


@pytest.fixture
def frame(rng):
    return pd.DataFrame({
        "T": [0.2, 0.5, 1.0],
        "S_plus_dB": rng.normal(5, 2, 3),
        "S_minus_dB": [-1 / 3, np.pi, 1e-300],
    })


def test_csv_round_trip_is_exact(frame):
    stream = io.StringIO()
    write_csv(frame, stream)
    text = stream.getvalue()

    assert text.splitlines()[0] == "T,S_plus_dB,S_minus_dB"
    back = read_csv(io.StringIO(text))
    pd.testing.assert_frame_equal(back, frame, check_exact=True)


def test_csv_summary_lines(frame):
    stream = io.StringIO()
    write_csv(frame, stream, {"band_S_minus_dB": -1 / 3, "bins_in_band": 12, "status": "ok"})
    text = stream.getvalue()

    assert text.splitlines()[-3:] == [
        "# band_S_minus_dB,-0.33333333333333331",
        "# bins_in_band,12",
        "# status,ok",
    ]
    assert read_summary(text) == {
        "band_S_minus_dB": "-0.33333333333333331",
        "bins_in_band": "12",
        "status": "ok",
    }
    assert float(read_summary(text)["band_S_minus_dB"]) == -1 / 3
    assert len(read_csv(io.StringIO(text))) == 3


def test_json_shapes(frame):
    stream = io.StringIO()
    write_json(frame, stream)
    rows = json.loads(stream.getvalue())
    assert isinstance(rows, list)
    assert rows[1] == {"T": 0.5, "S_plus_dB": frame["S_plus_dB"][1], "S_minus_dB": np.pi}

    stream = io.StringIO()
    write_json(frame, stream, {"bins_in_band": np.int64(4)})
    payload = json.loads(stream.getvalue())
    assert set(payload) == {"rows", "summary"}
    assert payload["summary"] == {"bins_in_band": 4}
    assert len(payload["rows"]) == 3


def _strict_loads(text):
    def reject(token):
        raise ValueError(f"non-standard JSON token {token}")

    return json.loads(text, parse_constant=reject)


def test_json_writes_non_finite_as_null():
    frame = pd.DataFrame({"T": [0.5, 0.7], "measured_product": [1.5, np.nan]})
    stream = io.StringIO()
    write_json(frame, stream, {"band_dB": -np.inf})
    payload = _strict_loads(stream.getvalue())
    assert payload["rows"][0]["measured_product"] == 1.5
    assert payload["rows"][1]["measured_product"] is None
    assert payload["summary"] == {"band_dB": None}


def test_records_to_frame_orders_columns():
    record = SweepRecord(
        T=0.5,
        S_plus_dB=1.0,
        S_minus_dB=-1.0,
        product=1.2,
        S_plus_pre_dB=2.0,
        S_minus_pre_dB=-0.5,
        product_pre=1.4,
        analytic_S_plus_dB=1.0,
        analytic_S_minus_dB=-1.0,
    )
    frame = records_to_frame([record], SWEEP_COLUMNS)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame["product"][0] == 1.2


def test_format_matrix():
    assert format_matrix(np.eye(2)) == "1 0\n0 1"
    assert format_matrix([0.1]) == "0.10000000000000001"
    assert format_matrix(np.array([[1 / 3, -2.5]])).split() == ["0.33333333333333331", "-2.5"]
