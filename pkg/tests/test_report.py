"""Tests for the report module."""

import io
import json
import os

import numpy as np
import pytest

from fisherplus import __version__
from fisherplus.bounds import SensitivityBreakdown
from fisherplus.clock import CoefficientProfile, ScalingRecord, SweepRecord
from fisherplus.report import (
    BOUND_HEADER,
    COEFFICIENT_HEADER,
    SCALING_HEADER,
    SWEEP_HEADER,
    bound_rows,
    coefficient_rows,
    format_number,
    read_csv,
    render,
    scaling_rows,
    sweep_rows,
    write_output,
)


def _sweep_records():
    return [
        SweepRecord(j=25.0, tau=0.1, theta=0.0, fisher=1 / 3, enhancement=2 / 7, quantum_fisher=1.5, squeezing=60.0),
        SweepRecord(j=25.0, tau=0.2, theta=0.0, fisher=10.0, enhancement=0.0, quantum_fisher=20.0, squeezing=70.0),
    ]


class TestFormatNumber:
    """Tests for format_number."""

    @pytest.mark.parametrize(
        "value, expected",
        [(0.1, "0.1"), (3, "3"), (None, ""), (1e-300, "1e-300"), (np.float64(2.5), "2.5"), (float("inf"), "inf")],
    )
    def test_values(self, value, expected: str) -> None:
        """Test the shortest round-trip form."""
        assert format_number(value) == expected

    def test_round_trip(self) -> None:
        """Test that parsing the string gives back the same float."""
        value = 1 / 3
        assert float(format_number(value)) == value


class TestCsv:
    """Tests for the CSV output."""

    def test_sweep_header(self) -> None:
        """Test the column order of the sweep table."""
        text = render(SWEEP_HEADER, sweep_rows(_sweep_records()))
        assert text.splitlines()[0] == (
            "j,N,tau,tau_scaled,theta,F,E,FplusE,Fq,chiSqz,F_resc,E_resc,FplusE_resc,Fq_resc,chiSqz_resc"
        )
        assert len(text.splitlines()) == 3

    def test_round_trip(self, temp_dir: str) -> None:
        """Test that values read back from a file are exactly those written."""
        records = _sweep_records()
        path = os.path.join(temp_dir, "sweep.csv")
        write_output(path, SWEEP_HEADER, sweep_rows(records))
        rows = read_csv(path)
        assert len(rows) == 2
        assert float(rows[0]["F"]) == records[0].fisher
        assert float(rows[0]["FplusE"]) == records[0].enhanced
        assert int(rows[1]["N"]) == 50
        assert float(rows[1]["tau_scaled"]) == records[1].tau_scaled

    def test_deterministic(self) -> None:
        """Test that identical inputs give identical text."""
        rows = sweep_rows(_sweep_records())
        assert render(SWEEP_HEADER, rows) == render(SWEEP_HEADER, rows)

    def test_stream_output(self) -> None:
        """Test writing to a stream when no path is given."""
        stream = io.StringIO()
        write_output(None, COEFFICIENT_HEADER, [[1.0, 0.5, 0.25, 0.0]], stream=stream)
        assert stream.getvalue() == "m,c_opt,c_opt0,c_H\n1.0,0.5,0.25,0.0\n"

    def test_scaling_rows(self) -> None:
        """Test the scaling table columns."""
        record = ScalingRecord(
            j=25.0, tau_opt=0.36, fisher=177.0, enhancement=921.5, gain_ratio=6.2, c_h=7e-3, witness_f=3, witness_fe=21
        )
        row = dict(zip(SCALING_HEADER, scaling_rows([record])[0]))
        assert row["N"] == 50
        assert row["E_resc"] == pytest.approx(18.43)
        assert row["witness_FE"] == 21

    def test_coefficient_rows(self) -> None:
        """Test one row per outcome label."""
        profile = CoefficientProfile(labels=(-1.0, 0.0, 1.0), c_opt=np.array([0.6, 0.0, -0.8]), c_opt0=np.ones(3), c_h=0.0)
        rows = coefficient_rows(profile)
        assert [row[0] for row in rows] == [-1.0, 0.0, 1.0]
        assert rows[2][1] == -0.8

    def test_bound_rows_without_squeezing(self) -> None:
        """Test that missing squeezing and repetitions leave empty or nan cells."""
        breakdown = SensitivityBreakdown(theta=0.0, fisher=177.0, enhancement=921.5, quantum_fisher=1200.0, a=1.0, b=2.0)
        rows = bound_rows(25.0, 0.36, breakdown)
        text = render(BOUND_HEADER, rows)
        record = dict(zip(BOUND_HEADER, text.splitlines()[1].split(",")))
        assert record["witness_F"] == "3"
        assert record["witness_FE"] == "21"
        assert record["witness_SQZ"] == ""
        assert record["chiSqz"] == "nan"
        assert record["repetitions"] == ""


class TestJson:
    """Tests for the JSON output."""

    def test_records_and_metadata(self) -> None:
        """Test that records are keyed by the header and the metadata carries the version."""
        text = render(SWEEP_HEADER, sweep_rows(_sweep_records()), "json", {"command": "sweep"})
        document = json.loads(text)
        assert document["metadata"] == {"version": __version__, "command": "sweep"}
        assert document["records"][1]["F"] == 10.0
        assert list(document["records"][0]) == SWEEP_HEADER

    def test_non_finite_values_are_strict_json(self) -> None:
        """Test that infinities are written as strings a strict parser accepts."""

        def reject(constant: str) -> None:
            raise ValueError(f"Non-standard JSON constant {constant}")

        rows = [[1.0, float("inf"), float("-inf"), float("nan")]]
        text = render(["a", "b", "c", "d"], rows, "json")
        (record,) = json.loads(text, parse_constant=reject)["records"]
        assert record == {"a": 1.0, "b": "inf", "c": "-inf", "d": "nan"}

    def test_unknown_format(self) -> None:
        """Test that only csv and json are supported."""
        with pytest.raises(ValueError, match="csv"):
            render(SWEEP_HEADER, [], "xml")
