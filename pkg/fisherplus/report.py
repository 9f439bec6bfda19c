import csv
import io
import json
import math
from typing import Any, Dict, List, Optional, Sequence, TextIO

from . import __version__
from .bounds import SensitivityBreakdown, entanglement_witness
from .clock import CoefficientProfile, ScalingRecord, SweepRecord

"""
    report.py
    ---------
    Serialization of sweep, scaling, coefficient and bound results to CSV
    and JSON. Floats are written in their shortest round-trip form, so
    re-reading a file reproduces every value exactly and identical inputs
    give byte-identical files.
"""

SWEEP_HEADER = [
    "j", "N", "tau", "tau_scaled", "theta",
    "F", "E", "FplusE", "Fq", "chiSqz",
    "F_resc", "E_resc", "FplusE_resc", "Fq_resc", "chiSqz_resc",
]
SCALING_HEADER = [
    "j", "N", "tau_opt", "tau_opt_scaled", "F", "E", "E_resc", "gain_ratio", "c_H", "witness_F", "witness_FE",
]
COEFFICIENT_HEADER = ["m", "c_opt", "c_opt0", "c_H"]
BOUND_HEADER = [
    "j", "N", "tau", "tau_scaled", "theta", "F", "E", "FplusE", "Fq", "chiSqz", "a", "b",
    "F_resc", "FplusE_resc", "Fq_resc", "chiSqz_resc", "witness_F", "witness_FE", "witness_SQZ",
    "repetitions", "estimator_variance",
]

Row = List[Any]


def format_number(value: Any) -> str:
    """Shortest string that parses back to the same float; integers stay integers."""
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value)
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def sweep_rows(records: Sequence[SweepRecord]) -> List[Row]:
    return [
        [
            r.j, r.N, r.tau, r.tau_scaled, r.theta,
            r.fisher, r.enhancement, r.enhanced, r.quantum_fisher, r.squeezing,
            r.fisher_rescaled, r.enhancement_rescaled, r.enhanced_rescaled,
            r.quantum_fisher_rescaled, r.squeezing_rescaled,
        ]
        for r in records
    ]


def scaling_rows(records: Sequence[ScalingRecord]) -> List[Row]:
    return [
        [
            r.j, r.N, r.tau_opt, r.tau_opt_scaled, r.fisher, r.enhancement, r.enhancement_rescaled,
            r.gain_ratio, r.c_h, r.witness_f, r.witness_fe,
        ]
        for r in records
    ]


def coefficient_rows(profile: CoefficientProfile) -> List[Row]:
    return [list(row) for row in profile.rows()]


def bound_rows(j: float, tau: float, breakdown: SensitivityBreakdown) -> List[Row]:
    N = int(round(2 * j))
    squeezing = breakdown.squeezing if breakdown.squeezing is not None else math.nan
    witness_sqz = entanglement_witness(squeezing, N) if breakdown.squeezing is not None else None
    return [
        [
            j, N, tau, tau * math.sqrt(j), breakdown.theta,
            breakdown.fisher, breakdown.enhancement, breakdown.enhanced, breakdown.quantum_fisher, squeezing,
            breakdown.a, breakdown.b,
            breakdown.fisher / N, breakdown.enhanced / N, breakdown.quantum_fisher / N, squeezing / N,
            entanglement_witness(breakdown.fisher, N), entanglement_witness(breakdown.enhanced, N), witness_sqz,
            breakdown.repetitions, breakdown.estimator_variance,
        ]
    ]


def write_csv(stream: TextIO, header: Sequence[str], rows: Sequence[Row]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])


def _json_value(value: Any) -> Any:
    """Non-finite floats become the strings used in the CSV, which strict JSON parsers accept."""
    if isinstance(value, float) and not math.isfinite(value):
        return format_number(value)
    return value


def write_json(
    stream: TextIO, header: Sequence[str], rows: Sequence[Row], metadata: Optional[Dict[str, Any]] = None
) -> None:
    """Records as objects keyed by the CSV header, plus a metadata object."""
    document = {
        "metadata": {"version": __version__, **(metadata or {})},
        "records": [{key: _json_value(value) for key, value in zip(header, row)} for row in rows],
    }
    json.dump(document, stream, indent=2, allow_nan=False)
    stream.write("\n")


def render(header: Sequence[str], rows: Sequence[Row], fmt: str = "csv", metadata: Optional[Dict[str, Any]] = None) -> str:
    """Return the table as CSV or JSON text."""
    buffer = io.StringIO()
    if fmt == "csv":
        write_csv(buffer, header, rows)
    elif fmt == "json":
        write_json(buffer, header, rows, metadata)
    else:
        raise ValueError(f"Output format must be 'csv' or 'json', got {fmt!r}")
    return buffer.getvalue()


def write_output(
    output: Optional[str],
    header: Sequence[str],
    rows: Sequence[Row],
    fmt: str = "csv",
    metadata: Optional[Dict[str, Any]] = None,
    stream: Optional[TextIO] = None,
) -> None:
    """Write the table to ``output``, or to ``stream`` when no path is given."""
    text = render(header, rows, fmt, metadata)
    if output is None:
        assert stream is not None
        stream.write(text)
        return
    with open(output, "w", newline="") as file:
        file.write(text)


def read_csv(file_path: str) -> List[Dict[str, str]]:
    """Read a CSV written by write_csv back into one dict per row."""
    with open(file_path, newline="") as file:
        return list(csv.DictReader(file))
