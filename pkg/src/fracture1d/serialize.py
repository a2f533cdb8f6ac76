"""Flat-file formats: field text files, CSV tables and JSON mirrors.

Numbers are written with 12 significant digits, below the tightest
tolerance used anywhere, so emitted files re-parse to equivalent
values and identical inputs produce byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable, Sequence

from .harness import ScanReport, SweepReport
from .regularized import DiscreteField, SolveResult
from .sharp import DeformationGraph, PiecewiseConstantField, PiecewiseLinearField

__all__ = [
    "format_number",
    "write_field",
    "parse_field",
    "field_to_text",
    "discrete_csv",
    "solve_summary_json",
    "sweep_csv",
    "sweep_json",
    "scan_csv",
    "scan_json",
    "cracks_csv",
    "deformation_csv",
    "deformation_json",
]


def format_number(x) -> str:
    return f"{float(x):.12g}"


def field_to_text(field: PiecewiseConstantField | PiecewiseLinearField) -> str:
    """Serialize a sharp field: header lines, then knot/value pairs.

    Piecewise-constant fields list one (right edge, value) pair per
    piece; piecewise-linear fields list (knot, value) pairs.  Field
    files carry shortest-round-trip floats, not the 12-digit CSV
    precision, so re-parsing reproduces energies exactly.
    """
    out = [f"lambda {float(field.domain_length)!r}"]
    if isinstance(field, PiecewiseConstantField):
        out.append("kind pwconstant")
        edges = field.edges()
        for right, value in zip(edges[1:], field.values):
            out.append(f"{float(right)!r} {float(value)!r}")
    else:
        out.append("kind pwlinear")
        for knot, value in zip(field.knots, field.knot_values):
            out.append(f"{float(knot)!r} {float(value)!r}")
    return "\n".join(out) + "\n"


def parse_field(text: str) -> PiecewiseConstantField | PiecewiseLinearField:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if len(lines) < 3 or not lines[0].startswith("lambda ") or not lines[1].startswith("kind "):
        raise ValueError("field file needs 'lambda' and 'kind' header lines")
    lam = float(lines[0].split()[1])
    kind = lines[1].split()[1]
    pairs = [tuple(float(tok) for tok in ln.split()) for ln in lines[2:]]
    if any(len(p) != 2 for p in pairs):
        raise ValueError("field body lines must hold exactly two numbers")
    if kind == "pwconstant":
        rights = tuple(p[0] for p in pairs)
        values = tuple(p[1] for p in pairs)
        return PiecewiseConstantField(lam, rights[:-1], values)
    if kind == "pwlinear":
        return PiecewiseLinearField(lam, tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))
    raise ValueError(f"unknown field kind {kind!r}")


def write_field(path, field) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(field_to_text(field))


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_number(v) if isinstance(v, float) else v for v in row]
        )
    return buf.getvalue()


def discrete_csv(field: DiscreteField) -> str:
    nodes = field.nodes()
    return _csv_text(("y", "value"), zip(nodes.tolist(), field.values.tolist()))


def solve_summary_json(result: SolveResult, metadata: dict) -> str:
    payload = {
        "energy": result.energy,
        "rescaled_energy": result.rescaled_energy,
        "iterations": result.iterations,
        "transition_count": result.transition_count,
        "converged": result.converged,
        "start_label": result.start_label,
        "metadata": metadata,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


_SWEEP_COLUMNS = (
    "epsilon",
    "energy",
    "rescaled_energy",
    "transition_count",
    "l1_distance_to_sharp",
    "h1_seminorm_distance",
    "sup_distance",
    "mm_lower_bound",
    "nearest_candidate",
    "converged",
    "suspect",
)


def _sweep_row_cells(row):
    return (
        float(row.epsilon),
        float(row.energy),
        float(row.rescaled_energy),
        row.transition_count,
        float(row.l1_distance_to_sharp),
        "" if row.h1_seminorm_distance is None else float(row.h1_seminorm_distance),
        "" if row.sup_distance is None else float(row.sup_distance),
        float(row.mm_lower_bound),
        row.nearest_candidate,
        int(row.converged),
        int(row.suspect),
    )


def sweep_csv(report: SweepReport) -> str:
    return _csv_text(_SWEEP_COLUMNS, (_sweep_row_cells(r) for r in report.rows))


def sweep_json(report: SweepReport) -> str:
    payload = {
        "metadata": report.metadata,
        "rows": [dict(zip(_SWEEP_COLUMNS, _sweep_row_cells(r))) for r in report.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def scan_csv(report: ScanReport) -> str:
    mu = report.metadata["mu"]
    rows = (
        (
            float(r.lam),
            float(mu),
            r.n,
            float(r.energy),
            float(r.x),
            ";".join(format_number(p) for p in r.crack_positions),
        )
        for r in report.rows
    )
    return _csv_text(("lambda", "mu", "n", "V_n", "x", "crack_positions"), rows)


def scan_json(report: ScanReport) -> str:
    payload = {
        "metadata": report.metadata,
        "rows": [
            {
                "lambda": r.lam,
                "x": r.x,
                "n": r.n,
                "V_n": r.energy,
                "crack_positions": list(r.crack_positions),
            }
            for r in report.rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cracks_csv(variant_cracks: dict[str, Sequence[tuple[float, float]]]) -> str:
    rows = (
        (variant, float(x), float(opening))
        for variant, cracks in sorted(variant_cracks.items())
        for x, opening in cracks
    )
    return _csv_text(("variant", "material_position", "opening"), rows)


def deformation_csv(graph: DeformationGraph) -> str:
    rows = [
        ("segment", float(x0), float(x1), float(f0), float(f1))
        for x0, x1, f0, f1 in graph.segments
    ] + [("jump", float(x), float(x), float(lo), float(hi)) for x, lo, hi in graph.jumps]
    return _csv_text(("kind", "x_start", "x_end", "f_lower", "f_upper"), rows)


def deformation_json(graph: DeformationGraph) -> str:
    payload = {
        "segments": [list(seg) for seg in graph.segments],
        "jumps": [list(j) for j in graph.jumps],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
