"""Uniform result objects and their JSON / CSV serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

__all__ = [
    "DEFAULT_REL_TOL",
    "DEFAULT_RESIDUAL_TOL",
    "CSV_HEADER",
    "Comparison",
    "UncertaintyReport",
    "emit_json",
    "emit_csv_row",
    "csv_columns",
    "parse_json",
    "format_float",
    "encode_json",
]

DEFAULT_REL_TOL = 1e-6
DEFAULT_RESIDUAL_TOL = 1e-6
CSV_HEADER = "# euclid-mcs v1"


def format_float(x: float) -> str:
    """17 significant digits; round-trips exactly through ``float``."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    # Keep a float marker so JSON parsing does not turn the value into an int.
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


@dataclass
class Comparison:
    """A quadrature value set against its closed form.

    ``abs_tol`` and ``rel_tol`` are both honoured: the comparison passes if
    the gap is within either.  ``equation`` names the closed form used.
    """

    quadrature: float
    closed_form: float
    equation: str
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = 0.0

    @property
    def abs_gap(self) -> float:
        return abs(self.quadrature - self.closed_form)

    @property
    def rel_gap(self) -> float:
        scale = abs(self.closed_form)
        return self.abs_gap / scale if scale > 0 else self.abs_gap

    @property
    def verdict(self) -> str:
        ok = self.abs_gap <= self.abs_tol or self.rel_gap <= self.rel_tol
        return "PASS" if ok else "FAIL"

    def to_dict(self) -> dict[str, Any]:
        return {
            "quadrature": self.quadrature,
            "closed_form": self.closed_form,
            "equation": self.equation,
            "abs_gap": self.abs_gap,
            "rel_gap": self.rel_gap,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "verdict": self.verdict,
        }


@dataclass
class UncertaintyReport:
    """Measured expectations and deviations of one constructed state."""

    system: str
    params: dict[str, Any]
    grid: dict[str, Any]
    quadrature: dict[str, float] = field(default_factory=dict)
    comparisons: dict[str, Comparison] = field(default_factory=dict)
    residuals: dict[str, float] = field(default_factory=dict)
    residual_tol: float = DEFAULT_RESIDUAL_TOL
    notes: dict[str, str] = field(default_factory=dict)

    def compare(self, name: str, quadrature: float, closed_form: float, equation: str,
                rel_tol: float | None = None, abs_tol: float = 0.0) -> None:
        self.comparisons[name] = Comparison(
            float(quadrature), float(closed_form), equation,
            DEFAULT_REL_TOL if rel_tol is None else rel_tol, abs_tol,
        )

    @property
    def verdicts(self) -> dict[str, str]:
        out = {k: c.verdict for k, c in self.comparisons.items()}
        for k, r in self.residuals.items():
            out[f"residual:{k}"] = "PASS" if r <= self.residual_tol else "FAIL"
        return out

    @property
    def passed(self) -> bool:
        return all(v == "PASS" for v in self.verdicts.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "system": self.system,
            "params": dict(self.params),
            "grid": dict(self.grid),
            "closed_form": {k: c.to_dict() for k, c in self.comparisons.items()},
            "quadrature": dict(self.quadrature),
            "residuals": dict(self.residuals),
            "residual_tol": self.residual_tol,
            "notes": dict(self.notes),
            "verdicts": self.verdicts,
            "overall": "PASS" if self.passed else "FAIL",
        }


def _encode(obj: Any) -> str:
    """Deterministic JSON with fixed float formatting and sorted keys."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        text = format_float(obj)
        return f'"{text}"' if text in ("NaN", "Infinity", "-Infinity") else text
    if isinstance(obj, complex):
        return _encode([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalars
        return _encode(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode_json(obj: Any) -> str:
    """Deterministic JSON for arbitrary nested values (sorted keys, 17 digits)."""
    return _encode(obj)


def _require_complete(report: UncertaintyReport) -> None:
    if not report.system:
        raise ValueError("incomplete report: missing system id")
    if not report.quadrature and not report.comparisons:
        raise ValueError("incomplete report: no measured values")


def emit_json(report: UncertaintyReport) -> str:
    _require_complete(report)
    return _encode(report.to_dict())


def csv_columns(report: UncertaintyReport) -> list[str]:
    cols = ["system"]
    cols += [f"param:{k}" for k in sorted(report.params)]
    cols += [f"q:{k}" for k in sorted(report.quadrature)]
    cols += [f"cf:{k}" for k in sorted(report.comparisons)]
    cols += [f"res:{k}" for k in sorted(report.residuals)]
    cols += ["overall"]
    return cols


def emit_csv_row(report: UncertaintyReport, header: bool = True) -> str:
    """One CSV row (with the versioned header and column names if asked)."""
    _require_complete(report)

    def cell(v: Any) -> str:
        if isinstance(v, float):
            return format_float(v)
        return str(v)

    vals = [report.system]
    vals += [cell(report.params[k]) for k in sorted(report.params)]
    vals += [cell(report.quadrature[k]) for k in sorted(report.quadrature)]
    vals += [
        f"{format_float(report.comparisons[k].quadrature)}|{report.comparisons[k].verdict}"
        for k in sorted(report.comparisons)
    ]
    vals += [cell(report.residuals[k]) for k in sorted(report.residuals)]
    vals += ["PASS" if report.passed else "FAIL"]
    lines = []
    if header:
        lines += [CSV_HEADER, ",".join(csv_columns(report))]
    lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _decode_float(v: Any) -> Any:
    if isinstance(v, str) and v in ("NaN", "Infinity", "-Infinity"):
        return float(v)
    return v


def parse_json(text: str) -> UncertaintyReport:
    """Inverse of :func:`emit_json`."""
    obj = json.loads(text)
    rep = UncertaintyReport(
        system=obj["system"],
        params=obj["params"],
        grid=obj["grid"],
        quadrature={k: _decode_float(v) for k, v in obj["quadrature"].items()},
        residuals={k: _decode_float(v) for k, v in obj["residuals"].items()},
        residual_tol=obj["residual_tol"],
        notes=obj.get("notes", {}),
    )
    for k, c in obj["closed_form"].items():
        rep.comparisons[k] = Comparison(
            _decode_float(c["quadrature"]), _decode_float(c["closed_form"]), c["equation"],
            c["rel_tol"], c["abs_tol"],
        )
    return rep


def report_equal(a: UncertaintyReport, b: UncertaintyReport) -> bool:
    """Structural equality (used by the round-trip tests)."""
    return emit_json(a) == emit_json(b)
