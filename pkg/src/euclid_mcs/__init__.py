"""Most classical (uncertainty-saturating) states of E(2)- and E(3)-invariant
elementary quantum systems in the momentum representation."""

from .report import UncertaintyReport, emit_csv_row, emit_json, parse_json
from .states import StateBundle, ValidationError

__version__ = "0.1.0"

__all__ = [
    "UncertaintyReport",
    "StateBundle",
    "ValidationError",
    "emit_json",
    "emit_csv_row",
    "parse_json",
    "__version__",
]
