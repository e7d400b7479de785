"""Cross-object redundancy: Reed-Solomon rows crossed with an XOR parity row."""

from .params import CodeParams, CoreError, IrrecoverableError, UnrecoverableRow, UnsupportedParams

__all__ = ["CodeParams", "CoreError", "IrrecoverableError", "UnrecoverableRow", "UnsupportedParams"]
__version__ = "0.1.0"
