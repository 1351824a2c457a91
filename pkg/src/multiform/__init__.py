"""Integrate heterogeneous ("multiform") sources into XML complex objects."""
from .dtd import DtdTable, first_set, link_check, load_canonical, parse_dtd, render_dtd
from .emit import ValueBinding, emit, escape_text, wrap_cdata
from .model import ComplexObject, Subdocument, to_binding
from .validate import ValidationReport, parse_document, validate, validate_semantics

__all__ = [
    "ComplexObject",
    "DtdTable",
    "Subdocument",
    "ValidationReport",
    "ValueBinding",
    "emit",
    "escape_text",
    "first_set",
    "link_check",
    "load_canonical",
    "parse_document",
    "parse_dtd",
    "render_dtd",
    "to_binding",
    "validate",
    "validate_semantics",
    "wrap_cdata",
]
