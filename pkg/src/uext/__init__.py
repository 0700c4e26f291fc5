"""Ultrafilter extensions of relational structures: finite computation,
symbolic presentations, neighborhoods, modal and first-order tooling."""

from .errors import CapExceeded, InputError, ParseError
from .structure import Road, Structure, find_road, format_frame, parse_frame
from .presentation import Presentation, expand, extend, format_presentation, parse_presentation, validate
from .ultrafilter import Ultrafilter, principal, ue_extension_finite, ue_related
from .neighborhood import canonical_form, emit_chi, emit_psi, extract, p_iso
from .modal import alt_n, check, frame_valid, parse_modal, phi_formula
from .fo import evaluate, parse_fo, sharp_translate
from .criterion import counterexample_frame, criterion_validity, family_K_check

__all__ = [
    "CapExceeded", "InputError", "ParseError",
    "Road", "Structure", "find_road", "format_frame", "parse_frame",
    "Presentation", "expand", "extend", "format_presentation", "parse_presentation", "validate",
    "Ultrafilter", "principal", "ue_extension_finite", "ue_related",
    "canonical_form", "emit_chi", "emit_psi", "extract", "p_iso",
    "alt_n", "check", "frame_valid", "parse_modal", "phi_formula",
    "evaluate", "parse_fo", "sharp_translate",
    "counterexample_frame", "criterion_validity", "family_K_check",
]
