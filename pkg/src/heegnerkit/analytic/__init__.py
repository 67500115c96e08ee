"""Analytic side: period lattices, the modular parametrisation, recognition."""

from .heegner import HilbertClassPoly, TraceResult, hilbert_class_poly, trace_coordinates, trace_point
from .lattice import PeriodLattice, curve_residual, elliptic_exp, elliptic_log, period_lattice, weierstrass_p
from .qexp import (
    HeegnerTau,
    ModularImage,
    eval_modular_map,
    j_invariant,
    manin_scaling,
    newform_periods,
    tau_of_form,
    terms_needed,
)
from .recognize import RecognizedPoint, recognize, recognize_point

__all__ = [
    "HeegnerTau",
    "HilbertClassPoly",
    "ModularImage",
    "PeriodLattice",
    "RecognizedPoint",
    "TraceResult",
    "curve_residual",
    "elliptic_exp",
    "elliptic_log",
    "eval_modular_map",
    "hilbert_class_poly",
    "j_invariant",
    "manin_scaling",
    "newform_periods",
    "period_lattice",
    "recognize",
    "recognize_point",
    "tau_of_form",
    "terms_needed",
    "trace_coordinates",
    "trace_point",
    "weierstrass_p",
]
