"""Spectra of one-dimensional Schroedinger operators with Fibonacci-type potentials.

The continuum potential is built by laying local pieces end to end along a
substitution word. Everything spectral goes through 2x2 transfer matrices
and, for the Fibonacci substitution, the trace map and its invariant.
"""
from ._backend import BACKEND
from .lyapunov import LyapunovEstimate, lyapunov_estimate, lyapunov_estimates, uniformity_probe
from .models import ClosedFormModel, closed_form_initials, closed_form_invariant, closed_form_of
from .potential import (Constant, Model, PointInteraction, Sampled, concatenate, evaluate, fibonacci_model,
                        validate_model)
from .spectrum import (Band, ResolutionError, SpectralCover, band_spectrum, box_dimension_estimate, classify_grid,
                       cover_measure_sequence, merge_covers)
from .subshift import (Alphabet, DomainError, Substitution, Word, check_primitivity, fibonacci_substitution,
                       iterate_substitution, letter_frequencies)
from .tracemap import (TraceTriple, fricke_vogt, initial_conditions, invariant_of_energy, surface_mesh,
                       trace_map_step, trace_recursion)
from .transfer import EnergyGrid, TransferMatrix, piece_matrix, word_matrix

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Alphabet", "Band", "ClosedFormModel", "Constant", "DomainError", "EnergyGrid",
    "LyapunovEstimate", "Model", "PointInteraction", "ResolutionError", "Sampled", "SpectralCover",
    "Substitution", "TraceTriple", "TransferMatrix", "Word", "band_spectrum", "box_dimension_estimate",
    "check_primitivity", "classify_grid", "closed_form_initials", "closed_form_invariant", "closed_form_of",
    "concatenate", "cover_measure_sequence", "evaluate", "fibonacci_model", "fibonacci_substitution",
    "fricke_vogt", "initial_conditions", "invariant_of_energy", "iterate_substitution", "letter_frequencies",
    "lyapunov_estimate", "lyapunov_estimates", "merge_covers", "piece_matrix", "surface_mesh",
    "trace_map_step", "trace_recursion", "uniformity_probe", "validate_model", "word_matrix",
]
