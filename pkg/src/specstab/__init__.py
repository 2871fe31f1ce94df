"""Spectral stability of Weyl-quantized lattice symbols under slowly varying perturbations.

Main entry points:

- :func:`parse_symbol`, :func:`parse_field`, :func:`perturb` build symbols,
- :func:`weyl_hopping` and :func:`filtered_spectrum` turn them into spectra,
- :func:`bloch_spectrum` gives exact Harper spectra at rational flux,
- :func:`hausdorff` and :func:`fit_scaling` measure how spectra move.
"""

__version__ = "0.1.0"

from .hofstadter import (
    BlochGrid,
    RationalFlux,
    best_rational,
    bloch_matrix,
    bloch_spectrum,
    dirac_gap_experiment,
    flux_equivalence_check,
)
from .metrics import (
    ScalingReport,
    edge_deviation,
    fit_scaling,
    hausdorff,
    norm_chain_check,
    track_inner_gap,
    triangle_chain_check,
)
from .quantize import HoppingOperator, fiber_matrix, hermiticity_residual, weyl_hopping
from .spectrum import Gap, SpectralSet, detect_gaps, edges, eigen_hermitian, filtered_spectrum, gap_near
from .symbols import (
    PerturbationField,
    Symbol,
    boundedness_probe,
    eval_expr,
    parse_field,
    parse_symbol,
    perturb,
    xi_decompose,
)

__all__ = [
    "BlochGrid",
    "Gap",
    "HoppingOperator",
    "PerturbationField",
    "RationalFlux",
    "ScalingReport",
    "SpectralSet",
    "Symbol",
    "best_rational",
    "bloch_matrix",
    "bloch_spectrum",
    "boundedness_probe",
    "detect_gaps",
    "dirac_gap_experiment",
    "edge_deviation",
    "edges",
    "eigen_hermitian",
    "eval_expr",
    "fiber_matrix",
    "filtered_spectrum",
    "fit_scaling",
    "flux_equivalence_check",
    "gap_near",
    "hausdorff",
    "hermiticity_residual",
    "norm_chain_check",
    "parse_field",
    "parse_symbol",
    "perturb",
    "track_inner_gap",
    "triangle_chain_check",
    "weyl_hopping",
    "xi_decompose",
]
