"""Quantum graphs: spectra, scattering matrices and Green's functions."""

from .errors import (ConditionError, DegeneracyError, DomainError, GraphSpecError, PoleError,
                     QGraphError, ScanResolutionError, ScarPresentError, SeriesDivergenceError)
from .graph import Edge, GraphPoint, MetricGraph, build_graph, length_and_permutation, locate
from .greens import (EnergyPoint, GreensValue, auxiliary_graph, greens, greens_coefficients,
                     greens_compact, greens_open)
from .io import emit_graph_file, load_fixture, load_graph, parse_graph_file
from .oracle import auxiliary_limit_greens, path_sum_envelope, path_sum_greens
from .qmap import (QuantumMapSnapshot, edge_scattering, quantum_map, quantum_map_derivative)
from .scattering import (NearScarWarning, ScarBasis, ScatteringResult, detect_scar,
                         evaluate_scattering, internal_amplitudes, regularized_internal,
                         regularized_scattering, scattering_matrix, yq_inverse)
from .spectrum import (ProjectionKernel, SpectralRoot, eigenvector_and_normalization,
                       find_eigenvalues, normalization_constant, projection_kernel, secular)
from .vertex import VertexCondition, validate_condition, vertex_sigma, vertex_sigma_derivative

__version__ = "0.1.0"
