"""Floquet dynamical quantum phase transitions in periodically quenched chiral lattices."""

from .criticality import (Branch, CriticalPoint, GaplessMomentum, critical_points,
                          critical_points_general, critical_points_pql, critical_times,
                          gapless_momenta, on_phase_boundary)
from .errors import (ConfigurationError, DegenerateBandError, DomainError, FloquetError,
                     ParameterError, UndefinedPhaseError)
from .floquet_core import (PauliOperator, SpectrumSample, evolution_operator, evolve_eigenstate,
                           floquet_operator, micromotion_operator, spectrum_at)
from .geometry import (DtopTrace, PhaseTrace, dtop, dynamical_phase, dynamical_phase_quadrature,
                       geometric_phase, phase_trace, total_phase)
from .observables import (CuspReport, ReturnTrace, detect_cusps, k_grid, rate_function,
                          return_amplitude, return_probability, s_grid)
from .protocols import PERIOD, ProtocolKind, QuenchProtocol, hamiltonian_at, make_custom, make_pql, split_time

__all__ = [
    "Branch", "CriticalPoint", "GaplessMomentum", "critical_points", "critical_points_general",
    "critical_points_pql", "critical_times", "gapless_momenta", "on_phase_boundary",
    "ConfigurationError", "DegenerateBandError", "DomainError", "FloquetError", "ParameterError",
    "UndefinedPhaseError", "PauliOperator", "SpectrumSample", "evolution_operator",
    "evolve_eigenstate", "floquet_operator", "micromotion_operator", "spectrum_at", "DtopTrace",
    "PhaseTrace", "dtop", "dynamical_phase", "dynamical_phase_quadrature", "geometric_phase",
    "phase_trace", "total_phase", "CuspReport", "ReturnTrace", "detect_cusps", "k_grid",
    "rate_function", "return_amplitude", "return_probability", "s_grid", "PERIOD", "ProtocolKind",
    "QuenchProtocol", "hamiltonian_at", "make_custom", "make_pql", "split_time",
]
