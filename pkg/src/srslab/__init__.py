"""srslab: spontaneous Raman scattering in metastable trapped-ion qubits.

Scattering rates (four-channel Kramers-Heisenberg and the nearest-level
approximation), AC Stark shifts, Raman Rabi frequencies and SRS-limited
gate errors from fine-structure data, plus the lifetime and polarization
fits of the measurement analysis and a Monte-Carlo simulator of the
measurement loop.
"""

__version__ = "0.1.0"

from .angular import (
    BeamGeometry,
    SecondBeamGeometry,
    clebsch_gordan,
    spherical_components,
    wigner3j,
    wigner6j,
)
from .atomdata import (
    HyperfineState,
    SpeciesData,
    enumerate_hyperfine,
    format_state,
    load_species,
    parse_state,
    resolve_species,
)
from .couplings import dipole_me, quadrupole_geometric_factors
from .expsim import SequenceConfig, simulate_campaign, simulate_survival
from .fitting import (
    E2PolarizationFit,
    ExponentialDecayFit,
    RamanPolarizationFit,
    SurvivalCurve,
    extract_srs_rate,
    fit_exponential,
    fit_polarization_e2,
    fit_polarization_raman,
)
from .gates import (
    best_qubit_search,
    detuning_sweep,
    gate_error_table,
    raman_drives,
    single_qubit_error,
    two_qubit_error,
)
from .lightshift import differential_stark, field_from_stark, stark_shift
from .raman import pi_time, raman_rabi
from .scattering import LaserDrive, ResonanceError, scattering_report, srs_rate, srs_rate_ozeri, total_rate

__all__ = [
    "__version__",
    "BeamGeometry",
    "SecondBeamGeometry",
    "clebsch_gordan",
    "spherical_components",
    "wigner3j",
    "wigner6j",
    "HyperfineState",
    "SpeciesData",
    "enumerate_hyperfine",
    "format_state",
    "load_species",
    "parse_state",
    "resolve_species",
    "dipole_me",
    "quadrupole_geometric_factors",
    "SequenceConfig",
    "simulate_campaign",
    "simulate_survival",
    "E2PolarizationFit",
    "ExponentialDecayFit",
    "RamanPolarizationFit",
    "SurvivalCurve",
    "extract_srs_rate",
    "fit_exponential",
    "fit_polarization_e2",
    "fit_polarization_raman",
    "best_qubit_search",
    "detuning_sweep",
    "gate_error_table",
    "raman_drives",
    "single_qubit_error",
    "two_qubit_error",
    "differential_stark",
    "field_from_stark",
    "stark_shift",
    "pi_time",
    "raman_rabi",
    "LaserDrive",
    "ResonanceError",
    "scattering_report",
    "srs_rate",
    "srs_rate_ozeri",
    "total_rate",
]
