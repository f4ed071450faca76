"""Exact Dicke-model quench simulations.

Spectra, sudden-quench thermodynamics (dissipated heat, diagonal entropy),
atom-photon entanglement, and Peres-lattice chaos diagnostics for N
two-level atoms coupled to a single bosonic mode.
"""

from .errors import (
    CacheCorruptionError,
    CapacityError,
    CutoffTooSmallError,
    DickeError,
    InvalidParamsError,
    NumericalFailureError,
    PairingError,
)
from .model import (
    ModelParams,
    apply_hamiltonian,
    atomic_inversion_diagonal,
    build_hamiltonian,
    build_parity_diagonal,
    energy_expectation,
    number_operator_diagonal,
)
from .spectral import (
    ConvergenceReport,
    SpectralData,
    cache_lookup,
    cache_store,
    certify_cutoff,
    default_photon_cutoff,
    diagonalize,
    diagonalize_window,
    ground_energy,
    spectrum_only,
)
from .states import (
    CoherentParams,
    StateVector,
    coherent_ground_state,
    coherent_product,
    minimal_photon_cutoff,
    superpose,
    superposition_entropy,
    variational_params,
)
from .quench import (
    QuenchResult,
    QuenchSpec,
    e95,
    energy_distribution_series,
    evolve,
    run_quench,
    shannon_entropy,
    write_sweep_csv,
)
from .entanglement import (
    EntropyTrace,
    ReducedDensityMatrix,
    diagonal_ensemble_entropy,
    diagonal_ensemble_rho,
    entanglement_entropy,
    entropy_of_state,
    entropy_timeseries,
    reduce_state,
)
from .chaos import (
    BandModel,
    ChaosProfile,
    FourierReport,
    PeresLattice,
    alternation_ratio,
    band_fourier,
    chaos_profile,
    collapse_levels,
    fit_bands,
    log_occupation_series,
    peres_lattice,
    series_autocorrelation,
)
from .meanfield import (
    MeanFieldLedger,
    heat_general,
    heat_unit_frequencies,
    mf_final_energy,
    mf_ground_energy,
    mf_heat,
)
from .pipeline import QuenchJob, heat_numeric, run_campaign, suggest_quench_cutoff

__version__ = "0.1.0"
