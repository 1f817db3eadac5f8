"""Trapped three-level ion coupled to a cavity mode by two-photon transitions."""

from .dynamics_effective import (
    BlockCoefficients,
    PgSeries,
    chi_coefficients,
    evolve_block_closed_form,
    evolve_block_general,
    make_block,
    pg_series,
    truncation_bounds,
)
from .dynamics_full import (
    ComparisonReport,
    IntegrationConfig,
    IntegrationError,
    compare_models,
    evolve_model,
    integrate_schrodinger,
    interaction_frame_hamiltonian,
)
from .hilbert import (
    CompositeState,
    FockCutoffs,
    Preparation,
    SystemParams,
    TruncationError,
    build_carrier_hamiltonian,
    build_cos_position,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_ladder,
    population,
    prepare_initial_state,
)
from .specfun import coherent_weight, coupling_f, f_series_oracle, laguerre

__version__ = "0.1.0"
