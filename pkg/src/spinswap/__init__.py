"""Mixed-state transfer and purification dynamics for two collectively coupled
spin ensembles.

The package simulates swapping of (possibly highly mixed) states between two
nuclear spin species that interact through an effective all-to-all coupling,
including the engineered corrections that make the swap period uniform across
magnetization and total-spin sectors, and the four decoherence channels acting
on species A.  Dynamics are propagated in the permutation-symmetric coefficient
basis; a brute-force full-Hilbert-space oracle validates the reduced equations
for tiny systems.
"""

__version__ = "0.1.0"

from .sector_basis import (
    DoubledIndex,
    QuditLabel,
    SectorError,
    SpinSector,
    SymmetricDensity,
    build_initial_state,
    build_swap_state,
    hermiticity_defect,
    hermitize,
    multiplicity,
    qudit_of_magnetization,
    trace,
)
from .coherent import (
    TridiagonalChain,
    TunedParams,
    build_chain,
    detuned_params,
    hopping_coefficient,
    mi_jx_chain,
    swap_period_pure,
    swap_period_tuned,
    tune_params,
    w_factor,
)
from .pst_conditions import (
    CommensurabilityReport,
    Spectrum,
    eigenvalues,
    mirror_symmetric,
    odd_commensurability,
    transfer_fidelity,
)
from .lindblad import (
    IntegrationError,
    Rates,
    Superoperator,
    Trajectory,
    assemble,
    evolve,
)
from .diagnostics import (
    DiagnosticsRecord,
    one_norm,
    purity_weighted,
    qudit_moments,
    threshold_estimates,
    weighted_hs_distance_sq,
)
