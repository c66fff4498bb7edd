"""fluxlab: charge-fluxon field-interaction toolkit.

Gaussian-CGS core (field kernels, overlap Lagrangians, force-free
two-body dynamics, loop phases, ideal-cage shielding) plus an SI-unit
superconducting-shield design calculator and a scenario CLI.
"""

__version__ = "0.1.0"

from .em_kernel import (
    CONSTANTS,
    ChargeState,
    FieldSample,
    FluxonState,
    PhysicalConstants,
    TubeProfile,
    Vec3,
    boost_fields,
    charge_fields,
    fluxon_fields,
    scalar_density,
)
from .errors import (
    ConvergenceError,
    FluxlabError,
    InvalidBoostError,
    SingularityError,
    ValidationError,
    WindingAmbiguityError,
)
from .interaction import (
    DistributedPi,
    FluxDistribution,
    LagrangianMethod,
    LagrangianResult,
    PointFluxonPi,
    QuadratureRule,
    QuadratureSpec,
    field_momentum_closed,
    field_momentum_distributed,
    field_momentum_estimate,
    field_momentum_numeric,
    interaction_lagrangian,
    vector_potential_symmetric,
)
from .dynamics import (
    CanonicalState,
    ForceDiagnostics,
    Integrator,
    Trajectory,
    force_diagnostics,
    hamiltonian,
    simulate,
    step,
    suggest_dt,
)
from .phase import LoopPath, ab_phase, enclosed_flux, fringe_shift, winding_number
from .shielding import (
    CageScenario,
    Classification,
    ElectronKinematics,
    ShieldDesign,
    ShieldReport,
    adiabatic_threshold,
    cage_interaction_terms,
    classify_shielding,
    electron_kinematics,
    image_current,
    induced_surface_density,
    quantized_surface_charge,
    transient_time,
)
