"""Coupled-channel 1D scattering: direct solver and Marchenko inversion."""

from .channels import ChannelSystem, ChannelMomenta, channel_momenta, momenta_array
from .errors import (
    CcinvError,
    ConfigError,
    NumericalError,
    IntegrationOverflowError,
    ThresholdGridError,
    BoundStateScanError,
    FitRejectedError,
    InconsistentDataError,
    ToleranceFailure,
)
from .profiles import (
    GaussianProfile,
    MultilayerProfile,
    SeaSawProfile,
    ZeroProfile,
    PotentialGrid,
    eval_profile,
    grid_from_values,
    assemble_potential,
)
from .forward import (
    ReflectionTable,
    BoundState,
    build_k_grid,
    integrate_jost_plus,
    reflection_transmission,
    reflection_table,
    find_bound_states,
    residue_matrix,
    compute_bound_states,
    wronskian,
)
from .kernel import (
    ScatteringIntegral,
    InputKernel,
    scattering_kernel,
    bound_kernel,
    total_kernel,
)
from .marchenko import (
    TransformationKernel,
    ReconstructionResult,
    solve_row,
    reconstruct,
)
from .boundfit import (
    FitRegion,
    fit_diagonal,
    fit_offdiagonal,
    fit_bound_states,
)
from .susy import (
    Superpotential,
    superpotential_from_factorization_solution,
    partner_from_superpotential,
    partner_via_omission,
    transform_reflection,
)
from .config import RunConfig, load_config, parse_profile
from . import io

__version__ = "0.1.0"
