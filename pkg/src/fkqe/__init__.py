"""Quasi-ergodic limits and large deviations for Feynman-Kac weighted finite symmetric chains."""

from .model import (
    FkWeight,
    GeneratorMatrix,
    Observable,
    SymmetricChain,
    ValidationError,
    ValidationReport,
    build_discrete_stable,
    dirichlet_form,
    golden2,
    tilted_generator,
    validate,
)
from .spectral import DoobChain, QeQuantities, SpectralData, SpectralError, doob_transform, ground_state, qe_quantities
from .semigroup import (
    MomentReport,
    conditional_mean,
    conditional_second_moment,
    endpoint_conditional,
    penalization_limit,
    survival,
    two_time_conditional,
)
from .montecarlo import McEstimate, PathRecord, doob_occupation, fk_estimate, sample_path, tail_probability
from .ldp import LdpCurve, RatePoint, ldp_curve, psi_inverse, rate, scgf, scgf_derivative

__version__ = "0.1.0"
