"""Discrete two-component transport model on a 1+1 lattice.

Deterministic field evolution, exact path enumeration, Monte Carlo samplers
(independent walkers and entwined closed pairs), convergence/consistency
analysis, and the continuum-limit checks, plus a command line front end.
"""

from .errors import InternalCheckError
from .evolver import EvolverState, evolve, slice_sums, step, step_dense
from .lattice import (
    FieldSet,
    SampleFieldSet,
    SimConfig,
    initial_condition,
    normalize,
    on_parity,
    slice_norm,
)
from .analysis import (
    ErrorSeries,
    SlopeFit,
    compare_to_exact,
    contour_grid,
    convergence_study,
    fit_slope,
    residual,
)
from .dirac import (
    ALPHA_Z,
    B_REAL,
    dirac_matrix_checks,
    dispersion_check,
    rescale,
    scheme_convergence,
    u_norm_drift,
)
from .oracle import enumerate_exact
from .sampler import (
    DecisionEngine,
    EntwinedPair,
    Tape,
    balanced_decide,
    build_entwined_pair,
    extract_envelopes,
    generate_tape,
    sample_ensemble,
    walk_envelope,
)

__version__ = "0.1.0"

__all__ = [
    "InternalCheckError",
    "EvolverState",
    "evolve",
    "slice_sums",
    "step",
    "step_dense",
    "FieldSet",
    "SampleFieldSet",
    "SimConfig",
    "initial_condition",
    "normalize",
    "on_parity",
    "slice_norm",
    "enumerate_exact",
    "ErrorSeries",
    "SlopeFit",
    "compare_to_exact",
    "contour_grid",
    "convergence_study",
    "fit_slope",
    "residual",
    "ALPHA_Z",
    "B_REAL",
    "dirac_matrix_checks",
    "dispersion_check",
    "rescale",
    "scheme_convergence",
    "u_norm_drift",
    "DecisionEngine",
    "EntwinedPair",
    "Tape",
    "balanced_decide",
    "build_entwined_pair",
    "extract_envelopes",
    "generate_tape",
    "sample_ensemble",
    "walk_envelope",
    "__version__",
]
