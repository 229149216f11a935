"""contmatch: subspace matching over continuously parameterized collections,
directly and from Gaussian random sketches, with the geometric and
verification tooling to check when the sketched match is trustworthy."""

__version__ = "0.1.0"

from .errors import (
    BoundaryLeakageError,
    ConfigError,
    ContmatchError,
    LatticeDensityError,
    NumericalError,
    RankDeficiencyError,
)
from .families import (
    ParamBox,
    SubspaceFamily,
    TabulatedFamily,
    default_grid,
    gabor_family,
    gaussian_pulse_family,
    load_tabulated,
    lot_family,
    real_embedding,
    square_pulse_family,
)
from .geometry import (
    AnalyticRegularity,
    HolderFit,
    RegularityReport,
    analytic_regularity,
    covering_count,
    covering_profile,
    delta_constant,
    family_regularity,
    fit_regularity,
    holder_fit,
    measure_regularity,
)
from .lattice import Lattice
from .linalg import (
    OrthoBasis,
    orthonormal_columns,
    orthonormalize,
    project_energy,
    projector_distance,
    residual_projection,
)
from .matching import (
    MatchResult,
    SearchPlan,
    Surface,
    approximation_gap,
    energy_surface,
    match_compressed,
    match_direct,
    sweep,
)
from .signal import (
    SampleGrid,
    SampledSignal,
    energy,
    gaussian_pulse,
    raised_cosine_pulse,
    shift,
    sobolev_norm,
    square_pulse,
    total_variation,
)
from .sketch import GaussianSketch, make_sketch, orthogonal_sketch
from .verify import (
    ConditionEstimate,
    GapBoundReport,
    ScalingRow,
    check_gap_bound,
    check_gap_bound_many,
    derive_seed,
    gap_bound,
    lattice_distortion,
    pairwise_distortion,
    residual_crosstalk,
    scaling_experiment,
    sketch_gram_distortion,
)
