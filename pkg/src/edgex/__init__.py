"""Edge-exchangeable random graphs: intensities, samplers, analytics and graph limits."""
__version__ = "0.1.0"

from .errors import (  # noqa: E402,F401
    CapacityError,
    DegenerateMatrixError,
    DegenerateSpecError,
    DimensionError,
    EdgexError,
    MassDivergenceError,
    ParameterDomainError,
    ParityError,
    SchemaError,
    UndefinedStatisticError,
    UnsupportedFamilyError,
)
from .intensity import (  # noqa: E402,F401
    IntensityMatrix,
    Rank1Intensity,
    WeightFamilySpec,
    WeightSeq,
    band_intensity,
    build_rank1,
    chameleon_intensity,
    factorial_intensity,
    factorial_schedule,
    polya_dirichlet_weights,
    stick_break_gem,
    total_mass,
    truncation_index,
    vertex_intensity,
    weights_family,
)
from .sampler import (  # noqa: E402,F401
    HollywoodSpec,
    MultiGraph,
    MultiHyperGraph,
    SimpleGraph,
    arrival_times,
    configuration_model,
    decompose,
    hollywood_sample,
    pittel_sample,
    sample_iid_multigraph,
    sample_poisson_multigraph,
    sample_presence,
    simplify,
    verify_config_equivalence,
)
