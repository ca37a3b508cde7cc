"""capmin: logarithmic potential theory and rational approximation toolkit."""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    Compactum,
    MapSpec,
    PointCloud,
    apply_map,
    build_named,
    chordal,
    circle,
    discretize,
    hausdorff_distance,
    symmetric_clamp,
)
from .measure import (  # noqa: F401
    DiscreteMeasure,
    InterpolationTable,
    quantile_nodes,
    weak_star_distance,
    zero_counting,
)
from .potential import (  # noqa: F401
    ExternalField,
    VariationSpec,
    green_potential,
    log_potential,
    robin_constant,
    s_property_diagnostic,
    spherical_potential,
    variation_functional,
    weighted_energy,
)
from .capacity import (  # noqa: F401
    CapacityEstimate,
    balayage,
    energy_capacity,
    equilibrium_measure,
    fekete_capacity,
)
