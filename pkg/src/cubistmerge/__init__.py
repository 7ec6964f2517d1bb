"""Structure-preserving token merging for 2D token grids.

Reduction removes a fixed number of tokens from every row and then every
column of a feature-map grid, merging adjacent similar tokens so the result
is again a dense grid that window attention and 2D position codes accept
unchanged. Includes the unstructured global baseline, three merged-token
representations, a toy transformer harness, and a benchmark CLI.
"""

from .backend import active_backend, use_backend
from .errors import (
    CubistMergeError,
    GridFileError,
    InfeasibleRateError,
    InvalidSpecError,
    SpatialIncompatibilityError,
)
from .grid import (
    REPRESENTATIONS,
    STRATEGIES,
    ReductionSpec,
    as_token_grid,
    load_grid,
    read_grid,
    resolve_rates,
    save_grid,
    window_partition,
    window_unpartition,
    write_grid,
)
from .matching import (
    Edge,
    PathLine,
    adjacent_sims,
    assign_roles,
    nominate,
    select_edges_bipartite,
    select_edges_global,
    select_edges_naive,
    similarity,
)
from .merging import (
    merge_max_per_dim,
    merge_max_vector,
    merge_weighted_average,
    token_l1_norms,
)
from .pipeline import (
    MergeMap,
    PhaseResult,
    ReducedGrid,
    compose_maps,
    cubist_reduce,
    reduce_horizontal,
    reduce_vertical,
    unmerge,
)
from .synth import gen_blobs, gen_grid, gen_stripes, gen_uniform
from .vit import (
    ForwardTrace,
    ToyViT,
    ToyViTConfig,
    forward,
    init_weights,
    rope2d_apply,
    window_attention,
)

__version__ = "0.1.0"
