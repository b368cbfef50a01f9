from .sets import (
    FEATURE_SETS,
    ExtractorConfig,
    add_height_noise,
    all_pairs,
    expected_arity,
    extract,
    fs1_extract,
    fs2_extract,
    fs3_extract,
    fs3_raw,
    fs4_extract,
    make_interactions,
    prune_columns,
    read_feature_matrix,
    write_feature_matrix,
)
from .stats import KINDS, WindowSpec, mean_energy, row_correlation, window_stat, window_stats
