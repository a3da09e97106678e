"""hardlab: hardness estimation and data curation planning toolkit."""

from .dynamics import (
    CHANNEL_ORDER,
    DynamicsLog,
    EnsembleHardness,
    Estimator,
    HardnessVector,
    aggregate_ensemble,
    compute_aum,
    compute_el2n,
    compute_forgetting,
    hardness_order,
    parse_dynamics,
    write_dynamics,
)
from .geometry import (
    CLASS_METRICS,
    DEFAULT_K,
    INSTANCE_METRICS,
    FamilyReport,
    FeatureSet,
    MetricTable,
    NeighborTable,
    build_knn,
    centroid_metrics,
    classify_distribution,
    compute_metric_tables,
    dispersion_metrics,
    knn_metrics,
    make_feature_set,
    read_features,
    write_features,
)
from .resampling import (
    ClassHardness,
    CountVector,
    RatioVector,
    ResamplingPlan,
    base_ratios,
    build_resampling_plan,
    class_hardness,
    materialize_resampling_plan,
    oversample_plan,
    scale_ratios,
    selection_weight,
    target_counts,
    undersample_plan,
)
from .pruning import PruningPlan, clp_plan, dlp_plan, overlap, per_class_removals
from .stability import (
    StabilityCurve,
    absolute_difference,
    ensemble_sweep,
    pruning_stability,
    recommended_ensemble_size,
    spearman_class_correlation,
)
from .denoise import (
    CumulativeCurve,
    DenoisePlan,
    cumulative_hardness,
    denoise_plan,
    elbow_threshold,
    hardness_mass,
)
from .synthlab import (
    BlobSpec,
    FOUR_BLOB_HARD_CLASS,
    TWO_BLOB_HARD_CLASS,
    PerClassMetrics,
    ReferenceRun,
    TrainConfig,
    class_metrics,
    four_blob_spec,
    generate_blobs,
    train_ensemble,
    train_reference,
    two_blob_spec,
)
from . import errors

__version__ = "0.1.0"
