"""Input-space standardization for multi-source CT volumes.

Spatial standardization crops every scan to its lung-centric bounding box;
temporal standardization selects a fixed number of slices at percentiles
of the lung-area density distribution; embedding analytics quantify class
separability and cross-source consistency of downstream feature sets.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CtStdError,
    DegenerateHistogram,
    DegenerateSpread,
    EmbeddingFormatError,
    EmptyBoundingBox,
    EmptyCell,
    MixedBitDepth,
    MixedDimensions,
    RaggedRow,
    UndefinedAUC,
    ValidationError,
    VolumeIOError,
)
from .volume import ScanVolume, volume_stats  # noqa: E402
from .phantom import (  # noqa: E402
    PhantomGroundTruth,
    PhantomSpec,
    default_corpus_entries,
    default_phantom_spec,
    generate_phantom,
)
from .spatial import (  # noqa: E402
    BoundingBox,
    LungMaskSet,
    adaptive_threshold,
    binarize,
    crop_volume,
    filter_slices,
    refine_masks,
    union_bounding_box,
)
from .sampling import (  # noqa: E402
    DensityProfile,
    SliceSelection,
    fit_kde,
    invert_cdf,
    lung_area_profile,
    select_kds,
    select_random,
    select_uniform,
)
from .metrics import (  # noqa: E402
    EmbeddingSet,
    MetricsReport,
    analyze,
    auc_roc,
    centroid,
    fisher_score,
    inter_source_variance,
    intra_class_distance,
    macro_f1,
    separability,
)
from .io import (  # noqa: E402
    load_embeddings,
    load_volume,
    save_embeddings,
    save_volume,
    write_manifest,
    write_report,
)
from .pipeline import RunConfig, crop_scan, make_selection, run_batch  # noqa: E402
