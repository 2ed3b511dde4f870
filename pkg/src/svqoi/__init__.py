"""Quality-of-information scoring, ranking, and filtering for street-view
image collections: spatial coverage distances over a street grid, revisit
statistics, detection-confidence content scores, and a weighted unified
score per geographic region."""

from .content import ContentScore, brightness_filter, content_raw, image_content_score
from .geo import (
    CoverageHole,
    Region,
    RegionSet,
    StreetGrid,
    StreetNetwork,
    assign_region,
    build_grid,
    coverage_fraction,
    find_holes,
    load_network,
    load_regions,
    project,
    region_grid,
    snap,
)
from .ingest import (
    DetectionSet,
    ImageRecord,
    Index,
    IngestConfig,
    build_index,
    canonical_json_bytes,
    open_index,
    parse_detections,
    parse_records,
    persist_index,
)
from .qoi import (
    FilterSpec,
    QualityScore,
    Weights,
    filter_index,
    normalize_max,
    normalize_spatial,
    period_score,
    rank,
    score_pipeline,
    scores_payload,
    unified,
)
from .spatial import (
    Distribution,
    SpatialResult,
    emd_exact,
    jsd,
    observed_histogram,
    reference_uniform,
    sliced_wasserstein,
    spatial_distance,
)
from .temporal import RevisitStats, dominant_interval, revisit_stats, temporal_raw

__version__ = "0.1.0"
