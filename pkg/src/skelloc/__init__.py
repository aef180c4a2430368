"""Skeleton-aware clustering, adaptive radio maps, and WkNN positioning on a
synthetic time-varying RSS environment."""

from .clustering import (
    ClusterModel,
    SimilarityMatrix,
    affinity_propagation,
    build_similarity,
    net_similarity,
    rss_difference,
    time_variation_similarity,
)
from .errors import DivergenceError, PipelineError
from .floorplan import (
    DegenerateMapError,
    DisconnectedRoomsError,
    FloorMap,
    Skeleton,
    SspMatrix,
    build_skeleton,
    shortest_path_matrix,
    ssp_distance,
)
from .linear import LinearModelSet, fit, reconstruct
from .neural import (
    DeltaSample,
    NetworkParams,
    finetune,
    forward,
    huber_loss,
    preprocess,
    pretrain,
    reconstruct_nn,
)
from .pipeline import (
    EvaluationReport,
    MethodResult,
    ablate_similarity,
    emit_plot_data,
    run_pipeline,
    sweep,
)
from .positioning import (
    PositionEstimate,
    csle_estimate,
    estimate,
    scaled_distance,
    weights,
    wknn_baseline,
)
from .radiosim import (
    AccessPoint,
    CrowdZone,
    Environment,
    RssDatabase,
    build_database,
    mp_stream,
    synth_rss,
)
from .scenario import Scenario, load_scenario, save_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
