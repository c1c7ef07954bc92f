"""microspot: micro-expression interval spotting with HOOF features and an
LSTM classifier, plus a human-in-the-loop annotation review service."""

from .config import PipelineConfig, ServiceParams, SpotParams
from .dataio import (
    Dataset,
    DatasetManifest,
    FrameSequence,
    GroundTruthEntry,
    LandmarkSet,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    write_dataset,
)
from .errors import (
    ConsistencyError,
    ContractViolationError,
    DatasetError,
    DegenerateGeometryError,
    DegenerateRoiError,
    MicrospotError,
    TooShortVideoError,
    ValidationError,
)
from .estimators import HoofExtractor
from .evaluation import (
    EvalReport,
    LosoFold,
    loso_folds,
    match_detections,
    metrics,
    roc_auc,
    roc_curve,
    run_loso_evaluation,
)
from .features import (
    FeatureCache,
    HoofParams,
    HoofSequence,
    build_sequence,
    extract_video_features,
    hoof,
    pool_roi,
    read_feature_cache,
    write_feature_cache,
)
from .network import (
    Adam,
    AdamConfig,
    LstmModel,
    LstmSequenceClassifier,
    TrainConfig,
    load_model,
    save_model,
    train,
)
from .optflow import FlowField, FlowParams, compute_flow, flow_pairs_for_window
from .preprocess import (
    AlignmentTransform,
    RoiParams,
    RoiSet,
    WindowInterval,
    WindowParams,
    apply_alignment,
    compute_alignment,
    extract_rois,
    eye_centers,
    generate_windows,
)
from .spotting import Detection, LabeledWindow, label_windows, nms, overlap_ratio, spot

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AdamConfig",
    "AlignmentTransform",
    "ConsistencyError",
    "ContractViolationError",
    "Dataset",
    "DatasetError",
    "DatasetManifest",
    "DegenerateGeometryError",
    "DegenerateRoiError",
    "Detection",
    "EvalReport",
    "FeatureCache",
    "FlowField",
    "FlowParams",
    "FrameSequence",
    "GroundTruthEntry",
    "HoofExtractor",
    "HoofParams",
    "HoofSequence",
    "LabeledWindow",
    "LandmarkSet",
    "LosoFold",
    "LstmModel",
    "LstmSequenceClassifier",
    "MicrospotError",
    "PipelineConfig",
    "RoiParams",
    "RoiSet",
    "ServiceParams",
    "SpotParams",
    "SyntheticSpec",
    "TooShortVideoError",
    "TrainConfig",
    "ValidationError",
    "WindowInterval",
    "WindowParams",
    "apply_alignment",
    "build_sequence",
    "compute_alignment",
    "compute_flow",
    "extract_rois",
    "extract_video_features",
    "eye_centers",
    "flow_pairs_for_window",
    "generate_synthetic",
    "generate_windows",
    "hoof",
    "label_windows",
    "load_dataset",
    "load_model",
    "loso_folds",
    "match_detections",
    "metrics",
    "nms",
    "overlap_ratio",
    "pool_roi",
    "read_feature_cache",
    "roc_auc",
    "roc_curve",
    "run_loso_evaluation",
    "save_model",
    "spot",
    "train",
    "write_dataset",
    "write_feature_cache",
]
