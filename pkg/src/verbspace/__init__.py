"""Multi-verb action labels: aggregation, learning, and retrieval."""

from .vocab import (
    MANNER,
    RESULT,
    VerbVocabulary,
    VNClassList,
    default_vocabulary,
    load_vocabulary,
    save_vocabulary,
    verb_type_mask,
)
from .annotations import (
    AnnotationSet,
    HardLabel,
    LabelBundle,
    SoftLabel,
    aggregate_scores,
    binarize,
    build_bundle,
    majority_vote,
    relevant_set,
)
from .model import (
    FeatureVector,
    ModelParams,
    Prediction,
    TrainConfig,
    forward,
    gradient,
    loss_ml,
    loss_sl,
    predict,
    train,
)
from .metrics import (
    AccuracyReport,
    SweepCurve,
    alpha_sweep,
    average_precision,
    mean_ap,
    multilabel_accuracy,
    rmse_by_verb_type,
)
from .retrieval import (
    RetrievalResult,
    VerbSpaceIndex,
    build_index,
    enumerate_cooccurring_queries,
    text_to_video,
    text_to_video_sweep,
    video_to_text,
    video_to_video,
)
from .data_io import (
    DatasetManifest,
    FoldSplit,
    SyntheticCorpus,
    ingest,
    stratified_kfold,
    synthesize,
)

__version__ = "0.1.0"
