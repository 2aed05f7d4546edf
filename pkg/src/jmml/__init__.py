"""Two-step joint multi-modal learning for emotion recognition.

Step 1 (intra-modal): per-class joint emotion blocks with a tied
similarity latent, projected back onto feature space by multiblock PLS.
Step 2 (inter-modal): a cross-modal autoencoder whose encoders are
coupled by a canonical-correlation objective and whose decoders emit
both self- and cross-reconstructions, enabling single-modality inference.
"""

from .biomarkers import (
    BandSet,
    EegTrial,
    FeatureSelection,
    FeatureVector,
    extract_trial,
)
from .config import ExperimentConfig, load_config, save_config
from .edcc import build_edcc, classifier_features, infer_single, train_edcc
from .errors import JmmlError
from .experiment import ReportRow, render_table, rows_to_json, run_experiment
from .forest import EvalReport, evaluate, fit_rf, grid_search
from .forest import predict as rf_predict
from .jecl import build_jecl, embed, embed_blocks, train_jecl
from .mbpls import fit as fit_mbpls
from .mbpls import predict as mbpls_predict
from .mbpls import tune_lv
from .pipeline import (
    Dataset,
    SplitSpec,
    SynthSpec,
    binarize_rating,
    mco_oversample,
    relabel_categorical,
    stratified_split,
    synth_bimodal,
)

__version__ = "0.1.0"

__all__ = [
    "BandSet",
    "Dataset",
    "EegTrial",
    "EvalReport",
    "ExperimentConfig",
    "FeatureSelection",
    "FeatureVector",
    "JmmlError",
    "ReportRow",
    "SplitSpec",
    "SynthSpec",
    "binarize_rating",
    "build_edcc",
    "build_jecl",
    "classifier_features",
    "embed",
    "embed_blocks",
    "evaluate",
    "extract_trial",
    "fit_mbpls",
    "fit_rf",
    "grid_search",
    "infer_single",
    "load_config",
    "mbpls_predict",
    "mco_oversample",
    "relabel_categorical",
    "render_table",
    "rf_predict",
    "rows_to_json",
    "run_experiment",
    "save_config",
    "stratified_split",
    "synth_bimodal",
    "train_edcc",
    "train_jecl",
    "tune_lv",
]
