"""Unsupervised knowledge distillation via feature and space cosine similarity.

The package trains a small student network to mimic a frozen teacher's
embeddings without labels, by aligning both the per-sample feature rows
and the per-dimension columns of the batch embedding matrices, with
batches enhanced by precomputed nearest neighbours.
"""

from .config import DistillConfig, config_hash, load_config, render_config, validate_config
from .data import BatchPlan, Dataset, augment, compose_batch, epoch_batches
from .distill import RunLog, StepRecord, ablate_components, ablate_lambda, distill
from .errors import ConfigError, FormatError, NumericalError
from .evaluate import (
    AlignmentDiagnostics,
    alignment_diagnostics,
    knn_classify,
    knn_predict,
    linear_probe,
    recall_at_k,
)
from .knn import NeighborIndex, build_index, load_index, sample_neighbors, save_index
from .linalg import l2_normalize, mean_rowwise_dot, pairwise_cosine
from .losses import (
    BnParams,
    LossBreakdown,
    grad_co,
    grad_coss,
    grad_ss,
    loss_bn,
    loss_co,
    loss_coss,
    loss_ss,
)
from .models import (
    MlpModel,
    MlpSpec,
    SgdState,
    backward,
    forward,
    init_model,
    init_projection_head,
    sgd_step,
)

__version__ = "0.1.0"
