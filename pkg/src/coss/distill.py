"""End-to-end distillation loop plus the ablation grids.

One step: compose the neighbour-enhanced batch, augment it, run the
frozen teacher and the trainable student on the same inputs, evaluate
the configured loss, backpropagate through the student (and projection
head, if any), and take one SGD step.  All randomness flows from a
single seeded generator, so a run is a pure function of
(config, dataset, teacher, index).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import DistillConfig, config_hash, validate_config
from .data import Dataset, augment, compose_batch, epoch_batches
from .errors import ConfigError, NumericalError
from .knn import NeighborIndex
from .losses import (
    BnParams,
    grad_co,
    grad_ss,
    loss_bn,
    loss_co,
    loss_ss,
)
from .models import MlpModel, SgdState, backward, forward, init_model, init_projection_head, sgd_step


@dataclass(frozen=True)
class StepRecord:
    epoch: int
    step: int          # global step, 0-based
    l_co: float
    l_ss: float
    l_total: float


@dataclass
class RunLog:
    config: DistillConfig
    steps: list[StepRecord] = field(default_factory=list)
    epoch_metrics: list[dict] = field(default_factory=list)
    steps_per_epoch: int = 0
    wall_time: float = 0.0


class _ModelTeacher:
    """Frozen network teacher: embeds whatever batch it is handed."""

    def __init__(self, model: MlpModel):
        self.model = model
        self.output_dim = model.output_dim

    def embed(self, X_batch, plan):
        out, _ = forward(self.model, X_batch)
        return out


class _DumpTeacher:
    """Precomputed embedding matrix; rows are looked up by sample index."""

    def __init__(self, embeddings: np.ndarray):
        self.embeddings = np.asarray(embeddings, dtype=np.float64)
        self.output_dim = self.embeddings.shape[1]

    def embed(self, X_batch, plan):
        return self.embeddings[plan.enhanced_indices]


def _resolve_teacher(teacher, n_samples: int, cfg: DistillConfig):
    if isinstance(teacher, MlpModel):
        return _ModelTeacher(teacher)
    emb = np.asarray(teacher, dtype=np.float64)
    if emb.ndim != 2:
        raise ValueError("teacher must be an MlpModel or a 2-D embedding matrix")
    if emb.shape[0] != n_samples:
        raise ValueError("index/dataset size mismatch")
    if cfg.aug_sigma != 0.0:
        raise ConfigError("aug_sigma = 0 for embedding-dump teacher")
    return _DumpTeacher(emb)


def _variant_weights(cfg: DistillConfig) -> tuple[bool, float]:
    """(row term active, effective space weight) for the gradient path."""
    if cfg.loss_variant == "co_only":
        return True, 0.0
    if cfg.loss_variant == "ss_only":
        return False, 1.0
    return True, cfg.lam


def distill(
    config: DistillConfig,
    dataset: Dataset,
    teacher,
    index: NeighborIndex,
    eval_hook=None,
) -> tuple[MlpModel, RunLog]:
    """Train a student against a frozen teacher; returns the head-stripped student.

    ``teacher`` is a frozen MlpModel or a precomputed (n, d_t) embedding
    matrix (the latter only with aug_sigma = 0).  ``eval_hook``, when
    given, is called as ``eval_hook(student, epoch)`` after every epoch
    and its result is appended to the log.
    """
    validate_config(config)
    X = dataset.inputs  # training never touches dataset.labels
    n, input_dim = X.shape
    if index.n != n:
        raise ValueError("index/dataset size mismatch")
    if config.k > index.pool:
        raise ConfigError("k ≤ pool")
    teacher_side = _resolve_teacher(teacher, n, config)
    d_t = teacher_side.output_dim

    rng = np.random.default_rng(config.seed)
    student = init_model(
        config.student_spec(input_dim), seed=int(rng.integers(2**31))
    )
    head = None
    if student.output_dim != d_t:
        head = init_projection_head(student.output_dim, d_t, seed=int(rng.integers(2**31)))

    bn = None
    if config.loss_variant == "bn":
        bn = BnParams(np.ones(d_t), np.zeros(d_t), eps=config.bn_eps)

    params = student.parameters()
    if head is not None:
        params = params + head.parameters()
    if bn is not None:
        params = params + [bn.gamma, bn.beta_shift]
    opt = SgdState(lr=config.lr, momentum=config.momentum, weight_decay=config.weight_decay)

    use_co, lam_eff = _variant_weights(config)
    log = RunLog(config=config, steps_per_epoch=-(-n // config.batch_size))
    t0 = time.perf_counter()
    global_step = 0

    for epoch in range(config.epochs):
        for anchors in epoch_batches(n, config.batch_size, rng):
            plan = compose_batch(anchors, index, config.k, rng)
            X_aug = augment(X[plan.enhanced_indices], config.aug_sigma, rng)
            A_t = teacher_side.embed(X_aug, plan)

            emb_s, cache_s = forward(student, X_aug)
            if head is not None:
                A_s, cache_h = forward(head, emb_s)
            else:
                A_s = emb_s
            if not (np.isfinite(A_s).all() and np.isfinite(A_t).all()):
                raise NumericalError(f"non-finite embeddings at step {global_step}")

            l_co = loss_co(A_s, A_t)
            l_ss = loss_ss(A_s, A_t)
            bn_grads = []
            if config.loss_variant == "bn":
                l_total, G, d_gamma, d_beta = loss_bn(A_s, A_t, bn)
                bn_grads = [d_gamma, d_beta]
            else:
                if use_co:
                    G = grad_co(A_s, A_t)
                    if lam_eff != 0.0:
                        G = G + lam_eff * grad_ss(A_s, A_t)
                        l_total = config.beta * (l_co + lam_eff * l_ss)
                    else:
                        l_total = config.beta * l_co
                else:
                    G = grad_ss(A_s, A_t)
                    l_total = config.beta * l_ss
                G = config.beta * G

            if not np.isfinite(l_total):
                raise NumericalError(f"non-finite loss at step {global_step}")

            if head is not None:
                head_grads, G = backward(head, cache_h, G)
            else:
                head_grads = []
            student_grads, _ = backward(student, cache_s, G)
            sgd_step(params, student_grads + head_grads + bn_grads, opt)

            log.steps.append(
                StepRecord(epoch=epoch, step=global_step, l_co=l_co, l_ss=l_ss, l_total=l_total)
            )
            global_step += 1
        if eval_hook is not None:
            log.epoch_metrics.append(eval_hook(student.copy(), epoch))

    log.wall_time = time.perf_counter() - t0
    return student, log


def _final_losses(log: RunLog) -> dict:
    last = log.steps[-1]
    return {"l_co": last.l_co, "l_ss": last.l_ss, "l_total": last.l_total}


def ablate_components(
    base_config: DistillConfig,
    dataset: Dataset,
    teacher,
    index: NeighborIndex,
    eval_fn,
) -> list[dict]:
    """Run co-only, ss-only and combined variants with everything else fixed.

    ``eval_fn(student)`` scores each trained student (typically k-NN
    accuracy on held-out labels).  Returns one row per variant.
    """
    rows = []
    for variant in ("co_only", "ss_only", "coss"):
        cfg = base_config.replace(loss_variant=variant)
        student, log = distill(cfg, dataset, teacher, index)
        rows.append(
            {
                "variant": variant,
                "accuracy": float(eval_fn(student)),
                "config_hash": config_hash(cfg),
                **{f"final_{k}": v for k, v in _final_losses(log).items()},
            }
        )
    return rows


def ablate_lambda(
    base_config: DistillConfig,
    dataset: Dataset,
    teacher,
    index: NeighborIndex,
    eval_fn,
    lambdas: tuple[float, ...] = (0.0, 0.25, 0.5, 1.0),
) -> list[dict]:
    """One combined-objective run per space-similarity weight."""
    rows = []
    for lam in lambdas:
        cfg = base_config.replace(loss_variant="coss", lam=float(lam))
        student, log = distill(cfg, dataset, teacher, index)
        rows.append(
            {
                "lambda": float(lam),
                "accuracy": float(eval_fn(student)),
                "config_hash": config_hash(cfg),
                **{f"final_{k}": v for k, v in _final_losses(log).items()},
            }
        )
    return rows
