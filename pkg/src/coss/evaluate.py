"""Embedding-quality evaluation: k-NN vote, linear probe, retrieval, alignment.

Everything here runs on frozen embeddings.  Cosine is the distance
throughout, matching the geometry the distillation losses optimise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_EPS, as_matrix, l2_normalize


def knn_predict(train_emb, train_labels, test_emb, k_eval: int = 1) -> np.ndarray:
    """Majority vote among the k nearest train embeddings by cosine.

    Neighbour ties break toward the lower train index, vote ties toward
    the lower class id.
    """
    if k_eval < 1:
        raise ValueError("k_eval ≥ 1")
    if np.asarray(train_emb, dtype=np.float64).shape[0] == 0:
        raise ValueError("empty train set")
    E = l2_normalize(train_emb, axis="rows")
    labels = np.asarray(train_labels, dtype=np.int64)
    if labels.shape != (E.shape[0],):
        raise ValueError("labels length must equal train size")
    Q = l2_normalize(test_emb, axis="rows")
    if Q.shape[1] != E.shape[1]:
        raise ValueError("shape mismatch")
    k_eval = min(k_eval, E.shape[0])
    sims = Q @ E.T
    nearest = np.argsort(-sims, axis=1, kind="stable")[:, :k_eval]
    n_classes = int(labels.max()) + 1
    pred = np.empty(Q.shape[0], dtype=np.int64)
    for i in range(Q.shape[0]):
        votes = np.bincount(labels[nearest[i]], minlength=n_classes)
        pred[i] = int(np.argmax(votes))  # argmax returns the lowest class id on ties
    return pred


def knn_classify(train_emb, train_labels, test_emb, test_labels, k_eval: int = 1) -> float:
    """Accuracy of the k-NN vote against the held-out labels."""
    pred = knn_predict(train_emb, train_labels, test_emb, k_eval)
    truth = np.asarray(test_labels, dtype=np.int64)
    if truth.shape != pred.shape:
        raise ValueError("labels length must equal test size")
    return float(np.mean(pred == truth))


def linear_probe(
    train_emb,
    train_labels,
    test_emb,
    test_labels,
    epochs: int = 200,
    lr: float = 0.5,
    seed: int = 0,
) -> float:
    """Softmax regression on frozen embeddings, trained by full-batch GD.

    Deterministic for a fixed seed; returns test accuracy.
    """
    X = as_matrix(train_emb, "train_emb")
    y = np.asarray(train_labels, dtype=np.int64)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("single-class train set")
    class_of = {c: i for i, c in enumerate(classes)}
    t = np.array([class_of[c] for c in y])
    n, d = X.shape
    C = classes.size

    ones = np.ones((n, 1))
    Xb = np.hstack([X, ones])
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(d + 1, C))
    onehot = np.zeros((n, C))
    onehot[np.arange(n), t] = 1.0
    for _ in range(epochs):
        logits = Xb @ W
        logits -= logits.max(axis=1, keepdims=True)
        P = np.exp(logits)
        P /= P.sum(axis=1, keepdims=True)
        W -= lr * (Xb.T @ (P - onehot)) / n

    Xt = as_matrix(test_emb, "test_emb")
    logits = np.hstack([Xt, np.ones((Xt.shape[0], 1))]) @ W
    pred = classes[np.argmax(logits, axis=1)]
    truth = np.asarray(test_labels, dtype=np.int64)
    return float(np.mean(pred == truth))


def recall_at_k(
    query_emb,
    gallery_emb,
    query_labels,
    gallery_labels,
    K: int = 1,
    exclude_self: bool = False,
) -> float:
    """Fraction of queries whose top-K cosine hits contain a same-label item.

    With ``exclude_self`` the query and gallery must be the same set; hit i
    is barred from retrieving gallery item i.
    """
    if K < 1:
        raise ValueError("K ≥ 1")
    if np.asarray(gallery_emb, dtype=np.float64).shape[0] == 0:
        raise ValueError("empty gallery")
    G = l2_normalize(gallery_emb, axis="rows")
    gl = np.asarray(gallery_labels, dtype=np.int64)
    Q = l2_normalize(query_emb, axis="rows")
    ql = np.asarray(query_labels, dtype=np.int64)
    sims = Q @ G.T
    if exclude_self:
        if Q.shape[0] != G.shape[0]:
            raise ValueError("exclude_self needs query and gallery of equal size")
        np.fill_diagonal(sims, -np.inf)
    K = min(K, G.shape[0] - (1 if exclude_self else 0))
    if K < 1:
        raise ValueError("K ≥ 1")
    order = np.argsort(-sims, axis=1, kind="stable")[:, :K]
    hits = (gl[order] == ql[:, None]).any(axis=1)
    return float(np.mean(hits))


@dataclass
class AlignmentDiagnostics:
    """How well the student's feature space mirrors the teacher's, per dimension."""

    per_dim_cosine: np.ndarray = field(repr=False)  # (d,) in [-1, 1]
    per_dim_scale: np.ndarray = field(repr=False)   # (d,) student/teacher column-norm ratio
    mean_row_cosine: float = 0.0


def alignment_diagnostics(A_s, A_t, eps: float = DEFAULT_EPS) -> AlignmentDiagnostics:
    """Column cosines, column-norm ratios, and the mean per-sample cosine."""
    S = as_matrix(A_s, "A_s")
    T = as_matrix(A_t, "A_t")
    if S.shape != T.shape:
        raise ValueError("shape mismatch")
    sn = np.sqrt(np.einsum("ij,ij->j", S, S))
    tn = np.sqrt(np.einsum("ij,ij->j", T, T))
    dots = np.einsum("ij,ij->j", S, T)
    nonzero = (sn > eps) & (tn > eps)
    cosines = np.where(nonzero, dots / np.maximum(sn * tn, eps * eps), 0.0)
    np.clip(cosines, -1.0, 1.0, out=cosines)
    scales = np.where(tn > eps, sn / np.maximum(tn, eps), 0.0)
    Sh = l2_normalize(S, axis="rows", eps=eps)
    Th = l2_normalize(T, axis="rows", eps=eps)
    mean_row = float(np.mean(np.einsum("ij,ij->i", Sh, Th)))
    return AlignmentDiagnostics(
        per_dim_cosine=cosines, per_dim_scale=scales, mean_row_cosine=mean_row
    )
