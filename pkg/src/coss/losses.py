"""Distillation objectives and their analytic gradients.

Two cosine terms make up the combined objective: a per-sample (row)
alignment and a per-dimension (column) alignment computed on the
transposed embedding matrices.  The combined loss is

    total = beta * (row_term + lam * column_term)

Gradients are taken with respect to the student matrix only; the teacher
branch never receives one.  A batch-normalisation variant that matches
the teacher's unnormalised embeddings via a per-dimension affine map is
provided alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import DEFAULT_EPS, as_matrix, l2_normalize, mean_rowwise_dot


@dataclass(frozen=True)
class LossBreakdown:
    """One evaluation of the combined objective, term by term."""

    l_co: float
    l_ss: float
    l_total: float
    lam: float
    beta: float


def _check_pair(A_s, A_t):
    S = as_matrix(A_s, "A_s")
    T = as_matrix(A_t, "A_t")
    if S.shape != T.shape:
        raise ValueError("shape mismatch")
    return S, T


def loss_co(A_s, A_t, eps: float = DEFAULT_EPS) -> float:
    """Negative mean cosine between matching rows of the two matrices."""
    S, T = _check_pair(A_s, A_t)
    return -mean_rowwise_dot(l2_normalize(S, "rows", eps), l2_normalize(T, "rows", eps))


def loss_ss(A_s, A_t, eps: float = DEFAULT_EPS) -> float:
    """Negative mean cosine between matching columns; equals the row loss on transposes."""
    S, T = _check_pair(A_s, A_t)
    return loss_co(S.T, T.T, eps)


def loss_coss(A_s, A_t, lam: float = 1.0, beta: float = 1.0, eps: float = DEFAULT_EPS) -> LossBreakdown:
    """Evaluate both terms and their weighted combination."""
    if lam < 0:
        raise ValueError("lambda ≥ 0")
    if beta <= 0:
        raise ValueError("beta > 0")
    l_co = loss_co(A_s, A_t, eps)
    l_ss = loss_ss(A_s, A_t, eps)
    # lam == 0 goes through the same arithmetic as a row-term-only run so
    # the two stay bit-identical under a shared seed
    if lam == 0.0:
        total = beta * l_co
    else:
        total = beta * (l_co + lam * l_ss)
    return LossBreakdown(l_co=l_co, l_ss=l_ss, l_total=total, lam=lam, beta=beta)


def _neg_cosine_row_grad(S: np.ndarray, T: np.ndarray, eps: float) -> np.ndarray:
    """Row-wise gradient of -cosine(S_i, T_i) with respect to S (unaveraged).

    Rows of S whose norm is under the guard behave as S_i . T_hat / eps,
    whose exact gradient is -T_hat / eps.
    """
    ns = np.sqrt(np.einsum("ij,ij->i", S, S))
    nt = np.sqrt(np.einsum("ij,ij->i", T, T))
    dns = np.maximum(ns, eps)[:, None]
    T_hat = T / np.maximum(nt, eps)[:, None]
    S_hat = S / dns
    cos = np.einsum("ij,ij->i", S_hat, T_hat)[:, None]
    proj = np.where((ns > eps)[:, None], cos * S_hat, 0.0)
    return -(T_hat - proj) / dns


def grad_co(A_s, A_t, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Gradient of the row term with respect to the student matrix."""
    S, T = _check_pair(A_s, A_t)
    return _neg_cosine_row_grad(S, T, eps) / S.shape[0]


def grad_ss(A_s, A_t, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Gradient of the column term with respect to the student matrix."""
    S, T = _check_pair(A_s, A_t)
    return _neg_cosine_row_grad(S.T, T.T, eps).T / S.shape[1]


def grad_coss(A_s, A_t, lam: float = 1.0, beta: float = 1.0, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Gradient of the combined objective with respect to the student matrix."""
    if lam < 0:
        raise ValueError("lambda ≥ 0")
    if beta <= 0:
        raise ValueError("beta > 0")
    G = grad_co(A_s, A_t, eps)
    if lam != 0.0:
        G = G + lam * grad_ss(A_s, A_t, eps)
    return beta * G


@dataclass
class BnParams:
    """Trainable per-dimension affine map applied after batch standardisation."""

    gamma: np.ndarray       # (d,) scale
    beta_shift: np.ndarray  # (d,) shift
    eps: float = 1e-5

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        self.beta_shift = np.asarray(self.beta_shift, dtype=np.float64)
        if self.gamma.ndim != 1 or self.gamma.shape != self.beta_shift.shape:
            raise ValueError("gamma and beta_shift must be 1-D with equal length")
        if not (np.all(np.isfinite(self.gamma)) and np.all(np.isfinite(self.beta_shift))):
            raise ValueError("non-finite input")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


def loss_bn(X_s, X_t, p: BnParams):
    """Match affinely rescaled, batch-standardised student embeddings to raw teacher ones.

    Standardisation uses the population sigma per dimension, guarded from
    below by ``p.eps``.  Returns the mean per-sample squared L2 distance
    plus gradients for the student input and both affine parameters.
    """
    S, T = _check_pair(X_s, X_t)
    b, d = S.shape
    if b < 2:
        raise ValueError("batch too small for BN")
    if p.gamma.shape[0] != d:
        raise ValueError("BN parameter length does not match feature count")
    mu = S.mean(axis=0)
    std = np.sqrt(S.var(axis=0))
    sigma = np.maximum(std, p.eps)
    X_hat = (S - mu) / sigma
    Z = p.gamma * X_hat + p.beta_shift
    R = Z - T
    loss = float(np.mean(np.einsum("ij,ij->i", R, R)))

    dZ = (2.0 / b) * R
    dgamma = np.einsum("ij,ij->j", dZ, X_hat)
    dbeta_shift = dZ.sum(axis=0)
    dX_hat = dZ * p.gamma
    mean_g = dX_hat.mean(axis=0)
    mean_gx = np.einsum("ij,ij->j", dX_hat, X_hat) / b
    # dims where the guard kicked in have constant sigma: no variance path
    var_term = np.where(std > p.eps, X_hat * mean_gx, 0.0)
    dX = (dX_hat - mean_g - var_term) / sigma
    return loss, dX, dgamma, dbeta_shift
