"""Scoring models over sparse TF-IDF features.

Four trainers: exact ridge regression (preconditioned conjugate gradient
on the normal equations, bias unpenalized), epsilon-insensitive linear
SVR and a one-hidden-layer rectifier MLP (both seeded stochastic descent),
and a linear pairwise ranker trained on hinge-with-margin ordering loss.
Every trainer is deterministic given (data, params, seed).
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import sparse

from .cleaning import CleanMode, cleaner
from .errors import DimensionMismatchError
from .vectorizer import SparseVector, Vocabulary, to_csr, transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainParams:
    ridge_lambda: float = 1.0
    svr_epsilon: float = 0.1
    svr_lambda: float = 1e-4
    mlp_hidden: int = 128
    learning_rate: float = 0.1
    epochs: int = 10
    batch_size: int = 128
    margin: float = 0.5
    seed: int = 42

    def __post_init__(self):
        if self.ridge_lambda <= 0:
            raise ValueError("ridge_lambda must be positive")
        if self.svr_epsilon < 0:
            raise ValueError("svr_epsilon must be non-negative")
        if self.svr_lambda <= 0:
            raise ValueError("svr_lambda must be positive")
        if self.mlp_hidden < 1:
            raise ValueError("mlp_hidden must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.margin <= 0:
            raise ValueError("margin must be positive")

    def with_seed(self, seed: int) -> "TrainParams":
        return replace(self, seed=seed)


@dataclass(eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LinearModel)
            and np.array_equal(self.weights, other.weights)
            and self.bias == other.bias
        )


@dataclass(eq=False)
class MlpModel:
    hidden_weights: np.ndarray  # (hidden, n_features)
    hidden_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    @property
    def n_features(self) -> int:
        return self.hidden_weights.shape[1]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MlpModel)
            and np.array_equal(self.hidden_weights, other.hidden_weights)
            and np.array_equal(self.hidden_bias, other.hidden_bias)
            and np.array_equal(self.output_weights, other.output_weights)
            and self.output_bias == other.output_bias
        )


@dataclass
class TrainReport:
    epoch_losses: list[float] = field(default_factory=list)
    final_loss: float = 0.0
    wall_seconds: float = 0.0
    converged: bool = True
    iterations: int = 0


def _as_csr(X, n_features: int | None = None) -> sparse.csr_matrix:
    if sparse.issparse(X):
        return X.tocsr().astype(np.float64)
    if isinstance(X, np.ndarray):
        return sparse.csr_matrix(np.asarray(X, dtype=np.float64))
    if isinstance(X, (list, tuple)) and all(isinstance(v, SparseVector) for v in X):
        if n_features is None:
            n_features = 1 + max((int(v.indices[-1]) for v in X if v.nnz), default=-1)
        return to_csr(X, n_features)
    return sparse.csr_matrix(np.asarray(X, dtype=np.float64))


def _check_training_inputs(A: sparse.csr_matrix, y: np.ndarray):
    if A.shape[0] != len(y):
        raise DimensionMismatchError(
            f"{A.shape[0]} feature rows vs {len(y)} targets"
        )
    if len(y) == 0:
        raise ValueError("need at least one training sample")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")


def train_ridge(X, y, lam: float = 1.0, *, fit_bias: bool = True, tol: float = 1e-6,
                max_iter: int | None = None,
                n_features: int | None = None) -> tuple[LinearModel, TrainReport]:
    """Minimize ||Xw + b - y||^2 + lam*||w||^2 (bias unpenalized).

    Solved by Jacobi-preconditioned conjugate gradient on the normal
    equations; stops when the gradient residual satisfies
    ``max|X'(Xw+b-y) + lam*w| <= tol * max(1, max|X'y|)``.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    start = time.perf_counter()
    A = _as_csr(X, n_features)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(A, y)
    n, d = A.shape
    m = d + 1 if fit_bias else d

    At = A.T.tocsr()

    def hess_product(v: np.ndarray) -> np.ndarray:
        r = A @ v[:d]
        if fit_bias:
            r += v[d]
        out = np.empty(m)
        out[:d] = At @ r + lam * v[:d]
        if fit_bias:
            out[d] = r.sum()
        return out

    rhs = np.empty(m)
    rhs[:d] = At @ y
    if fit_bias:
        rhs[d] = y.sum()
    threshold = tol * max(1.0, float(np.abs(rhs[:d]).max()) if d else 1.0)

    precond = np.empty(m)
    precond[:d] = np.asarray(A.multiply(A).sum(axis=0)).ravel() + lam
    if fit_bias:
        precond[d] = n

    if max_iter is None:
        max_iter = max(100, min(2 * m, 2000))

    x = np.zeros(m)
    r = rhs.copy()
    z = r / precond
    p = z.copy()
    rz = float(r @ z)
    iterations = 0
    converged = float(np.abs(r).max()) <= threshold
    while not converged and iterations < max_iter:
        hp = hess_product(p)
        php = float(p @ hp)
        if php <= 0:
            break
        alpha = rz / php
        x += alpha * p
        r -= alpha * hp
        iterations += 1
        if float(np.abs(r).max()) <= threshold:
            converged = True
            break
        z = r / precond
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    if not converged:
        logger.warning("ridge CG stopped at %d iterations, residual %.3e > %.3e",
                       iterations, float(np.abs(r).max()), threshold)

    w = x[:d]
    b = float(x[d]) if fit_bias else 0.0
    residual = A @ w + b - y
    loss = float(residual @ residual + lam * (w @ w))
    report = TrainReport([loss], loss, time.perf_counter() - start, converged, iterations)
    return LinearModel(w, b), report


def _svr_objective(A, y, w, b, eps, lam) -> float:
    slack = np.abs(A @ w + b - y) - eps
    np.maximum(slack, 0.0, out=slack)
    return float(0.5 * lam * (w @ w) + slack.mean())


def train_svr(X, y, params: TrainParams,
              n_features: int | None = None) -> tuple[LinearModel, TrainReport]:
    """Epsilon-insensitive linear regression by seeded subgradient descent.

    Objective: lam*||w||^2/2 + mean(max(0, |Xw + b - y| - eps)). The L2
    term is carried as a scalar multiplier so each step stays O(nnz).
    An epoch that ends with a worse objective is rolled back and the base
    step size halved, so recorded epoch losses never increase.
    """
    start = time.perf_counter()
    A = _as_csr(X, n_features)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(A, y)
    n, d = A.shape
    eps, lam = params.svr_epsilon, params.svr_lambda
    rng = np.random.default_rng(params.seed)

    indptr, col, data = A.indptr, A.indices, A.data
    v = np.zeros(d)
    scale = 1.0
    b = float(y.mean())
    base_lr = params.learning_rate
    best_loss = _svr_objective(A, y, v, b, eps, lam)
    best_state = (v.copy(), scale, b)
    losses = []
    step = 0
    for _ in range(params.epochs):
        for i in rng.permutation(n):
            step += 1
            lr = base_lr / (1.0 + step / n)
            lo, hi = indptr[i], indptr[i + 1]
            ii, dd = col[lo:hi], data[lo:hi]
            residual = scale * float(v[ii] @ dd) + b - y[i]
            scale *= 1.0 - lr * lam
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            if abs(residual) > eps:
                g = 1.0 if residual > 0 else -1.0
                v[ii] -= (lr * g / scale) * dd
                b -= lr * g
        loss = _svr_objective(A, y, scale * v, b, eps, lam)
        if loss > best_loss:
            v, scale, b = best_state[0].copy(), best_state[1], best_state[2]
            base_lr *= 0.5
        else:
            best_loss = loss
            best_state = (v.copy(), scale, b)
        losses.append(best_loss)
    w = best_state[1] * best_state[0]
    report = TrainReport(losses, losses[-1], time.perf_counter() - start,
                         iterations=step)
    return LinearModel(w, best_state[2]), report


def _mlp_forward(model: MlpModel, A: sparse.csr_matrix):
    z = A @ model.hidden_weights.T + model.hidden_bias
    h = np.maximum(z, 0.0)
    pred = h @ model.output_weights + model.output_bias
    return z, h, pred


def mlp_loss(model: MlpModel, X, y) -> float:
    """Mean squared error of the network on a batch."""
    A = _as_csr(X, model.n_features)
    y = np.asarray(y, dtype=np.float64)
    _, _, pred = _mlp_forward(model, A)
    err = pred - y
    return float(err @ err) / len(y)


def mlp_gradients(model: MlpModel, X, y) -> dict[str, np.ndarray]:
    """Analytic full-batch gradients of the MSE for every parameter."""
    A = _as_csr(X, model.n_features)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    z, h, pred = _mlp_forward(model, A)
    dpred = (2.0 / n) * (pred - y)
    d_out_w = h.T @ dpred
    d_out_b = np.array([dpred.sum()])
    dz = np.where(z > 0.0, np.outer(dpred, model.output_weights), 0.0)
    d_hidden_b = dz.sum(axis=0)
    d_hidden_w = np.asarray((A.T @ dz).T)
    return {
        "hidden_weights": d_hidden_w,
        "hidden_bias": d_hidden_b,
        "output_weights": d_out_w,
        "output_bias": d_out_b,
    }


def train_mlp(X, y, params: TrainParams,
              n_features: int | None = None) -> tuple[MlpModel, TrainReport]:
    """One rectifier hidden layer, squared error, seeded mini-batch descent.

    Hidden-layer updates touch only the feature columns present in the
    batch, so step cost scales with batch nnz rather than vocabulary size.
    """
    start = time.perf_counter()
    A = _as_csr(X, n_features)
    y = np.asarray(y, dtype=np.float64)
    _check_training_inputs(A, y)
    n, d = A.shape
    h = params.mlp_hidden

    rng = np.random.default_rng(params.seed)
    lim = np.sqrt(6.0 / (d + h))
    # Zero output weights make the initial prediction exactly mean(y);
    # the first step moves them and unfreezes the hidden layer.
    model = MlpModel(
        hidden_weights=rng.uniform(-lim, lim, size=(h, d)),
        hidden_bias=np.zeros(h),
        output_weights=np.zeros(h),
        output_bias=float(y.mean()),
    )

    losses = []
    step = 0
    for _ in range(params.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, params.batch_size):
            step += 1
            lr = params.learning_rate / (1.0 + step * params.batch_size / n)
            rows = order[lo:lo + params.batch_size]
            batch = A[rows]
            yb = y[rows]
            nb = len(rows)
            z = batch @ model.hidden_weights.T + model.hidden_bias
            hidden = np.maximum(z, 0.0)
            pred = hidden @ model.output_weights + model.output_bias
            dpred = (2.0 / nb) * (pred - yb)
            d_out_w = hidden.T @ dpred
            d_out_b = dpred.sum()
            dz = np.where(z > 0.0, np.outer(dpred, model.output_weights), 0.0)
            d_hidden_b = dz.sum(axis=0)
            cols = np.unique(batch.indices)
            if len(cols):
                small = batch[:, cols]
                grad_cols = np.asarray((small.T @ dz).T)
                model.hidden_weights[:, cols] -= lr * grad_cols
            model.hidden_bias -= lr * d_hidden_b
            model.output_weights -= lr * d_out_w
            model.output_bias -= lr * d_out_b
        losses.append(mlp_loss(model, A, y))
    report = TrainReport(losses, losses[-1], time.perf_counter() - start,
                         iterations=step)
    return model, report


def margin_rank_loss(s_less: float, s_more: float, margin: float = 0.5) -> float:
    """Hinge ordering penalty: zero once the more-toxic score leads by margin."""
    return max(0.0, margin - (s_more - s_less))


def train_pairwise_ranker(pairs, vocab: Vocabulary, clean_mode: CleanMode,
                          params: TrainParams,
                          holdout=None) -> tuple[LinearModel, TrainReport]:
    """Linear ranker trained by subgradient descent on the ordering hinge.

    Texts are cleaned and vectorized once up front. The bias cancels in
    every score difference, so the model carries bias 0. If ``holdout``
    pairs are supplied, overlapping text pairs trigger a warning.
    """
    if not len(pairs.pairs):
        raise ValueError("cannot train a ranker on an empty pair corpus")
    if holdout is not None:
        train_keys = {(p.less_toxic, p.more_toxic) for p in pairs.pairs}
        held_keys = {(p.less_toxic, p.more_toxic) for p in holdout.pairs}
        overlap = len(train_keys & held_keys)
        if overlap:
            warnings.warn(
                f"{overlap} training pair(s) also appear in the held-out pair set",
                stacklevel=2,
            )
    start = time.perf_counter()
    clean = cleaner(clean_mode)
    d = len(vocab)
    less = to_csr([transform(clean(p.less_toxic), vocab) for p in pairs.pairs], d)
    more = to_csr([transform(clean(p.more_toxic), vocab) for p in pairs.pairs], d)
    diff = (more - less).tocsr()
    diff.eliminate_zeros()
    n = diff.shape[0]
    indptr, col, data = diff.indptr, diff.indices, diff.data

    rng = np.random.default_rng(params.seed)
    w = np.zeros(d)
    margin = params.margin
    losses = []
    step = 0
    for _ in range(params.epochs):
        for i in rng.permutation(n):
            step += 1
            lr = params.learning_rate / (1.0 + step / n)
            lo, hi = indptr[i], indptr[i + 1]
            ii, dd = col[lo:hi], data[lo:hi]
            if margin - float(w[ii] @ dd) > 0.0:
                w[ii] += lr * dd
        gap = margin - diff @ w
        np.maximum(gap, 0.0, out=gap)
        losses.append(float(gap.mean()))
    report = TrainReport(losses, losses[-1], time.perf_counter() - start,
                         iterations=step)
    return LinearModel(w, 0.0), report


def predict(model, x: SparseVector) -> float:
    """Score one document vector; the zero vector scores the output bias."""
    if x.nnz and int(x.indices[-1]) >= model.n_features:
        raise DimensionMismatchError(
            f"feature index {int(x.indices[-1])} out of range for "
            f"{model.n_features}-feature model"
        )
    if isinstance(model, LinearModel):
        return float(model.weights[x.indices] @ x.values + model.bias)
    if isinstance(model, MlpModel):
        z = model.hidden_weights[:, x.indices] @ x.values + model.hidden_bias
        np.maximum(z, 0.0, out=z)
        return float(z @ model.output_weights + model.output_bias)
    raise TypeError(f"unsupported model type: {type(model).__name__}")


def score_matrix(model, X: sparse.csr_matrix) -> np.ndarray:
    """Vectorized scores for a stacked document matrix."""
    if X.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"{X.shape[1]} feature columns vs {model.n_features}-feature model"
        )
    if isinstance(model, LinearModel):
        return X @ model.weights + model.bias
    if isinstance(model, MlpModel):
        _, _, pred = _mlp_forward(model, X)
        return pred
    raise TypeError(f"unsupported model type: {type(model).__name__}")
