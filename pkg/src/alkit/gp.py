"""One-vs-all Gaussian-process label regression with closed-form updates.

Each known class gets a ±1 target vector regressed under a shared
kernel; classification is the argmax of posterior means. Adding a point
extends the stored Cholesky factor by one row instead of refactorizing,
which keeps per-query model updates cheap. A small binary GP over
rejected-vs-known examples predicts how likely a candidate is to be
unnameable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import ndtr


@dataclass(frozen=True)
class Kernel:
    """rbf: exp(-gamma * ||a-b||^2); linear: a.b + bias (bias > 0)."""

    kind: str = "rbf"
    gamma: float = 1.0
    bias: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("rbf", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.kind == "linear" and self.bias <= 0:
            raise ValueError("bias must be positive")

    def gram(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        if self.kind == "linear":
            return a @ b.T + self.bias
        sq = ((a**2).sum(1)[:, None] + (b**2).sum(1)[None, :] - 2.0 * a @ b.T)
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def diag(self, a: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(a)
        if self.kind == "linear":
            return (a**2).sum(1) + self.bias
        return np.ones(len(a))


@dataclass
class GPModel:
    """Immutable after construction; updates return a new model."""

    kernel: Kernel
    sigma_n2: float
    X: np.ndarray  # (n, d)
    Y: np.ndarray  # (n, K) targets in {-1, +1}
    class_ids: tuple[int, ...]
    L: np.ndarray  # lower Cholesky of (K_gram + (sigma_n2 + jitter) I)
    alpha: np.ndarray  # (n, K) = (K_gram + sigma_n2 I)^{-1} Y
    jitter: float = 0.0

    @property
    def num_points(self) -> int:
        return self.X.shape[0]

    @property
    def num_classes(self) -> int:
        return len(self.class_ids)


@dataclass
class PosteriorPrediction:
    means: np.ndarray  # (K,) per known class
    variance: float  # shared across classes
    class_ids: tuple[int, ...]


def _factorize(gram: np.ndarray, sigma_n2: float) -> tuple[np.ndarray, float]:
    """Cholesky of gram + sigma_n2 I, with one jitter retry."""
    n = len(gram)
    a = gram + sigma_n2 * np.eye(n)
    try:
        return np.linalg.cholesky(a), 0.0
    except np.linalg.LinAlgError:
        jitter = 1e-10 * np.trace(a) / n
    try:
        return np.linalg.cholesky(a + jitter * np.eye(n)), jitter
    except np.linalg.LinAlgError as exc:
        raise ValueError("gram matrix is not positive definite even with jitter") from exc


def empty_model(kernel: Kernel, sigma_n2: float = 0.1) -> GPModel:
    return GPModel(
        kernel=kernel,
        sigma_n2=sigma_n2,
        X=np.zeros((0, 0)),
        Y=np.zeros((0, 0)),
        class_ids=(),
        L=np.zeros((0, 0)),
        alpha=np.zeros((0, 0)),
    )


def fit_targets(
    X: np.ndarray, Y: np.ndarray, class_ids: tuple[int, ...], kernel: Kernel, sigma_n2: float = 0.1
) -> GPModel:
    """Factorize and solve for explicit ±1 target columns."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.asarray(Y, dtype=float).reshape(len(X), -1)
    if len(X) < 1:
        raise ValueError("need at least one training point")
    L, jitter = _factorize(kernel.gram(X, X), sigma_n2)
    alpha = cho_solve((L, True), Y)
    return GPModel(kernel, sigma_n2, X, Y, tuple(class_ids), L, alpha, jitter)


def gp_fit(X: np.ndarray, labels, kernel: Kernel, sigma_n2: float = 0.1) -> GPModel:
    """One-vs-all fit: per class k a target vector with +1 on class-k rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.asarray(labels, dtype=int)
    if len(labels) != len(X):
        raise ValueError("labels and X length mismatch")
    class_ids = tuple(sorted(set(labels.tolist())))
    Y = np.where(labels[:, None] == np.array(class_ids)[None, :], 1.0, -1.0)
    return fit_targets(X, Y, class_ids, kernel, sigma_n2)


def gp_predict_batch(model: GPModel, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means (Q, K) and shared variances (Q,) for query rows."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if model.num_points == 0:
        return np.zeros((len(Xq), model.num_classes)), model.kernel.diag(Xq)
    if Xq.shape[1] != model.X.shape[1]:
        raise ValueError("query dimension does not match training data")
    kq = model.kernel.gram(Xq, model.X)  # (Q, n)
    means = kq @ model.alpha
    v = solve_triangular(model.L, kq.T, lower=True)
    var = model.kernel.diag(Xq) - (v**2).sum(axis=0)
    return means, np.maximum(var, 0.0)


def gp_predict(model: GPModel, x: np.ndarray) -> PosteriorPrediction:
    means, var = gp_predict_batch(model, np.atleast_2d(x))
    return PosteriorPrediction(means[0], float(var[0]), model.class_ids)


def predicted_class(prediction: PosteriorPrediction) -> int:
    """Argmax of posterior means; ties break to the lowest class id."""
    if len(prediction.class_ids) == 0:
        raise ValueError("prediction carries no classes")
    mu = prediction.means
    ids = np.array(prediction.class_ids)
    return int(ids[mu == mu.max()].min())


def mc_class_probabilities(
    prediction: PosteriorPrediction, Z: int = 100, seed: int | np.random.Generator = 0
) -> np.ndarray:
    """Monte-Carlo class probabilities from the posterior.

    Draws Z joint samples (one independent Gaussian per class, shared
    variance) and counts how often each class attains the maximum.
    """
    if Z < 1:
        raise ValueError("Z must be >= 1")
    k = len(prediction.means)
    if k == 0:
        raise ValueError("prediction carries no classes")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = prediction.means + np.sqrt(prediction.variance) * rng.standard_normal((Z, k))
    winners = np.argmax(draws, axis=1)
    return np.bincount(winners, minlength=k) / Z


def _mean_diag(model: GPModel, kappa_new: float) -> float:
    diag = model.kernel.diag(model.X) + model.sigma_n2
    return float((diag.sum() + kappa_new) / (model.num_points + 1))


def gp_update(model: GPModel, x_new: np.ndarray, class_label: int | None) -> GPModel:
    """Rank-1 extension with one new point.

    ``class_label`` may be a known class, a new class (a fresh one-vs-all
    column is created with −1 for all existing points), or None for a
    rejected point that enters every column as −1.
    """
    x = np.asarray(x_new, dtype=float).ravel()
    if model.num_points == 0:
        if class_label is None:
            return fit_targets(x[None, :], np.zeros((1, 0)), (), model.kernel, model.sigma_n2)
        return gp_fit(x[None, :], [class_label], model.kernel, model.sigma_n2)
    if x.shape[0] != model.X.shape[1]:
        raise ValueError("new point dimension does not match training data")

    k_new = model.kernel.gram(model.X, x[None, :]).ravel()  # (n,)
    kappa = float(model.kernel.diag(x[None, :])[0]) + model.sigma_n2 + model.jitter
    ell = solve_triangular(model.L, k_new, lower=True)
    piv2 = kappa - float(ell @ ell)
    jitter = model.jitter
    if piv2 <= 0.0:
        extra = 1e-10 * _mean_diag(model, kappa)
        piv2 += extra
        jitter += extra
        if piv2 <= 0.0:
            raise ValueError("rank-1 update broke down (pivot <= 0 after jitter)")
    n = model.num_points
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = model.L
    L[n, :n] = ell
    L[n, n] = np.sqrt(piv2)

    class_ids = model.class_ids
    Y = model.Y
    if class_label is None:
        row = -np.ones(len(class_ids))
    elif class_label in class_ids:
        row = np.where(np.array(class_ids) == class_label, 1.0, -1.0)
    else:
        Y = np.hstack([Y, -np.ones((n, 1))])
        class_ids = class_ids + (class_label,)
        row = np.append(-np.ones(len(model.class_ids)), 1.0)
    Y = np.vstack([Y, row[None, :]]) if len(class_ids) else np.zeros((n + 1, 0))
    X = np.vstack([model.X, x[None, :]])
    alpha = cho_solve((L, True), Y)
    return GPModel(model.kernel, model.sigma_n2, X, Y, class_ids, L, alpha, jitter)


def posterior_covariance(model: GPModel, Xa: np.ndarray, Xb: np.ndarray) -> np.ndarray:
    """cov(f(a), f(b)) under the posterior: k(a,b) − k_a^T (K+σI)^{-1} k_b."""
    Xa = np.atleast_2d(Xa)
    Xb = np.atleast_2d(Xb)
    prior = model.kernel.gram(Xa, Xb)
    if model.num_points == 0:
        return prior
    va = solve_triangular(model.L, model.kernel.gram(model.X, Xa), lower=True)
    vb = solve_triangular(model.L, model.kernel.gram(model.X, Xb), lower=True)
    return prior - va.T @ vb


@dataclass
class RejectionModel:
    """Binary GP over rejected (+1) versus known-class (−1) examples."""

    kernel: Kernel
    sigma_n2: float = 0.1
    rejected: list = field(default_factory=list)
    known: list = field(default_factory=list)

    @property
    def active(self) -> bool:
        return len(self.rejected) >= 1

    def add_rejected(self, x: np.ndarray) -> None:
        self.rejected.append(np.asarray(x, dtype=float).ravel())

    def add_known(self, x: np.ndarray) -> None:
        self.known.append(np.asarray(x, dtype=float).ravel())

    def _fit(self) -> GPModel:
        X = np.vstack(self.rejected + self.known)
        y = np.concatenate([np.ones(len(self.rejected)), -np.ones(len(self.known))])
        return fit_targets(X, y[:, None], (1,), self.kernel, self.sigma_n2)


def rejection_probability(rej: RejectionModel, x: np.ndarray) -> float:
    return float(rejection_probability_batch(rej, np.atleast_2d(x))[0])


def rejection_probability_batch(rej: RejectionModel, Xq: np.ndarray) -> np.ndarray:
    """Probit probability that each query is unnameable; 0 while inactive."""
    Xq = np.atleast_2d(Xq)
    if not rej.active:
        return np.zeros(len(Xq))
    means, var = gp_predict_batch(rej._fit(), Xq)
    return ndtr(means[:, 0] / np.sqrt(rej.sigma_n2 + var))
