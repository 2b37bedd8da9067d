"""Expected model output change, with density weighting and rejection.

EMOC scores a candidate by the expected L1 change of all one-vs-all GP
mean functions over an evaluation set, marginalized over hypothesized
labels. The closed form for a rank-1 GP update makes this cheap:

    delta_f_k(x) = (y'_k - mu_k(x_c)) * cov(x, x_c) / (sigma2(x_c) + sigma_n2)

so the L1 change factorizes into a per-class residual term and a
per-evaluation-point covariance term. Density weighting multiplies by a
Parzen estimate; rejection handling scales by the probability that the
annotator can actually name the candidate.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .gp import (
    GPModel,
    Kernel,
    RejectionModel,
    gp_fit,
    gp_predict,
    gp_predict_batch,
    gp_update,
    mc_class_probabilities,
    posterior_covariance,
    rejection_probability_batch,
)
from .metrics import margin_1vs2
from .synthdata import KIND_NAMEABLE, FeatureDataset

DISCOVERY_METHODS = ("emoc", "emoc-density", "emoc-reject", "gp-var", "gp-unc", "1vs2", "random")


@dataclass(frozen=True)
class EmocConfig:
    mc_samples: int = 100
    density_weighting: bool = False
    rejection_handling: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")


def hypothesis_targets(class_ids: tuple[int, ...], hypothesized_class: int | None) -> np.ndarray:
    """±1 targets the new point would contribute to each existing column.

    A new-class or rejected hypothesis is −1 for every existing class.
    """
    ids = np.array(class_ids)
    if hypothesized_class is None or hypothesized_class not in class_ids:
        return -np.ones(len(ids))
    return np.where(ids == hypothesized_class, 1.0, -1.0)


def delta_model_output(
    model: GPModel, x_cand: np.ndarray, hypothesized_class: int | None, eval_points: np.ndarray
) -> float:
    """Sum over eval points of the L1 mean-function change after adding
    (x_cand, hypothesized label), restricted to the existing classes."""
    pred = gp_predict(model, x_cand)
    targets = hypothesis_targets(model.class_ids, hypothesized_class)
    cov = posterior_covariance(model, np.atleast_2d(eval_points), np.atleast_2d(x_cand))[:, 0]
    denom = pred.variance + model.sigma_n2
    if denom <= 0.0:
        # noise-free duplicate of a training point: the update is a no-op
        return 0.0
    scale = np.abs(cov).sum() / denom
    return float(np.abs(targets - pred.means).sum() * scale)


def emoc_given_probs(
    model: GPModel, x_cand: np.ndarray, eval_points: np.ndarray, label_probs: np.ndarray
) -> float:
    """EMOC with the label marginal supplied by the caller.

    ``label_probs`` aligns with ``model.class_ids``. The change term per
    hypothesis is the mean over eval points of the L1 change.
    """
    if len(label_probs) != model.num_classes:
        raise ValueError("label_probs must align with the model's classes")
    n_eval = len(np.atleast_2d(eval_points))
    total = 0.0
    for p, cid in zip(label_probs, model.class_ids):
        total += p * delta_model_output(model, x_cand, cid, eval_points) / n_eval
    return float(total)


def emoc(
    model: GPModel,
    x_cand: np.ndarray,
    eval_points: np.ndarray,
    config: EmocConfig = EmocConfig(),
    rng: np.random.Generator | None = None,
) -> float:
    """Expected L1 model output change, marginalized over known labels."""
    if model.num_classes < 1:
        raise ValueError("model has no known classes")
    probs = mc_class_probabilities(
        gp_predict(model, x_cand), config.mc_samples, rng if rng is not None else config.seed
    )
    return emoc_given_probs(model, x_cand, eval_points, probs)


def parzen_density(x: np.ndarray, all_points: np.ndarray, kernel: Kernel) -> float:
    return float(parzen_density_batch(np.atleast_2d(x), all_points, kernel)[0])


def parzen_density_batch(Xq: np.ndarray, all_points: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Kernel density estimate (1/N) sum_j k(x_j, x) for each query."""
    all_points = np.atleast_2d(all_points)
    if len(all_points) == 0:
        raise ValueError("parzen density needs a nonempty point set")
    return kernel.gram(all_points, np.atleast_2d(Xq)).mean(axis=0)


def emoc_density(
    model: GPModel,
    x_cand: np.ndarray,
    eval_points: np.ndarray,
    config: EmocConfig = EmocConfig(),
    rng: np.random.Generator | None = None,
) -> float:
    """EMOC weighted toward high-density regions of the data."""
    return emoc(model, x_cand, eval_points, config, rng) * parzen_density(
        x_cand, eval_points, model.kernel
    )


def emoc_with_rejection(
    model: GPModel,
    rej: RejectionModel,
    x_cand: np.ndarray,
    eval_points: np.ndarray,
    config: EmocConfig = EmocConfig(),
    rng: np.random.Generator | None = None,
) -> float:
    """(1 − p_reject) × (density-weighted) EMOC."""
    base = (emoc_density if config.density_weighting else emoc)(
        model, x_cand, eval_points, config, rng
    )
    p_r = float(rejection_probability_batch(rej, np.atleast_2d(x_cand))[0])
    return (1.0 - p_r) * base


def baseline_value(
    kind: str,
    model: GPModel,
    x: np.ndarray,
    rng: np.random.Generator | None = None,
    mc_samples: int = 100,
) -> float:
    """Reference criteria: random, gp_var, gp_unc, one_vs_two."""
    if kind == "random":
        if rng is None:
            raise ValueError("the random baseline needs an rng")
        return float(rng.random())
    pred = gp_predict(model, x)
    if kind == "gp_var":
        return pred.variance
    if kind == "gp_unc":
        return float(-abs(pred.means.max()) / np.sqrt(model.sigma_n2 + pred.variance))
    if kind == "one_vs_two":
        probs = mc_class_probabilities(pred, mc_samples, rng if rng is not None else 0)
        return margin_1vs2(probs)
    raise ValueError(f"unknown baseline kind {kind!r}")


# ---------------------------------------------------------------------------
# vectorized scoring over a candidate pool


def _mc_probabilities_batch(
    means: np.ndarray, var: np.ndarray, Z: int, rng: np.random.Generator
) -> np.ndarray:
    """(C, K) class probabilities by counting argmax over Z joint draws."""
    c, k = means.shape
    draws = means[:, None, :] + np.sqrt(var)[:, None, None] * rng.standard_normal((c, Z, k))
    winners = draws.argmax(axis=2)
    probs = np.zeros((c, k))
    for j in range(k):
        probs[:, j] = (winners == j).mean(axis=1)
    return probs


def score_candidates(
    method: str,
    model: GPModel,
    rej: RejectionModel,
    candidates: np.ndarray,
    eval_points: np.ndarray,
    config: EmocConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Value every candidate row under the named selection method."""
    if method not in DISCOVERY_METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {DISCOVERY_METHODS}")
    candidates = np.atleast_2d(candidates)
    if method == "random":
        return rng.random(len(candidates))

    means, var = gp_predict_batch(model, candidates)
    if method == "gp-var":
        return var
    if method == "gp-unc":
        return -np.abs(means.max(axis=1)) / np.sqrt(model.sigma_n2 + var)

    probs = _mc_probabilities_batch(means, var, config.mc_samples, rng)
    if method == "1vs2":
        top2 = np.sort(probs, axis=1)[:, -2:]
        return 1.0 - (top2[:, 1] - top2[:, 0])

    # EMOC family: the L1 change factorizes per candidate
    cov = posterior_covariance(model, eval_points, candidates)  # (E, C)
    denom = var + model.sigma_n2
    scale = np.divide(
        np.abs(cov).mean(axis=0), denom, out=np.zeros_like(denom), where=denom > 0
    )  # (C,)
    neg_l1 = np.abs(-1.0 - means).sum(axis=1)  # sum_k |-1 - mu_k|
    # residual term per hypothesized class j: swap the j-th |-1-mu| for |1-mu|
    residual = neg_l1[:, None] - np.abs(-1.0 - means) + np.abs(1.0 - means)  # (C, K)
    values = (probs * residual).sum(axis=1) * scale
    if method == "emoc":
        return values
    values = values * parzen_density_batch(candidates, eval_points, model.kernel)
    if method == "emoc-density":
        return values
    return (1.0 - rejection_probability_batch(rej, candidates)) * values


# ---------------------------------------------------------------------------
# class-discovery experiment


@dataclass(frozen=True)
class DiscoveryConfig:
    budget: int = 100
    initial_classes: int = 2
    examples_per_class: int = 5
    test_per_class: int = 30
    kernel: Kernel = Kernel("rbf", gamma=1.0)
    sigma_n2: float = 0.1
    emoc: EmocConfig = EmocConfig()


@dataclass
class DiscoveryResult:
    method: str
    task: int
    init: int
    discovered: list[int] = field(default_factory=list)  # index 0 = before any query
    accuracy: list[float] = field(default_factory=list)


def _test_accuracy(model: GPModel, X_test: np.ndarray, y_test: np.ndarray) -> float:
    means, _ = gp_predict_batch(model, X_test)
    ids = np.array(model.class_ids)
    pred = ids[means.argmax(axis=1)]
    return float((pred == y_test).mean())


def run_discovery(
    dataset: FeatureDataset,
    method: str,
    config: DiscoveryConfig = DiscoveryConfig(),
    seed: int = 0,
    task: int = 0,
    init: int = 0,
) -> DiscoveryResult:
    """One discovery run: start from a few known classes, query by the
    method's score, let the simulated annotator name or reject each
    query, and track discovered classes and held-out accuracy.

    Rejected queries train the rejection predictor and enter the main
    GP as a negative for every one-vs-all column.
    """
    nameable = dataset.nameable_classes
    if len(nameable) < config.initial_classes:
        raise ValueError("dataset has too few nameable classes")
    rng = np.random.default_rng([seed, 0])
    score_rng = np.random.default_rng([seed, 1])

    known = sorted(rng.choice(nameable, size=config.initial_classes, replace=False).tolist())
    test_idx: list[int] = []
    for c in nameable:
        members = np.flatnonzero(dataset.labels == c)
        if len(members) < config.test_per_class + (config.examples_per_class if c in known else 0):
            raise ValueError(f"class {c} has too few examples for the requested split")
        test_idx.extend(rng.choice(members, size=config.test_per_class, replace=False).tolist())
    test_set = set(test_idx)

    labeled: list[int] = []
    for c in known:
        members = [i for i in np.flatnonzero(dataset.labels == c) if i not in test_set]
        labeled.extend(rng.choice(members, size=config.examples_per_class, replace=False).tolist())

    pool = [i for i in range(len(dataset.X)) if i not in test_set and i not in labeled]
    X = dataset.X
    X_test = X[test_idx]
    y_test = dataset.labels[test_idx]

    model = gp_fit(X[labeled], dataset.labels[labeled], config.kernel, config.sigma_n2)
    rej = RejectionModel(config.kernel, config.sigma_n2)
    for i in labeled:
        rej.add_known(X[i])

    result = DiscoveryResult(method=method, task=task, init=init)
    result.discovered.append(model.num_classes)
    result.accuracy.append(_test_accuracy(model, X_test, y_test))

    budget = config.budget
    if budget > len(pool):
        warnings.warn(f"budget {budget} exceeds pool size {len(pool)}; truncating")
        budget = len(pool)

    for _ in range(budget):
        eval_points = X[labeled + pool]
        scores = score_candidates(
            method, model, rej, X[pool], eval_points, config.emoc, score_rng
        )
        pick = int(np.argmax(scores))
        idx = pool.pop(pick)
        x = X[idx]
        if dataset.kinds[idx] == KIND_NAMEABLE:
            model = gp_update(model, x, int(dataset.labels[idx]))
            rej.add_known(x)
        else:
            model = gp_update(model, x, None)
            rej.add_rejected(x)
        labeled.append(idx)
        result.discovered.append(model.num_classes)
        result.accuracy.append(_test_accuracy(model, X_test, y_test))
    return result


def save_discovery(results: list[DiscoveryResult], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["method", "task", "init", "query_index", "discovered_classes", "test_accuracy"])
        for r in results:
            for q, (d, a) in enumerate(zip(r.discovered, r.accuracy)):
                w.writerow([r.method, r.task, r.init, q, d, format(a, ".17g")])


def load_discovery(path) -> list[DiscoveryResult]:
    results: dict[tuple[str, int, int], DiscoveryResult] = {}
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            key = (rec["method"], int(rec["task"]), int(rec["init"]))
            r = results.setdefault(key, DiscoveryResult(method=key[0], task=key[1], init=key[2]))
            r.discovered.append(int(rec["discovered_classes"]))
            r.accuracy.append(float(rec["test_accuracy"]))
    return list(results.values())
