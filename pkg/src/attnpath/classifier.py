"""Speaker-independent cross-validation around an L2 logistic regression.

The model is trained from scratch: z-scored inputs, mean logistic loss plus
(lambda/2)*||w||^2 with the bias unpenalized, full-batch gradient descent
with Armijo backtracking. Folds split speakers, never recordings, so no
speaker ever contributes to both sides of a fold. Per-session predictions
are pooled across folds and scored once; per-fold metrics are kept for
diagnosis only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .features import (
    ALL_BLOCKS,
    WV_COMPONENTS,
    AoaTable,
    WordVectorTable,
    assemble_feature_vector,
    fit_pca,
    mask_column_indices,
    zero_pca,
)
from .registry import AoiRegistry, filter_registry
from .rng import SplitMix64
from .transcript import LABELS, SessionRecord

# Label encoding for training: positive class is AD.
POSITIVE_LABEL = "AD"
NEGATIVE_LABEL = "HC"

ARMIJO_C = 1e-4
BACKTRACK_FACTOR = 0.5
MIN_STEP = 1e-20


@dataclass
class FoldPlan:
    """Assignment of every speaker to exactly one fold."""

    k: int
    assignments: dict[str, int]

    def fold_of(self, speaker_id: str) -> int:
        return self.assignments[speaker_id]


def grouped_kfold(speakers: list[tuple[str, int]], k: int, seed: int) -> FoldPlan:
    """Deterministic speaker-level folds balanced by recording count.

    Speakers are shuffled with the seeded stream (tie-breaking), stably
    ordered by descending session count, then each goes to the fold with the
    smallest session total so far (lowest index on ties). Balancing targets
    recordings, not speaker counts.
    """
    if k < 2:
        raise ValidationError(f"k must be >= 2, got {k}")
    ids = [s for s, _ in speakers]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate speaker ids in fold input")
    if len(speakers) < k:
        raise ValidationError(f"k={k} exceeds distinct speaker count {len(speakers)}")
    for sid, count in speakers:
        if count < 1:
            raise ValidationError(f"speaker {sid!r}: session count {count} < 1")

    order = list(speakers)
    SplitMix64(seed).shuffle(order)
    order.sort(key=lambda item: -item[1])  # stable: shuffled order breaks ties

    totals = [0] * k
    assignments: dict[str, int] = {}
    for sid, count in order:
        fold = totals.index(min(totals))
        assignments[sid] = fold
        totals[fold] += count
    return FoldPlan(k, assignments)


def fit_standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and population std; near-zero stds become scale 1."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("fit_standardizer needs at least one row")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale < 1e-12, 1.0, scale)
    return mean, scale


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    scaler_mean: np.ndarray
    scaler_scale: np.ndarray
    lam: float
    loss_history: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))


def _loss(Xs: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, lam: float) -> float:
    z = Xs @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * np.dot(w, w))


def logreg_gradient(
    Xs: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, lam: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of the regularized mean logistic loss."""
    residual = (_sigmoid(Xs @ w + b) - y) / len(y)
    return Xs.T @ residual + lam * w, float(residual.sum())


def train_logreg(
    X: np.ndarray,
    y: np.ndarray,
    lam: float = 1.0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> LogRegModel:
    """Fit by full-batch descent with backtracking line search.

    Stops when the gradient infinity-norm drops below tol, the iteration
    budget runs out, or no step length still decreases the loss. Accepted
    steps satisfy the Armijo condition, so the recorded loss history is
    non-increasing.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValidationError("training matrix contains non-finite values")
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValidationError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("labels must be encoded 0 (HC) / 1 (AD)")
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")

    mean, scale = fit_standardizer(X)
    Xs = (X - mean) / scale
    w = np.zeros(X.shape[1])
    b = 0.0
    history = [_loss(Xs, y, w, b, lam)]

    for _ in range(max_iter):
        gw, gb = logreg_gradient(Xs, y, w, b, lam)
        if max(np.max(np.abs(gw), initial=0.0), abs(gb)) < tol:
            break
        current = history[-1]
        gsq = float(np.dot(gw, gw) + gb * gb)
        step = 1.0
        while step > MIN_STEP:
            w_new = w - step * gw
            b_new = b - step * gb
            candidate = _loss(Xs, y, w_new, b_new, lam)
            if candidate <= current - ARMIJO_C * step * gsq:
                break
            step *= BACKTRACK_FACTOR
        else:
            break  # no productive step remains
        w, b = w_new, b_new
        history.append(candidate)

    return LogRegModel(w, b, mean, scale, lam, np.array(history))


def predict_proba(model: LogRegModel, x: np.ndarray) -> float:
    """P(positive class) for one raw feature vector; strictly inside (0, 1)."""
    x = np.asarray(x, dtype=float)
    if x.shape != model.weights.shape:
        raise ValidationError(f"feature width {x.shape} does not match model {model.weights.shape}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("feature vector contains non-finite values")
    xs = (x - model.scaler_mean) / model.scaler_scale
    p = float(_sigmoid(np.atleast_1d(xs @ model.weights + model.bias))[0])
    return min(max(p, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))


def predict_label(model: LogRegModel, x: np.ndarray, threshold: float = 0.5) -> str:
    return POSITIVE_LABEL if predict_proba(model, x) >= threshold else NEGATIVE_LABEL


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float
    precision: float
    f1: float


def evaluate_metrics(predicted: list[str], truth: list[str], average: str = "macro") -> Metrics:
    """Accuracy plus per-class precision/recall/F1 averaged over {AD, HC}.

    Zero-denominator class scores are 0. average is "macro" (unweighted) or
    "weighted" (by class support in the truth labels).
    """
    if average not in ("macro", "weighted"):
        raise ValidationError(f"average must be macro or weighted, got {average!r}")
    if len(predicted) != len(truth):
        raise ValidationError(f"length mismatch: {len(predicted)} predictions, {len(truth)} truths")
    if not truth:
        raise ValidationError("cannot evaluate empty label lists")
    for lab in list(predicted) + list(truth):
        if lab not in LABELS:
            raise ValidationError(f"unknown label {lab!r}")

    accuracy = sum(p == t for p, t in zip(predicted, truth)) / len(truth)
    precisions, recalls, f1s, supports = [], [], [], []
    for cls in LABELS:
        tp = sum(1 for p, t in zip(predicted, truth) if p == cls and t == cls)
        fp = sum(1 for p, t in zip(predicted, truth) if p == cls and t != cls)
        fn = sum(1 for p, t in zip(predicted, truth) if p != cls and t == cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
        supports.append(tp + fn)

    if average == "macro":
        weights = [1.0 / len(LABELS)] * len(LABELS)
    else:
        total = sum(supports)
        weights = [s / total for s in supports]
    agg = lambda vals: sum(v * w for v, w in zip(vals, weights))
    return Metrics(accuracy, agg(recalls), agg(precisions), agg(f1s))


# ---------------------------------------------------------------------------
# Cross-validation driver
# ---------------------------------------------------------------------------


@dataclass
class SessionPrediction:
    fold: int
    session_id: str
    speaker_id: str
    truth: str
    predicted: str
    probability: float


@dataclass
class FoldReport:
    fold: int
    n_train: int
    n_test: int
    metrics: Metrics


@dataclass
class CvResult:
    metrics: Metrics
    per_fold: list[FoldReport]
    predictions: list[SessionPrediction]
    plan: FoldPlan


def speaker_session_counts(sessions: list[SessionRecord]) -> list[tuple[str, int]]:
    """(speaker_id, session count) in first-appearance order."""
    counts: dict[str, int] = {}
    for s in sessions:
        counts[s.speaker_id] = counts.get(s.speaker_id, 0) + 1
    return list(counts.items())


def run_cross_validation(
    sessions: list[SessionRecord],
    registry: AoiRegistry,
    aoa_table: AoaTable,
    wv_table: WordVectorTable,
    k: int,
    seed: int,
    lam: float = 1.0,
    mask: tuple[str, ...] = ALL_BLOCKS,
    average: str = "macro",
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> CvResult:
    """Pooled speaker-independent k-fold evaluation.

    Per fold: the AOI registry is filtered to the training transcripts'
    vocabulary, the embedding PCA is refitted on that vocabulary (one vector
    per unique covered word), features are extracted for both sides, the
    model is trained and the held-out sessions scored. Folds run in index
    order and predictions pool in that order, so results are bit-for-bit
    reproducible for fixed inputs and seed.
    """
    if not sessions:
        raise ValidationError("no sessions to cross-validate")
    labels_present = {s.label for s in sessions}
    if labels_present != set(LABELS):
        raise ValidationError(f"need both classes overall, found {sorted(labels_present)}")

    plan = grouped_kfold(speaker_session_counts(sessions), k, seed)
    columns = mask_column_indices(mask)

    predictions: list[SessionPrediction] = []
    per_fold: list[FoldReport] = []
    for fold in range(k):
        test = [s for s in sessions if plan.fold_of(s.speaker_id) == fold]
        train = [s for s in sessions if plan.fold_of(s.speaker_id) != fold]
        train_labels = {s.label for s in train}
        if train_labels != set(LABELS):
            raise ValidationError(
                f"fold {fold}: training set has only {sorted(train_labels)}; reseed or lower k"
            )

        vocab = {tok.word for s in train for tok in s.tokens}
        fold_registry = filter_registry(registry, vocab)
        covered = sorted(w for w in vocab if w in wv_table.vectors)
        if covered:
            pca = fit_pca([wv_table.vectors[w] for w in covered], WV_COMPONENTS)
        else:
            pca = zero_pca(wv_table.dim, WV_COMPONENTS)

        X_train = np.stack(
            [assemble_feature_vector(s, fold_registry, aoa_table, wv_table, pca).values for s in train]
        )[:, columns]
        y_train = np.array([1.0 if s.label == POSITIVE_LABEL else 0.0 for s in train])
        model = train_logreg(X_train, y_train, lam=lam, max_iter=max_iter, tol=tol)

        fold_pred, fold_truth = [], []
        for s in test:
            x = assemble_feature_vector(s, fold_registry, aoa_table, wv_table, pca).values[columns]
            prob = predict_proba(model, x)
            label = POSITIVE_LABEL if prob >= 0.5 else NEGATIVE_LABEL
            predictions.append(SessionPrediction(fold, s.session_id, s.speaker_id, s.label, label, prob))
            fold_pred.append(label)
            fold_truth.append(s.label)
        per_fold.append(
            FoldReport(fold, len(train), len(test), evaluate_metrics(fold_pred, fold_truth, average))
        )

    pooled = evaluate_metrics([p.predicted for p in predictions], [p.truth for p in predictions], average)
    return CvResult(pooled, per_fold, predictions, plan)


# ---------------------------------------------------------------------------
# Fixed-format JSON report
# ---------------------------------------------------------------------------


def _json_value(value, indent: int) -> str:
    pad = " " * indent
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_json_value(v, indent + 2)}' for k, v in value.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{pad}  {_json_value(v, indent + 2)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def metrics_json(result: CvResult, config: dict) -> str:
    """Deterministic metrics report: floats fixed at 6 decimals."""
    doc = {
        "accuracy": result.metrics.accuracy,
        "recall": result.metrics.recall,
        "precision": result.metrics.precision,
        "f1": result.metrics.f1,
        "per_fold": [
            {
                "fold": fr.fold,
                "n_train": fr.n_train,
                "n_test": fr.n_test,
                "accuracy": fr.metrics.accuracy,
                "recall": fr.metrics.recall,
                "precision": fr.metrics.precision,
                "f1": fr.metrics.f1,
            }
            for fr in result.per_fold
        ],
        "config": config,
    }
    return _json_value(doc, 0) + "\n"
