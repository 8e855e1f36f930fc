"""Classification metrics, separability and neighbour-vote predictors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

__all__ = [
    "ConfusionCounts",
    "confusion_matrix",
    "binary_counts",
    "metrics",
    "score_predictions",
    "multinomial_separability",
    "fit_softmax",
    "knn_predict",
    "adjacency_vote",
    "assortativity",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def matrix(self) -> np.ndarray:
        """2x2 matrix, rows = truth (positive first), columns = prediction."""
        return np.array([[self.tp, self.fn], [self.fp, self.tn]])


def confusion_matrix(truth: Sequence, predicted: Sequence, labels: Sequence | None = None) -> tuple[np.ndarray, list]:
    """Rows index the true class, columns the predicted class."""
    if len(truth) != len(predicted):
        raise ValueError("truth and predictions differ in length")
    if labels is None:
        labels = sorted(set(truth) | set(predicted), key=str)
    pos = {lab: i for i, lab in enumerate(labels)}
    mat = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        mat[pos[t], pos[p]] += 1
    return mat, list(labels)


def binary_counts(truth: Sequence, predicted: Sequence, positive: Hashable) -> ConfusionCounts:
    tp = tn = fp = fn = 0
    for t, p in zip(truth, predicted):
        if t == positive:
            tp, fn = (tp + 1, fn) if p == positive else (tp, fn + 1)
        else:
            fp, tn = (fp + 1, tn) if p == positive else (fp, tn + 1)
    return ConfusionCounts(tp, tn, fp, fn)


def _div(num: float, den: float) -> float:
    return num / den if den else math.nan


def metrics(confusion, strict_f1: bool = False) -> dict[str, float]:
    """Accuracy, balanced accuracy, f1 and Cohen's kappa.

    Accepts :class:`ConfusionCounts` or a square confusion matrix (rows =
    truth). A zero denominator gives NaN for that metric. For more than two
    classes balanced accuracy is the mean recall and f1 the macro average.
    ``strict_f1`` uses ``2TP / (TP + FP + FN)`` instead of the usual
    ``2TP / (2TP + FP + FN)``.
    """
    if isinstance(confusion, ConfusionCounts):
        c = confusion
        p, n = c.tp + c.fn, c.tn + c.fp
        total = c.total
        acc = _div(c.tp + c.tn, total)
        tpr, tnr = _div(c.tp, p), _div(c.tn, n)
        bal = (tpr + tnr) / 2
        f1 = _div(2 * c.tp, (c.tp if strict_f1 else 2 * c.tp) + c.fp + c.fn)
        pe = _div((c.tp + c.fn) * (c.tp + c.fp) + (c.tn + c.fp) * (c.tn + c.fn), total * total)
        kappa = _div(acc - pe, 1 - pe)
        return {"acc": acc, "balanced_acc": bal, "f1": f1, "kappa": kappa}

    mat = np.asarray(confusion, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError("confusion matrix must be square")
    if np.any(mat < 0):
        raise ValueError("confusion counts must be non-negative")
    total = mat.sum()
    diag = np.diag(mat)
    rows, cols = mat.sum(axis=1), mat.sum(axis=0)
    acc = _div(diag.sum(), total)
    support = rows > 0
    bal = float(np.mean(diag[support] / rows[support])) if support.any() else math.nan
    fp, fn = cols - diag, rows - diag
    den = (diag if strict_f1 else 2 * diag) + fp + fn
    per_class = [2 * tp / dd for tp, dd in zip(diag, den) if dd > 0]
    f1 = float(np.mean(per_class)) if per_class else math.nan
    pe = _div(float(rows @ cols), total * total)
    kappa = _div(acc - pe, 1 - pe)
    return {"acc": float(acc), "balanced_acc": bal, "f1": f1, "kappa": kappa}


def score_predictions(truth: Sequence, predicted: Sequence, positive: Hashable | None = None) -> dict[str, float]:
    """Metrics over non-abstaining predictions (``None`` = abstain).

    With ``positive`` the binary formulas are used, otherwise the multiclass ones.
    """
    keep = [(t, p) for t, p in zip(truth, predicted) if p is not None and t is not None]
    abstained = sum(1 for p in predicted if p is None)
    if not keep:
        out = {"acc": math.nan, "balanced_acc": math.nan, "f1": math.nan, "kappa": math.nan}
    else:
        t, p = zip(*keep)
        if positive is not None:
            out = metrics(binary_counts(t, p, positive))
        else:
            out = metrics(confusion_matrix(t, p)[0])
    out["n_scored"] = len(keep)
    out["n_abstained"] = abstained
    return out


def _standardize(x: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd[sd == 0] = 1.0
    return (x - mu) / sd


def fit_softmax(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    *,
    lr: float = 1.0,
    max_epochs: int = 10_000,
    grad_tol: float = 1e-6,
) -> np.ndarray:
    """Unregularised softmax regression by full-batch gradient descent.

    ``x`` already includes any intercept column. Weights start at zero.
    Returns a ``(n_features, n_classes)`` weight matrix.
    """
    n, f = x.shape
    w = np.zeros((f, n_classes))
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    for _ in range(max_epochs):
        logits = x @ w
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        grad = x.T @ (p - onehot) / n
        if np.linalg.norm(grad) < grad_tol:
            break
        w -= lr * grad
    return w


def multinomial_separability(points, labels: Sequence, **fit_kw) -> float:
    """Training accuracy of a softmax regression on standardised coordinates.

    This measures how linearly separable the labelled groups are; there is
    no held-out data.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    classes = sorted(set(labels), key=str)
    if len(classes) < 2:
        raise ValueError("multinomial separability needs at least two classes")
    index = {c: i for i, c in enumerate(classes)}
    y = np.array([index[c] for c in labels])
    x = np.column_stack([np.ones(len(pts)), _standardize(pts)])
    w = fit_softmax(x, y, len(classes), **fit_kw)
    pred = np.argmax(x @ w, axis=1)
    return float(np.mean(pred == y))


def knn_predict(coords, labels: Sequence, k: int, chunk: int = 1024) -> list:
    """Majority label of the ``k`` nearest labelled points, excluding the point itself.

    ``labels`` entries of ``None`` are never used as neighbours. Distance ties
    go to the lower index; among classes tied on count, the class whose
    nearest member is closest wins.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pts = np.asarray(coords, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if not np.all(np.isfinite(pts)):
        raise ValueError("coordinates must be finite")
    n = len(pts)
    known = np.array([lab is not None for lab in labels], dtype=bool)
    cand = np.flatnonzero(known)
    cand_pts = pts[cand]
    out: list = [None] * n
    for lo in range(0, n, chunk):
        rows = np.arange(lo, min(n, lo + chunk))
        dist = ((pts[rows, None, :] - cand_pts[None, :, :]) ** 2).sum(axis=2)
        dist[rows[:, None] == cand[None, :]] = np.inf
        for r, i in enumerate(rows):
            drow = dist[r]
            avail = int(np.isfinite(drow).sum())
            kk = min(k, avail)
            if kk == 0:
                continue
            if kk < drow.size:
                thresh = np.partition(drow, kk - 1)[kk - 1]
                sel = np.flatnonzero(drow <= thresh)
            else:
                sel = np.flatnonzero(np.isfinite(drow))
            sel = sel[np.lexsort((cand[sel], drow[sel]))][:kk]
            counts: dict = {}
            first: dict = {}
            for pos, c in enumerate(sel):
                lab = labels[cand[c]]
                counts[lab] = counts.get(lab, 0) + 1
                first.setdefault(lab, pos)
            top = max(counts.values())
            out[i] = min((lab for lab in counts if counts[lab] == top), key=lambda lab: first[lab])
    return out


def _endpoints(graph):
    if hasattr(graph, "src"):
        return np.asarray(graph.src), np.asarray(graph.dst)
    e = np.asarray(graph, dtype=np.int64).reshape(-1, 2)
    return e[:, 0], e[:, 1]


def adjacency_vote(graph, labels: Sequence, eligible=None) -> list:
    """Majority label among each node's neighbours.

    Only neighbours whose label is in ``eligible`` (default: any non-None
    label) vote. Nodes without a voting neighbour get ``None``. Ties go to
    the smallest label.
    """
    src, dst = _endpoints(graph)
    n = len(labels)
    allowed = None if eligible is None else set(eligible)
    votes: list[dict] = [dict() for _ in range(n)]
    for i, j in zip(src.tolist(), dst.tolist()):
        for a, b in ((i, j), (j, i)):
            lab = labels[b]
            if lab is None or (allowed is not None and lab not in allowed):
                continue
            votes[a][lab] = votes[a].get(lab, 0) + 1
    out: list = []
    for tally in votes:
        if not tally:
            out.append(None)
            continue
        top = max(tally.values())
        out.append(min((lab for lab in tally if tally[lab] == top), key=str))
    return out


def assortativity(graph, labels: Sequence) -> float:
    """Newman's attribute assortativity from the edge-end mixing matrix.

    Edges touching an unlabelled node are skipped. Returns NaN when only one
    class appears at edge ends.
    """
    src, dst = _endpoints(graph)
    lab = list(labels)
    keep = [(lab[i], lab[j]) for i, j in zip(src.tolist(), dst.tolist()) if lab[i] is not None and lab[j] is not None]
    if not keep:
        return math.nan
    classes = sorted({c for pair in keep for c in pair}, key=str)
    pos = {c: i for i, c in enumerate(classes)}
    e = np.zeros((len(classes), len(classes)))
    for a, b in keep:
        e[pos[a], pos[b]] += 1
        e[pos[b], pos[a]] += 1
    e /= e.sum()
    ab = float(e.sum(axis=1) @ e.sum(axis=0))
    if 1.0 - ab == 0.0:
        return math.nan
    return float((np.trace(e) - ab) / (1.0 - ab))
