"""From-scratch classifiers: k-NN, bagged random forest with OOB, SVM.

Every trainer fits the min-max normalization on its own training rows
and stores it inside the model, so prediction takes raw feature
vectors.  Training is deterministic given (data, hyperparameters,
seed); all randomness flows through the package's SplitMix64 streams.
Models serialize to a versioned JSON text format.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ValidationError
from .features import MinMaxNorm, fit_minmax
from .rng import Stream, derive_key

MODEL_FORMAT = "spoofguard-model"
MODEL_VERSION = 1
MODEL_KINDS = ("knn", "forest", "svm-linear", "svm-rbf", "constant")

LABELS = ("real", "fake")
# margin-sign convention: real = +1, fake = -1; ties resolve to fake
# (rejecting a genuine user is the cheaper mistake in attack detection)
_SIGN = {"real": 1.0, "fake": -1.0}


@dataclass
class TrainedModel:
    kind: str
    feature_subset: tuple
    normalization: MinMaxNorm
    payload: dict

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "kind": self.kind,
            "feature_subset": list(self.feature_subset),
            "normalization": {
                "min": self.normalization.mins.tolist(),
                "max": self.normalization.maxs.tolist(),
            },
            "payload": self.payload,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != MODEL_FORMAT:
            raise ValidationError("not a spoofguard model file")
        if data.get("version") != MODEL_VERSION:
            raise ValidationError(f"unsupported model version {data.get('version')}")
        if data.get("kind") not in MODEL_KINDS:
            raise ValidationError(f"unknown model kind {data.get('kind')!r}")
        norm = MinMaxNorm(
            mins=np.asarray(data["normalization"]["min"], dtype=np.float64),
            maxs=np.asarray(data["normalization"]["max"], dtype=np.float64),
        )
        return cls(
            kind=data["kind"],
            feature_subset=tuple(data["feature_subset"]),
            normalization=norm,
            payload=data["payload"],
        )


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(model.to_json())


def load_model(path):
    with open(path) as fh:
        return TrainedModel.from_dict(json.load(fh))


def _check_training(matrix, need_both_labels=False, min_rows=2):
    n = len(matrix)
    if n < min_rows:
        raise ValidationError(f"need at least {min_rows} training rows, got {n}")
    for lab in matrix.labels:
        if lab not in LABELS:
            raise ValidationError(f"unknown label {lab!r}")
    if need_both_labels and len(set(matrix.labels)) < 2:
        raise ValidationError("training data contains a single class")


def train_constant(matrix, label):
    """Degenerate classifier that always answers `label` (baseline/tests)."""
    if label not in LABELS:
        raise ParameterError(f"constant label must be real or fake, got {label!r}")
    norm = fit_minmax(matrix)
    return TrainedModel(
        kind="constant",
        feature_subset=tuple(matrix.columns),
        normalization=norm,
        payload={"label": label},
    )


def train_knn(matrix, k=3):
    """k nearest neighbors by Euclidean distance on normalized rows.

    Distance ties resolve to the lower stored-row index; with odd k and
    two classes, vote ties cannot occur.
    """
    _check_training(matrix, min_rows=1)
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"k must be odd and positive, got {k}")
    if k > len(matrix):
        raise ValidationError(f"k={k} exceeds the {len(matrix)} training rows")
    norm = fit_minmax(matrix)
    return TrainedModel(
        kind="knn",
        feature_subset=tuple(matrix.columns),
        normalization=norm,
        payload={
            "k": int(k),
            "rows": norm.apply(matrix.values).tolist(),
            "labels": list(matrix.labels),
        },
    )


def _gini_split(values, labels_real, min_cost):
    """Best midpoint threshold of one feature column; returns (cost, threshold)."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    r = labels_real[order].astype(np.float64)
    n = v.size
    cuts = np.nonzero(v[:-1] < v[1:])[0]
    if cuts.size == 0:
        return None
    reals_left = np.cumsum(r)[cuts]
    n_left = (cuts + 1).astype(np.float64)
    n_right = n - n_left
    reals_right = r.sum() - reals_left
    gini_left = 2.0 * reals_left * (n_left - reals_left) / (n_left * n_left)
    gini_right = 2.0 * reals_right * (n_right - reals_right) / (n_right * n_right)
    cost = (n_left * gini_left + n_right * gini_right) / n
    best = int(np.argmin(cost))
    if cost[best] >= min_cost:
        return None
    threshold = (v[cuts[best]] + v[cuts[best] + 1]) / 2.0
    return float(cost[best]), threshold


def _leaf(labels_real):
    n_real = int(labels_real.sum())
    n_fake = int(labels_real.size - n_real)
    label = "real" if n_real > n_fake else "fake"
    return {"label": label, "counts": [n_real, n_fake]}


def _grow_tree(x, labels_real, stream, n_candidates):
    root = {}
    stack = [(np.arange(x.shape[0]), root)]
    while stack:
        idx, node = stack.pop()
        sub_real = labels_real[idx]
        if idx.size < 2 or sub_real.all() or not sub_real.any():
            node.update(_leaf(sub_real))
            continue
        cand_order = np.argsort(stream.uniform(x.shape[1]), kind="stable")[:n_candidates]
        best = None
        for feat in cand_order:
            found = _gini_split(x[idx, feat], sub_real, best[0] if best else np.inf)
            if found is not None:
                best = (found[0], int(feat), found[1])
        if best is None:
            node.update(_leaf(sub_real))
            continue
        _, feat, threshold = best
        mask = x[idx, feat] < threshold
        node["feature"] = feat
        node["value"] = threshold
        node["left"] = {}
        node["right"] = {}
        stack.append((idx[mask], node["left"]))
        stack.append((idx[~mask], node["right"]))
    return root


def _route_tree(tree, rows):
    out = np.empty(rows.shape[0], dtype=bool)
    for i, row in enumerate(rows):
        node = tree
        while "label" not in node:
            node = node["left"] if row[node["feature"]] < node["value"] else node["right"]
        out[i] = node["label"] == "real"
    return out


def train_forest(matrix, n_trees=50, seed=0):
    """Bagged decision trees: bootstrap rows, sqrt(d) feature candidates
    per split, Gini impurity, midpoint thresholds, grown to purity.

    Bootstrap index lists are recorded per tree for out-of-bag error
    estimation; prediction is the majority vote with ties going to fake.
    """
    _check_training(matrix)
    if n_trees < 1:
        raise ParameterError(f"n_trees must be at least 1, got {n_trees}")
    norm = fit_minmax(matrix)
    x = norm.apply(matrix.values)
    labels_real = np.array([lab == "real" for lab in matrix.labels])
    n = x.shape[0]
    n_candidates = max(1, int(math.isqrt(x.shape[1])))
    trees = []
    bootstraps = []
    for t in range(n_trees):
        stream = Stream(derive_key(seed, "tree", t))
        boot = np.minimum((stream.uniform(n) * n).astype(np.intp), n - 1)
        trees.append(_grow_tree(x[boot], labels_real[boot], stream, n_candidates))
        bootstraps.append([int(i) for i in boot])
    return TrainedModel(
        kind="forest",
        feature_subset=tuple(matrix.columns),
        normalization=norm,
        payload={"n_trees": int(n_trees), "seed": int(seed), "trees": trees, "bootstrap": bootstraps},
    )


def oob_error_curve(model, matrix):
    """Out-of-bag error using only the first t trees, for t = 1..n_trees.

    Rows never out-of-bag under the first t trees are skipped at point t.
    """
    if model.kind != "forest":
        raise ValidationError("OOB curve requires a forest model")
    x = model.normalization.apply(np.asarray(matrix.values, dtype=np.float64))
    labels_real = np.array([lab == "real" for lab in matrix.labels])
    n = x.shape[0]
    trees = model.payload["trees"]
    votes_real = np.zeros(n)
    votes_total = np.zeros(n)
    curve = []
    for t, tree in enumerate(trees, start=1):
        in_bag = np.zeros(n, dtype=bool)
        in_bag[np.asarray(model.payload["bootstrap"][t - 1], dtype=np.intp)] = True
        oob = ~in_bag
        if oob.any():
            pred_real = _route_tree(tree, x[oob])
            votes_real[oob] += pred_real
            votes_total[oob] += 1.0
        seen = votes_total > 0
        if seen.any():
            # majority over accumulated OOB votes; ties predict fake
            pred = votes_real[seen] * 2.0 > votes_total[seen]
            err = float(np.mean(pred != labels_real[seen]))
        else:
            err = 0.0
        curve.append((t, err))
    return curve


def _kernel_matrix(kind, gamma, a, b):
    if kind == "linear":
        return a @ b.T
    sq_a = np.sum(a * a, axis=1)[:, None]
    sq_b = np.sum(b * b, axis=1)[None, :]
    d2 = np.maximum(sq_a + sq_b - 2.0 * (a @ b.T), 0.0)
    return np.exp(-gamma * d2)


def _smo(k_mat, y, c, tol, max_epochs, order):
    n = y.size
    alpha = np.zeros(n)
    bias = 0.0
    errors = k_mat @ (alpha * y) + bias - y
    for _ in range(max_epochs):
        changed = 0
        for i in order:
            e_i = errors[i]
            r = y[i] * e_i
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0.0)):
                continue
            gap = np.abs(e_i - errors)
            gap[i] = -1.0
            j = int(np.argmax(gap))
            e_j = errors[j]
            a_i_old, a_j_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                low = max(0.0, a_j_old - a_i_old)
                high = min(c, c + a_j_old - a_i_old)
            else:
                low = max(0.0, a_i_old + a_j_old - c)
                high = min(c, a_i_old + a_j_old)
            if low >= high:
                continue
            eta = 2.0 * k_mat[i, j] - k_mat[i, i] - k_mat[j, j]
            if eta >= 0.0:
                continue
            a_j = a_j_old - y[j] * (e_i - e_j) / eta
            a_j = min(high, max(low, a_j))
            if abs(a_j - a_j_old) < 1e-12:
                continue
            a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
            alpha[i], alpha[j] = a_i, a_j
            b1 = bias - e_i - y[i] * (a_i - a_i_old) * k_mat[i, i] - y[j] * (a_j - a_j_old) * k_mat[i, j]
            b2 = bias - e_j - y[i] * (a_i - a_i_old) * k_mat[i, j] - y[j] * (a_j - a_j_old) * k_mat[j, j]
            if 0.0 < a_i < c:
                new_bias = b1
            elif 0.0 < a_j < c:
                new_bias = b2
            else:
                new_bias = (b1 + b2) / 2.0
            errors += (
                y[i] * (a_i - a_i_old) * k_mat[:, i]
                + y[j] * (a_j - a_j_old) * k_mat[:, j]
                + (new_bias - bias)
            )
            bias = new_bias
            changed += 1
        if changed == 0:
            break
    return alpha, bias


def train_svm(matrix, kernel="linear", c=1.0, gamma=0.5, seed=0, tol=1e-3, max_epochs=10000):
    """Soft-margin SVM by deterministic SMO-style dual coordinate ascent.

    The per-epoch visiting order is a fixed permutation derived from the
    seed; the partner index maximizes |E_i - E_j|.  Defaults follow the
    experimental setup: C = 1; the RBF kernel uses gamma = 1/(2 sigma^2)
    with sigma = 1, i.e. gamma = 0.5.
    """
    _check_training(matrix, need_both_labels=True)
    if kernel not in ("linear", "rbf"):
        raise ParameterError(f"unknown SVM kernel {kernel!r}")
    if c <= 0 or gamma <= 0:
        raise ParameterError("C and gamma must be positive")
    norm = fit_minmax(matrix)
    x = norm.apply(matrix.values)
    y = np.array([_SIGN[lab] for lab in matrix.labels])
    order = np.argsort(Stream(derive_key(seed, "svm-order")).uniform(y.size), kind="stable")
    k_mat = _kernel_matrix(kernel, gamma, x, x)
    alpha, bias = _smo(k_mat, y, float(c), float(tol), int(max_epochs), order)
    if kernel == "linear":
        weights = (alpha * y) @ x
        payload = {"kernel": "linear", "c": float(c), "weights": weights.tolist(), "bias": float(bias)}
    else:
        keep = alpha > 1e-12
        payload = {
            "kernel": "rbf",
            "c": float(c),
            "gamma": float(gamma),
            "support_vectors": x[keep].tolist(),
            "coef": (alpha[keep] * y[keep]).tolist(),
            "bias": float(bias),
        }
    kind = "svm-linear" if kernel == "linear" else "svm-rbf"
    return TrainedModel(kind=kind, feature_subset=tuple(matrix.columns), normalization=norm, payload=payload)


def svm_margins(model, matrix):
    """Decision values f(x) on raw feature rows (diagnostics/tests)."""
    x = model.normalization.apply(np.asarray(matrix.values, dtype=np.float64))
    p = model.payload
    if p["kernel"] == "linear":
        return x @ np.asarray(p["weights"]) + p["bias"]
    k = _kernel_matrix("rbf", p["gamma"], x, np.asarray(p["support_vectors"], dtype=np.float64))
    return k @ np.asarray(p["coef"]) + p["bias"]


def _project(model, values, columns):
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    columns = tuple(columns)
    if columns == model.feature_subset:
        return values
    try:
        positions = [columns.index(mid) for mid in model.feature_subset]
    except ValueError as exc:
        raise ValidationError(f"feature vector lacks a metric the model needs: {exc}") from None
    return values[:, positions]


def predict_batch(model, values, columns):
    """Labels for raw feature rows given their column ids."""
    raw = _project(model, values, columns)
    if raw.shape[1] != len(model.feature_subset):
        raise ValidationError("feature vector width does not match the model")
    x = model.normalization.apply(raw)
    if model.kind == "constant":
        return [model.payload["label"]] * x.shape[0]
    if model.kind == "knn":
        rows = np.asarray(model.payload["rows"], dtype=np.float64)
        stored = np.array([lab == "real" for lab in model.payload["labels"]])
        k = model.payload["k"]
        d2 = np.sum((x[:, None, :] - rows[None, :, :]) ** 2, axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes = stored[nearest].sum(axis=1)
        return ["real" if v * 2 > k else "fake" for v in votes]
    if model.kind == "forest":
        trees = model.payload["trees"]
        real_votes = np.zeros(x.shape[0])
        for tree in trees:
            real_votes += _route_tree(tree, x)
        return ["real" if v * 2 > len(trees) else "fake" for v in real_votes]
    if model.kind in ("svm-linear", "svm-rbf"):
        p = model.payload
        if p["kernel"] == "linear":
            f = x @ np.asarray(p["weights"]) + p["bias"]
        else:
            k = _kernel_matrix("rbf", p["gamma"], x, np.asarray(p["support_vectors"], dtype=np.float64))
            f = k @ np.asarray(p["coef"]) + p["bias"]
        return ["real" if v > 0.0 else "fake" for v in f]
    raise ValidationError(f"unknown model kind {model.kind!r}")


def predict(model, vector, columns=None):
    """Label for one raw feature vector (columns default to the model's)."""
    cols = tuple(columns) if columns is not None else model.feature_subset
    return predict_batch(model, np.atleast_2d(vector), cols)[0]
