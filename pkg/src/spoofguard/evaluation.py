"""Experimental protocol: rotation folds, error rates, verification ROC.

Sample i of each subject (both labels) is held out in fold i; FFR/FGR
counts are pooled over the three folds before taking percentages, and
HTER = (FFR + FGR) / 2.  Verification scores follow the
deviation-weighted distance between a subject's enrolled feature means
and a probe vector; FAR counts spoof scores below the threshold, FRR
genuine scores above it.  GAR is reported as 1 - FAR ("paper"
convention, the default) or 1 - FRR ("standard").
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import classify, features
from .errors import DegenerateInputError, ValidationError
from .rng import derive_key

GAR_CONVENTIONS = ("paper", "standard")
N_SAMPLES = 3
HIST_BINS = 100


@dataclass
class EvalCounts:
    ffr_num: int = 0
    ffr_den: int = 0
    fgr_num: int = 0
    fgr_den: int = 0

    def add(self, truth, predicted):
        if truth == "real":
            self.ffr_den += 1
            if predicted == "fake":
                self.ffr_num += 1
        else:
            self.fgr_den += 1
            if predicted == "real":
                self.fgr_num += 1

    def ffr(self):
        return 100.0 * self.ffr_num / self.ffr_den if self.ffr_den else 0.0

    def fgr(self):
        return 100.0 * self.fgr_num / self.fgr_den if self.fgr_den else 0.0

    def hter(self):
        return (self.ffr() + self.fgr()) / 2.0


@dataclass
class EvalReport:
    model_kind: str = ""
    counts: EvalCounts = field(default_factory=EvalCounts)
    fold_counts: list = field(default_factory=list)
    oob_curve: list = None
    roc: list = None
    hist_genuine: list = None
    hist_spoof: list = None
    hist_edges: list = None
    gar_convention: str = "paper"
    config: dict = field(default_factory=dict)

    def to_dict(self):
        data = {
            "model_kind": self.model_kind,
            "counts": {
                "ffr_num": self.counts.ffr_num,
                "ffr_den": self.counts.ffr_den,
                "fgr_num": self.counts.fgr_num,
                "fgr_den": self.counts.fgr_den,
            },
            "ffr": self.counts.ffr(),
            "fgr": self.counts.fgr(),
            "hter": self.counts.hter(),
            "folds": [
                {
                    "ffr_num": c.ffr_num,
                    "ffr_den": c.ffr_den,
                    "fgr_num": c.fgr_num,
                    "fgr_den": c.fgr_den,
                }
                for c in self.fold_counts
            ],
            "gar_convention": self.gar_convention,
            "config": self.config,
        }
        return data


def split_rotation(man):
    """Three train/test index partitions over the manifest's entries.

    Fold r holds out sample r of every subject, both labels; requires
    every subject to contribute exactly 3 real and 3 fake samples of
    one degradation kind.
    """
    kinds = man.fake_kinds()
    if len(kinds) != 1:
        raise ValidationError(f"rotation split needs exactly one fake kind, manifest has {kinds}")
    per_subject = {}
    for e in man.entries:
        per_subject.setdefault(e.subject, []).append(e)
    offenders = []
    for subject, entries in per_subject.items():
        reals = sorted(e.sample for e in entries if e.label == "real")
        fakes = sorted(e.sample for e in entries if e.label == "fake")
        if reals != [1, 2, 3] or fakes != [1, 2, 3]:
            offenders.append(subject)
    if offenders:
        raise ValidationError(f"subjects without 3 real + 3 fake samples: {offenders}")
    samples = np.array([e.sample for e in man.entries])
    folds = []
    for r in range(1, N_SAMPLES + 1):
        test = np.nonzero(samples == r)[0]
        train = np.nonzero(samples != r)[0]
        folds.append((train, test))
    return folds


_HYPER_DEFAULTS = {"k": 3, "n_trees": 50, "c": 1.0, "gamma": 0.5}


def train_for_kind(model_kind, matrix, seed=0, hyper=None):
    """Dispatch a model kind name to its trainer."""
    h = dict(_HYPER_DEFAULTS)
    h.update(hyper or {})
    if model_kind == "knn":
        return classify.train_knn(matrix, k=h["k"])
    if model_kind in ("rf", "forest"):
        return classify.train_forest(matrix, n_trees=h["n_trees"], seed=seed)
    if model_kind == "svm-linear":
        return classify.train_svm(matrix, kernel="linear", c=h["c"], seed=seed)
    if model_kind == "svm-rbf":
        return classify.train_svm(matrix, kernel="rbf", c=h["c"], gamma=h["gamma"], seed=seed)
    if model_kind in ("constant-real", "constant-fake"):
        return classify.train_constant(matrix, model_kind.split("-")[1])
    raise ValidationError(f"unknown model kind {model_kind!r}")


def evaluate(man, model_kind, subset="all", th=8.0, preproc="plain", seed=0,
             features_matrix=None, threads=1, hyper=None, with_oob=False):
    """Rotation-fold classification errors for one degradation condition.

    The manifest must already be filtered to reals plus one fake kind
    (see DatasetManifest.select_condition).  A precomputed full feature
    matrix can be passed to skip extraction; it is aligned to the
    manifest by (subject, sample, label, degradation).
    """
    folds = split_rotation(man)
    if features_matrix is None:
        matrix = features.extract_matrix(man, th=th, preproc=preproc, threads=threads)
    else:
        matrix = features_matrix.align(man)
    projected = features.select_metrics(matrix, subset)
    report = EvalReport(model_kind=model_kind)
    oob_curves = []
    for fold_index, (train_idx, test_idx) in enumerate(folds):
        train = projected.subset_rows(train_idx)
        model = train_for_kind(model_kind, train, seed=derive_key(seed, "fold", fold_index), hyper=hyper)
        predictions = classify.predict_batch(model, projected.values[test_idx], projected.columns)
        fold_counts = EvalCounts()
        for row, predicted in zip(test_idx, predictions):
            truth = projected.labels[row]
            fold_counts.add(truth, predicted)
            report.counts.add(truth, predicted)
        report.fold_counts.append(fold_counts)
        if with_oob and model.kind == "forest":
            oob_curves.append(classify.oob_error_curve(model, train))
    if oob_curves:
        # one curve per report: pointwise mean over the three folds
        n_trees = len(oob_curves[0])
        report.oob_curve = [
            (t + 1, float(np.mean([curve[t][1] for curve in oob_curves])))
            for t in range(n_trees)
        ]
    report.config = {
        "model": model_kind,
        "subset": list(projected.columns),
        "th": th,
        "preproc": preproc,
        "seed": seed,
        "degradation": man.fake_kinds()[0],
        "hyper": {k: v for k, v in (hyper or {}).items()},
    }
    return report


@dataclass(frozen=True)
class VerificationTemplate:
    """Per-subject enrolled feature means plus population deviations."""

    metric_ids: tuple
    means: np.ndarray
    sigmas: np.ndarray


def verify_score(template, probe):
    """Deviation-weighted distance between enrolled means and a probe."""
    v = np.asarray(probe, dtype=np.float64)
    if v.shape != template.means.shape:
        raise ValidationError("probe vector does not match the template's metric subset")
    if np.any(template.sigmas <= 0.0):
        raise DegenerateInputError("template has a zero-deviation metric")
    z = (template.means - v) / template.sigmas
    return float(math.sqrt(np.sum(z * z)))


def build_templates(matrix, enroll_samples=(1, 2)):
    """Per-subject templates from enrolled real rows.

    Sigma is the per-metric standard deviation (ddof=1) over all
    enrollment rows; metrics with zero deviation are dropped and
    reported alongside the templates.
    """
    rows = [
        i
        for i in range(len(matrix))
        if matrix.labels[i] == "real" and matrix.samples[i] in enroll_samples
    ]
    if not rows:
        raise ValidationError("no enrollment rows found")
    values = matrix.values[rows]
    sigmas = np.std(values, axis=0, ddof=1)
    keep = sigmas > 0.0
    dropped = [mid for mid, ok in zip(matrix.columns, keep) if not ok]
    if not keep.any():
        raise DegenerateInputError("every metric is constant over the enrollment population")
    metric_ids = tuple(mid for mid, ok in zip(matrix.columns, keep) if ok)
    templates = {}
    for subject in dict.fromkeys(matrix.subjects):
        subject_rows = [i for i in rows if matrix.subjects[i] == subject]
        if subject_rows:
            templates[subject] = VerificationTemplate(
                metric_ids=metric_ids,
                means=matrix.values[subject_rows][:, keep].mean(axis=0),
                sigmas=sigmas[keep],
            )
    return templates, dropped, keep


def verification_scores(matrix, spoof_kind, enroll_samples=(1, 2), probe_sample=3):
    """Genuine and spoof score lists for the hold-out probe sample."""
    templates, _, keep = build_templates(matrix, enroll_samples)
    genuine, spoof = [], []
    for i in range(len(matrix)):
        if matrix.samples[i] != probe_sample:
            continue
        subject = matrix.subjects[i]
        if subject not in templates:
            continue
        probe = matrix.values[i][keep]
        if matrix.labels[i] == "real":
            genuine.append(verify_score(templates[subject], probe))
        elif matrix.degradations[i] == spoof_kind:
            spoof.append(verify_score(templates[subject], probe))
    return genuine, spoof


def roc_and_histograms(genuine_scores, spoof_scores, gar_convention="paper"):
    """ROC points over the union of observed scores, plus 100-bin histograms.

    FAR(t) = fraction of spoof scores strictly below t; FRR(t) =
    fraction of genuine scores strictly above t.
    """
    if gar_convention not in GAR_CONVENTIONS:
        raise ValidationError(f"unknown GAR convention {gar_convention!r}")
    gen = np.asarray(genuine_scores, dtype=np.float64)
    spf = np.asarray(spoof_scores, dtype=np.float64)
    if gen.size == 0 or spf.size == 0:
        raise ValidationError("both score populations must be nonempty")
    thresholds = np.unique(np.concatenate([gen, spf]))
    points = []
    for t in thresholds:
        far = float(np.mean(spf < t))
        frr = float(np.mean(gen > t))
        gar = 1.0 - far if gar_convention == "paper" else 1.0 - frr
        points.append((float(t), far, frr, gar))
    top = float(max(gen.max(), spf.max()))
    if top <= 0.0:
        top = 1.0
    hist_gen, edges = np.histogram(gen, bins=HIST_BINS, range=(0.0, top))
    hist_spf, _ = np.histogram(spf, bins=HIST_BINS, range=(0.0, top))
    return points, hist_gen.tolist(), hist_spf.tolist(), edges.tolist()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def emit_report(report, out_dir):
    """Write report.json plus roc/hist/oob CSV side files."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    if report.roc is not None:
        _write_csv(
            os.path.join(out_dir, "roc.csv"),
            ("threshold", "far", "frr", "gar"),
            report.roc,
        )
    if report.hist_genuine is not None:
        edges = report.hist_edges
        for name, counts in (("hist_genuine.csv", report.hist_genuine),
                             ("hist_spoof.csv", report.hist_spoof)):
            _write_csv(
                os.path.join(out_dir, name),
                ("bin_lo", "bin_hi", "count"),
                [(edges[i], edges[i + 1], counts[i]) for i in range(len(counts))],
            )
    if report.oob_curve is not None:
        _write_csv(os.path.join(out_dir, "oob.csv"), ("n_trees", "oob_error"), report.oob_curve)
