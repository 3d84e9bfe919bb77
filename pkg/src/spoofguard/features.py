"""Classifier-ready features: quality-difference vectors and normalization.

The per-image feature is the ten-metric vector of the image against its
own 3x3-Gaussian-smoothed copy (the self-referential full-reference
scheme, so no enrollment pair is needed at test time).  The
gradient-domain variant first maps both images through their summed
thresholded gradient maps before computing the six pixel/statistic
metrics (mse, psnr, sc, ed, cd, eyd); the structural metrics stay
plain.

Feature CSVs carry the header
``subject,sample,label,degradation,preproc,th,a_mse,...,j_gms`` with
floats in shortest round-trip decimal form.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import filters, iqm
from .errors import ValidationError
from .imgio import CANONICAL_COLS, CANONICAL_ROWS, load_image, resize_bilinear

PREPROCS = ("plain", "gradient-domain")
GRADIENT_METRICS = ("mse", "psnr", "sc", "ed", "cd", "eyd")
CSV_COLUMNS = tuple(f"{letter}_{mid}" for letter, mid in zip("abcdefghij", iqm.METRIC_IDS))


def parse_subset(spec):
    """Parse a subset spec like "c,i,j", "sc,wash,gms" or "all"."""
    if isinstance(spec, (list, tuple)):
        tokens = list(spec)
    else:
        tokens = [t.strip() for t in str(spec).split(",") if t.strip()]
    if tokens == ["all"]:
        return iqm.METRIC_IDS
    out = []
    for tok in tokens:
        key = iqm.METRIC_LETTERS.get(tok.lower(), tok.lower())
        if key not in iqm.METRIC_IDS:
            raise ValidationError(f"unknown metric id {tok!r}")
        out.append(key)
    if not out:
        raise ValidationError("empty metric subset")
    return tuple(out)


def quality_features(img, th=8.0, preproc="plain"):
    """Ten-element quality-difference vector for one image."""
    if preproc not in PREPROCS:
        raise ValidationError(f"unknown preproc {preproc!r}")
    arr = np.asarray(img, dtype=np.float64)
    blurred = filters.gaussian3x3(arr)
    if preproc == "plain":
        return iqm.compute_all(arr, blurred, th=th)
    grad_ref = filters.gradient_sum_image(arr, th)
    grad_dist = filters.gradient_sum_image(blurred, th)
    return np.array(
        [
            iqm.mse(grad_ref, grad_dist),
            iqm.psnr(grad_ref, grad_dist),
            iqm.sc(grad_ref, grad_dist),
            iqm.ed(grad_ref, grad_dist),
            iqm.cd(grad_ref, grad_dist),
            iqm.eyd(grad_ref, grad_dist),
            iqm.ssim(arr, blurred),
            iqm.essim(arr, blurred),
            iqm.wash(arr, blurred),
            iqm.gms(arr, blurred, th=th),
        ]
    )


def paired_features(ref_img, probe_img, th=8.0):
    """Ten-metric vector of a probe against an explicit reference image."""
    return iqm.compute_all(np.asarray(ref_img, dtype=np.float64),
                           np.asarray(probe_img, dtype=np.float64), th=th)


@dataclass
class FeatureMatrix:
    """Rows of feature values aligned with subject/sample/label metadata."""

    values: np.ndarray
    columns: tuple
    subjects: list
    samples: list
    labels: list
    degradations: list
    preproc: str = "plain"
    th: float = 8.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValidationError("feature matrix shape does not match its columns")
        n = self.values.shape[0]
        for name in ("subjects", "samples", "labels", "degradations"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"feature matrix {name} length != row count")

    def __len__(self):
        return self.values.shape[0]

    def subset_rows(self, indices):
        idx = np.asarray(indices)
        return FeatureMatrix(
            values=self.values[idx],
            columns=self.columns,
            subjects=[self.subjects[i] for i in idx],
            samples=[self.samples[i] for i in idx],
            labels=[self.labels[i] for i in idx],
            degradations=[self.degradations[i] for i in idx],
            preproc=self.preproc,
            th=self.th,
        )

    def align(self, man):
        """Rows reordered to match a manifest's entries exactly."""
        index = {}
        for i in range(len(self)):
            index[(self.subjects[i], self.samples[i], self.labels[i], self.degradations[i])] = i
        rows = []
        for e in man.entries:
            key = (e.subject, e.sample, e.label, e.degradation)
            if key not in index:
                raise ValidationError(f"features missing for manifest entry {key}")
            rows.append(index[key])
        return self.subset_rows(rows)


def select_metrics(matrix, subset):
    """Project onto a metric subset, preserving row order."""
    ids = parse_subset(subset)
    positions = []
    for mid in ids:
        if mid not in matrix.columns:
            raise ValidationError(f"metric {mid!r} not present in feature matrix")
        positions.append(matrix.columns.index(mid))
    out = FeatureMatrix(
        values=matrix.values[:, positions],
        columns=ids,
        subjects=matrix.subjects,
        samples=matrix.samples,
        labels=matrix.labels,
        degradations=matrix.degradations,
        preproc=matrix.preproc,
        th=matrix.th,
    )
    return out


@dataclass(frozen=True)
class MinMaxNorm:
    """Per-column (min, max) learned from training rows only."""

    mins: np.ndarray
    maxs: np.ndarray

    def apply(self, values):
        """Map into [0, 1], clamping; constant columns map to 0."""
        v = np.asarray(values, dtype=np.float64)
        span = self.maxs - self.mins
        safe = np.where(span > 0.0, span, 1.0)
        out = (v - self.mins) / safe
        out = np.where(span > 0.0, out, 0.0)
        return np.clip(out, 0.0, 1.0)


def fit_minmax(matrix_or_values):
    """Learn per-column (min, max) from training rows."""
    values = getattr(matrix_or_values, "values", matrix_or_values)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] == 0:
        raise ValidationError("cannot fit min-max normalization on an empty matrix")
    return MinMaxNorm(mins=values.min(axis=0), maxs=values.max(axis=0))


def _canonicalize(img, resize):
    if resize and img.shape != (CANONICAL_ROWS, CANONICAL_COLS):
        return resize_bilinear(img, CANONICAL_ROWS, CANONICAL_COLS)
    return img


def extract_matrix(man, th=8.0, preproc="plain", threads=1, resize=True):
    """Quality features for every manifest entry, in manifest order."""

    def one(entry):
        img = _canonicalize(load_image(entry.path), resize)
        return quality_features(img, th=th, preproc=preproc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, man.entries))
    else:
        rows = [one(e) for e in man.entries]
    values = np.vstack(rows) if rows else np.zeros((0, len(iqm.METRIC_IDS)))
    return FeatureMatrix(
        values=values,
        columns=iqm.METRIC_IDS,
        subjects=[e.subject for e in man.entries],
        samples=[e.sample for e in man.entries],
        labels=[e.label for e in man.entries],
        degradations=[e.degradation for e in man.entries],
        preproc=preproc,
        th=th,
    )


def gms_matrix(man, th=8.0, variant="mean-root", threads=1, resize=True):
    """Single-column GMS feature matrix (used for threshold sweeps)."""

    def one(entry):
        img = _canonicalize(load_image(entry.path), resize)
        return iqm.gms(img, filters.gaussian3x3(img), th=th, variant=variant)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, man.entries))
    else:
        rows = [one(e) for e in man.entries]
    return FeatureMatrix(
        values=np.array(rows, dtype=np.float64).reshape(-1, 1),
        columns=("gms",),
        subjects=[e.subject for e in man.entries],
        samples=[e.sample for e in man.entries],
        labels=[e.label for e in man.entries],
        degradations=[e.degradation for e in man.entries],
        preproc="plain",
        th=th,
    )


def write_features_csv(matrix, path):
    if matrix.columns != iqm.METRIC_IDS:
        raise ValidationError("feature CSVs store the full ten-metric vector")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("subject", "sample", "label", "degradation", "preproc", "th") + CSV_COLUMNS)
        for i in range(len(matrix)):
            writer.writerow(
                (
                    matrix.subjects[i],
                    matrix.samples[i],
                    matrix.labels[i],
                    matrix.degradations[i],
                    matrix.preproc,
                    repr(matrix.th),
                )
                + tuple(repr(v) for v in matrix.values[i])
            )


def read_features_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"subject", "sample", "label", "degradation", "preproc", "th", *CSV_COLUMNS}
        missing = need - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"{path}: feature CSV missing columns {sorted(missing)}")
        values, subjects, samples, labels, degradations = [], [], [], [], []
        preproc, th = "plain", 8.0
        for row in reader:
            subjects.append(row["subject"])
            samples.append(int(row["sample"]))
            labels.append(row["label"])
            degradations.append(row["degradation"])
            preproc = row["preproc"]
            th = float(row["th"])
            values.append([float(row[c]) for c in CSV_COLUMNS])
    return FeatureMatrix(
        values=np.array(values, dtype=np.float64).reshape(-1, len(CSV_COLUMNS)),
        columns=iqm.METRIC_IDS,
        subjects=subjects,
        samples=samples,
        labels=labels,
        degradations=degradations,
        preproc=preproc,
        th=th,
    )
