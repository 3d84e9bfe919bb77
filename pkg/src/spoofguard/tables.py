"""Synthetic-corpus experiment driver: builds every summary table.

Emits, under the output directory:

    corpus/            real + fake PGMs and manifest.csv
    tables/per_metric.csv      each metric alone, 4 classifiers
    tables/th_sweep.csv        GMS at th = 1..32, both definitions
    tables/combinations.csv    metric subsets anchored on GMS
    tables/preproc_gain.csv    plain vs gradient-domain preprocessing
    tables/per_noise.csv       each attack noise, GMS-only and all-ten
    config.json                run configuration echo

All content is deterministic in (seed, subjects, samples, threads); the
output directory path itself never appears inside the artifacts, so two
runs into different directories are byte-identical.
"""

import json
import os

from .degrade import DegradeSpec, build_fake_dataset, synth_hand
from .evaluation import evaluate
from .features import GRADIENT_METRICS, extract_matrix, gms_matrix, write_features_csv
from .imgio import save_image
from .iqm import METRIC_IDS
from .manifest import DatasetManifest, ManifestEntry, write_manifest
from .rng import derive_key

CLASSIFIERS = ("knn", "rf", "svm-linear", "svm-rbf")
ATTACK_KINDS = ("gaussian-blur", "salt-pepper", "speckle")
DEFAULT_CONDITION = "salt-pepper"
COMBINATIONS = (
    ("psnr", "gms"),
    ("sc", "gms"),
    ("ssim", "gms"),
    ("essim", "gms"),
    ("wash", "gms"),
    ("sc", "ssim", "gms"),
    ("sc", "essim", "gms"),
    ("sc", "wash", "gms"),
    ("sc", "essim", "wash", "gms"),
    METRIC_IDS,
)


def subject_ids(count):
    return [f"s{i + 1:03d}" for i in range(count)]


def synth_corpus(out_dir, subjects, samples=3, seed=0):
    """Write the procedural real-hand corpus; returns its manifest."""
    real_dir = os.path.join(out_dir, "real")
    os.makedirs(real_dir, exist_ok=True)
    entries = []
    for sid in subject_ids(subjects):
        subject_seed = derive_key(seed, "subject", sid)
        for sample in range(1, samples + 1):
            path = os.path.join(real_dir, f"{sid}_{sample}.pgm")
            save_image(synth_hand(subject_seed, sample), path)
            entries.append(
                ManifestEntry(subject=sid, sample=sample, label="real", degradation="none", path=path)
            )
    return DatasetManifest(entries)


def build_corpus(out_dir, subjects, samples=3, seed=0, kinds=ATTACK_KINDS):
    """Reals plus one fake per (real, attack kind); writes manifest.csv."""
    reals = synth_corpus(out_dir, subjects, samples, seed)
    specs = [DegradeSpec(kind=k, seed=derive_key(seed, "attack", k)) for k in kinds]
    full = build_fake_dataset(reals, specs, os.path.join(out_dir, "fake"))
    write_manifest(full, os.path.join(out_dir, "manifest.csv"))
    return full


def _cell(man, clf, subset, seed, tag, features_matrix, hyper=None):
    report = evaluate(
        man,
        clf,
        subset=subset,
        seed=derive_key(seed, "table", tag, clf),
        features_matrix=features_matrix,
        hyper=hyper,
    )
    return report.counts.ffr(), report.counts.fgr(), report.counts.hter()


def _write_table(path, key_header, rows):
    header = list(key_header)
    for clf in CLASSIFIERS:
        header += [f"{clf}_ffr", f"{clf}_fgr", f"{clf}_hter"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def reproduce_tables(out_dir, subjects=150, samples=3, seed=0, threads=1,
                     condition=DEFAULT_CONDITION):
    """Build the corpus and emit every table CSV (see module docstring)."""
    corpus_dir = os.path.join(out_dir, "corpus")
    tables_dir = os.path.join(out_dir, "tables")
    os.makedirs(tables_dir, exist_ok=True)
    full = build_corpus(corpus_dir, subjects, samples, seed)
    cond = full.select_condition(condition)

    plain = extract_matrix(full, th=8.0, preproc="plain", threads=threads)
    write_features_csv(plain, os.path.join(out_dir, "features_plain.csv"))
    grad = extract_matrix(cond, th=8.0, preproc="gradient-domain", threads=threads)

    rows = []
    for mid in METRIC_IDS:
        row = [mid]
        for clf in CLASSIFIERS:
            row += list(_cell(cond, clf, (mid,), seed, f"per-metric/{mid}", plain))
        rows.append(row)
    _write_table(os.path.join(tables_dir, "per_metric.csv"), ["metric"], rows)

    rows = []
    for variant in ("mean-root", "similarity-ratio"):
        for p in range(6):
            th = float(2**p)
            sweep = gms_matrix(cond, th=th, variant=variant, threads=threads)
            row = [variant, int(th)]
            for clf in CLASSIFIERS:
                row += list(_cell(cond, clf, ("gms",), seed, f"th-sweep/{variant}/{p}", sweep))
            rows.append(row)
    _write_table(os.path.join(tables_dir, "th_sweep.csv"), ["variant", "th"], rows)

    rows = []
    for combo in COMBINATIONS:
        row = ["+".join(combo)]
        for clf in CLASSIFIERS:
            row += list(_cell(cond, clf, combo, seed, "combo/" + "+".join(combo), plain))
        rows.append(row)
    _write_table(os.path.join(tables_dir, "combinations.csv"), ["metrics"], rows)

    rows = []
    for mid in GRADIENT_METRICS:
        for preproc, matrix in (("plain", plain), ("gradient-domain", grad)):
            row = [mid, preproc]
            for clf in CLASSIFIERS:
                row += list(_cell(cond, clf, (mid,), seed, f"preproc/{mid}/{preproc}", matrix))
            rows.append(row)
    _write_table(os.path.join(tables_dir, "preproc_gain.csv"), ["metric", "preproc"], rows)

    rows = []
    for kind in ATTACK_KINDS:
        kind_man = full.select_condition(kind)
        for name, subset in (("gms", ("gms",)), ("all", METRIC_IDS)):
            row = [kind, name]
            for clf in CLASSIFIERS:
                row += list(_cell(kind_man, clf, subset, seed, f"noise/{kind}/{name}", plain))
            rows.append(row)
    _write_table(os.path.join(tables_dir, "per_noise.csv"), ["noise", "feature_set"], rows)

    config = {
        "subcommand": "report",
        "seed": seed,
        "subjects": subjects,
        "samples": samples,
        "threads": threads,
        "condition": condition,
        "attack_kinds": list(ATTACK_KINDS),
        "th": 8.0,
    }
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(config, fh, indent=1)
        fh.write("\n")
