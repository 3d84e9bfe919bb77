"""Command-line entry point: the whole pipeline as one binary.

Exit codes: 0 success, 1 validation error (one-line diagnostic on
stderr), 2 I/O error.  Every image-consuming subcommand resizes its
inputs to the canonical 400x300 unless --no-resize is given.  The
default seed comes from SPOOFGUARD_SEED when set.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import classify, features, filters, iqm, tables
from .degrade import DegradeSpec, KINDS, build_fake_dataset, synth_hand
from .errors import ValidationError
from .evaluation import evaluate, emit_report, roc_and_histograms, verification_scores, EvalReport
from .imgio import load_image, resize_bilinear, save_image, CANONICAL_COLS, CANONICAL_ROWS
from .manifest import FAKE_KINDS, read_manifest, write_manifest
from .rng import derive_key


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _default_seed():
    return int(os.environ.get("SPOOFGUARD_SEED", "0"))


def _threads(value):
    if value == "auto":
        return os.cpu_count() or 1
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be positive or 'auto'")
    return n


def _load(path, resize):
    img = load_image(path)
    if resize and img.shape != (CANONICAL_ROWS, CANONICAL_COLS):
        img = resize_bilinear(img, CANONICAL_ROWS, CANONICAL_COLS)
    return img


def _add_common(sub, seed=True, threads=False, resize=False):
    if seed:
        sub.add_argument("--seed", type=int, default=_default_seed(),
                         help="master seed (default: SPOOFGUARD_SEED or 0)")
    if threads:
        sub.add_argument("--threads", type=_threads, default=1,
                         help="worker threads, or 'auto' (results are schedule-independent)")
    if resize:
        sub.add_argument("--no-resize", action="store_true",
                         help="skip resizing inputs to the canonical 400x300")


def build_parser():
    parser = _Parser(prog="spoofguard", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", parents=[], help="emit the synthetic stand-in corpus")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = subs.add_parser("degrade", help="degrade one image, or every real in a manifest")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--strength", type=float, default=None)
    p.add_argument("input", help="image file, or a manifest CSV for dataset mode")
    p.add_argument("output", help="output image, or output directory for dataset mode")
    _add_common(p, resize=True)

    p = subs.add_parser("extract", help="extract quality features to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--th", type=float, default=8.0)
    p.add_argument("--preproc", choices=features.PREPROCS, default="plain")
    p.add_argument("--out", required=True)
    _add_common(p, seed=False, threads=True, resize=True)

    p = subs.add_parser("train", help="train a classifier on a feature CSV")
    p.add_argument("--model", choices=("knn", "rf", "svm-linear", "svm-rbf"), required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--subset", default="all", help="metric ids or letters, e.g. c,i,j")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--trees", type=int, default=50)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--out", required=True)
    _add_common(p)

    p = subs.add_parser("predict", help="classify feature rows with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)

    p = subs.add_parser("eval", help="rotation-fold FFR/FGR/HTER evaluation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", choices=("knn", "rf", "svm-linear", "svm-rbf",
                                       "constant-real", "constant-fake"), required=True)
    p.add_argument("--subset", default="all")
    p.add_argument("--th", type=float, default=8.0)
    p.add_argument("--preproc", choices=features.PREPROCS, default="plain")
    p.add_argument("--noise", choices=FAKE_KINDS, default=None,
                   help="fake kind to evaluate (default: the single kind in the manifest)")
    p.add_argument("--out", required=True)
    _add_common(p, threads=True)

    p = subs.add_parser("verify", help="template verification: ROC and histograms")
    p.add_argument("--manifest", required=True)
    p.add_argument("--spoof-kind", choices=FAKE_KINDS, required=True)
    p.add_argument("--subset", default="all")
    p.add_argument("--th", type=float, default=8.0)
    p.add_argument("--preproc", choices=features.PREPROCS, default="plain")
    p.add_argument("--gar-convention", choices=("paper", "standard"), default="paper")
    p.add_argument("--paired", action="store_true",
                   help="score probes against an enrolled reference image pairing")
    p.add_argument("--out", required=True)
    _add_common(p, threads=True)

    p = subs.add_parser("gradmap", help="binary thresholded-gradient map of one image")
    p.add_argument("--th", type=float, required=True)
    p.add_argument("--cutoff", type=float, default=1.0)
    p.add_argument("input")
    p.add_argument("output")
    _add_common(p, seed=False, resize=True)

    p = subs.add_parser("metric", help="print one metric of an image pair")
    p.add_argument("--name", required=True)
    p.add_argument("--th", type=float, default=8.0)
    p.add_argument("ref")
    p.add_argument("dist")
    _add_common(p, seed=False, resize=True)

    p = subs.add_parser("metrics-all", help="print the ten-metric vector as CSV")
    p.add_argument("--th", type=float, default=8.0)
    p.add_argument("ref")
    p.add_argument("dist")
    _add_common(p, seed=False, resize=True)

    p = subs.add_parser("report", help="reproduce the summary tables on the synthetic corpus")
    p.add_argument("--subjects", type=int, default=150)
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--condition", choices=FAKE_KINDS, default=tables.DEFAULT_CONDITION)
    p.add_argument("--out", required=True)
    _add_common(p, threads=True)

    return parser


def _cmd_synth(args):
    man = tables.synth_corpus(args.out, args.subjects, args.samples, args.seed)
    write_manifest(man, os.path.join(args.out, "manifest.csv"))
    print(f"wrote {len(man)} real samples under {args.out}")


def _cmd_degrade(args):
    spec = DegradeSpec(kind=args.kind, strength=args.strength, seed=args.seed)
    if args.input.endswith(".csv"):
        man = read_manifest(args.input)
        out = build_fake_dataset(man, [spec], args.output)
        write_manifest(out, os.path.join(args.output, "manifest.csv"))
        print(f"wrote {len(out.fakes())} fakes under {args.output}")
        return
    from .degrade import degrade as degrade_one

    img = _load(args.input, not args.no_resize)
    save_image(degrade_one(img, spec), args.output)


def _cmd_extract(args):
    man = read_manifest(args.manifest)
    matrix = features.extract_matrix(man, th=args.th, preproc=args.preproc,
                                     threads=args.threads, resize=not args.no_resize)
    features.write_features_csv(matrix, args.out)
    print(f"wrote {len(matrix)} feature rows to {args.out}")


def _hyper(args):
    return {"k": args.k, "n_trees": args.trees, "c": args.c, "gamma": args.gamma}


def _cmd_train(args):
    from .evaluation import train_for_kind

    matrix = features.read_features_csv(args.features)
    projected = features.select_metrics(matrix, args.subset)
    model = train_for_kind(args.model, projected, seed=args.seed, hyper=_hyper(args))
    classify.save_model(model, args.out)
    print(f"wrote {args.model} model to {args.out}")


def _cmd_predict(args):
    model = classify.load_model(args.model)
    matrix = features.read_features_csv(args.features)
    labels = classify.predict_batch(model, matrix.values, matrix.columns)
    for i, label in enumerate(labels):
        print(f"{matrix.subjects[i]},{matrix.samples[i]},{label}")


def _cmd_eval(args):
    man = read_manifest(args.manifest)
    kinds = man.fake_kinds()
    noise = args.noise or (kinds[0] if len(kinds) == 1 else None)
    if noise is None:
        raise ValidationError(f"manifest holds several fake kinds {kinds}; pass --noise")
    report = evaluate(
        man.select_condition(noise),
        args.model,
        subset=args.subset,
        th=args.th,
        preproc=args.preproc,
        seed=args.seed,
        threads=args.threads,
        with_oob=args.model == "rf",
    )
    report.config["threads"] = args.threads
    emit_report(report, args.out)
    print(f"FFR {report.counts.ffr():.2f}%  FGR {report.counts.fgr():.2f}%  "
          f"HTER {report.counts.hter():.2f}%  -> {args.out}")


def _paired_matrix(man, matrix, th):
    # probe features against each subject's first enrolled real image
    refs = {}
    for e in man.entries:
        if e.label == "real" and e.sample == 1:
            refs[e.subject] = _load(e.path, True)
    values = np.array(
        [
            features.paired_features(refs[e.subject], _load(e.path, True), th=th)
            for e in man.entries
        ]
    )
    return features.FeatureMatrix(
        values=values,
        columns=iqm.METRIC_IDS,
        subjects=[e.subject for e in man.entries],
        samples=[e.sample for e in man.entries],
        labels=[e.label for e in man.entries],
        degradations=[e.degradation for e in man.entries],
        preproc="paired",
        th=th,
    )


def _cmd_verify(args):
    man = read_manifest(args.manifest)
    cond = man.select_condition(args.spoof_kind)
    if args.paired:
        matrix = _paired_matrix(cond, None, args.th)
    else:
        matrix = features.extract_matrix(cond, th=args.th, preproc=args.preproc,
                                         threads=args.threads)
    matrix = features.select_metrics(matrix, args.subset)
    genuine, spoof = verification_scores(matrix, args.spoof_kind)
    points, hist_gen, hist_spf, edges = roc_and_histograms(genuine, spoof, args.gar_convention)
    report = EvalReport(
        model_kind="verification",
        roc=points,
        hist_genuine=hist_gen,
        hist_spoof=hist_spf,
        hist_edges=edges,
        gar_convention=args.gar_convention,
        config={
            "subcommand": "verify",
            "spoof_kind": args.spoof_kind,
            "subset": list(matrix.columns),
            "th": args.th,
            "preproc": "paired" if args.paired else args.preproc,
            "seed": args.seed,
            "gar_convention": args.gar_convention,
        },
    )
    emit_report(report, args.out)
    print(f"{len(genuine)} genuine / {len(spoof)} spoof scores -> {args.out}")


def _cmd_gradmap(args):
    img = _load(args.input, not args.no_resize)
    maps = filters.thresholded_gradients(img, args.th)
    bits = filters.binarize_gradient(maps, args.cutoff)
    save_image(np.where(bits, 255.0, 0.0), args.output)


def _cmd_metric(args):
    name, func = iqm.metric_by_name(args.name)
    ref = _load(args.ref, not args.no_resize)
    dist = _load(args.dist, not args.no_resize)
    value = func(ref, dist, th=args.th) if name == "gms" else func(ref, dist)
    print(repr(float(value)))


def _cmd_metrics_all(args):
    ref = _load(args.ref, not args.no_resize)
    dist = _load(args.dist, not args.no_resize)
    vec = iqm.compute_all(ref, dist, th=args.th)
    print(",".join(repr(float(v)) for v in vec))


def _cmd_report(args):
    tables.reproduce_tables(args.out, subjects=args.subjects, samples=args.samples,
                            seed=args.seed, threads=args.threads, condition=args.condition)
    print(f"wrote corpus and tables under {args.out}")


_COMMANDS = {
    "synth": _cmd_synth,
    "degrade": _cmd_degrade,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "eval": _cmd_eval,
    "verify": _cmd_verify,
    "gradmap": _cmd_gradmap,
    "metric": _cmd_metric,
    "metrics-all": _cmd_metrics_all,
    "report": _cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"spoofguard: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"spoofguard: I/O error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
