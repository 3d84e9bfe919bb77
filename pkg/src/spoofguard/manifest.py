"""Dataset manifest: the subject/sample/label/degradation catalog.

Interchange format is CSV with header ``subject,sample,label,degradation,path``.
Real samples carry degradation "none"; fake samples name the condition
that produced them ("natural" for externally captured spoofs, or one of
the artificial noise kinds).
"""

import csv
import os
from dataclasses import dataclass, replace

from .errors import ValidationError

LABELS = ("real", "fake")
DEGRADATIONS = ("none", "natural", "gaussian-blur", "salt-pepper", "speckle")
FAKE_KINDS = ("natural", "gaussian-blur", "salt-pepper", "speckle")
CSV_HEADER = ("subject", "sample", "label", "degradation", "path")


@dataclass(frozen=True)
class ManifestEntry:
    subject: str
    sample: int
    label: str
    degradation: str
    path: str


@dataclass
class DatasetManifest:
    entries: list

    def __post_init__(self):
        self.validate()

    def validate(self):
        seen = set()
        for e in self.entries:
            if e.label not in LABELS:
                raise ValidationError(f"manifest: bad label {e.label!r} for {e.subject}/{e.sample}")
            if e.degradation not in DEGRADATIONS:
                raise ValidationError(f"manifest: bad degradation {e.degradation!r}")
            if e.label == "real" and e.degradation != "none":
                raise ValidationError(f"manifest: real sample {e.subject}/{e.sample} must have degradation none")
            if e.label == "fake" and e.degradation == "none":
                raise ValidationError(f"manifest: fake sample {e.subject}/{e.sample} needs a degradation kind")
            key = (e.subject, e.sample, e.label, e.degradation)
            if key in seen:
                raise ValidationError(f"manifest: duplicate entry {key}")
            seen.add(key)

    def __len__(self):
        return len(self.entries)

    def reals(self):
        return [e for e in self.entries if e.label == "real"]

    def fakes(self, kind=None):
        return [e for e in self.entries if e.label == "fake" and (kind is None or e.degradation == kind)]

    def fake_kinds(self):
        kinds = []
        for e in self.entries:
            if e.label == "fake" and e.degradation not in kinds:
                kinds.append(e.degradation)
        return kinds

    def subjects(self):
        out = []
        for e in self.entries:
            if e.subject not in out:
                out.append(e.subject)
        return out

    def select_condition(self, kind):
        """Reals plus the fakes of one degradation kind."""
        if kind not in FAKE_KINDS:
            raise ValidationError(f"unknown degradation kind {kind!r}")
        kept = [e for e in self.entries if e.label == "real" or e.degradation == kind]
        return DatasetManifest(kept)

    def restrict_subjects(self, subjects):
        wanted = set(subjects)
        return DatasetManifest([e for e in self.entries if e.subject in wanted])

    def with_prefix(self, prefix):
        """Rewritten with paths joined under a directory prefix."""
        return DatasetManifest(
            [replace(e, path=os.path.join(prefix, e.path)) for e in self.entries]
        )


def read_manifest(path):
    """Read a manifest CSV; relative image paths resolve against its directory."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"{path}: manifest is missing columns {sorted(missing)}")
        for row in reader:
            img = row["path"]
            if not os.path.isabs(img):
                img = os.path.join(base, img)
            entries.append(
                ManifestEntry(
                    subject=row["subject"],
                    sample=int(row["sample"]),
                    label=row["label"],
                    degradation=row["degradation"],
                    path=img,
                )
            )
    return DatasetManifest(entries)


def write_manifest(manifest, path):
    """Write a manifest CSV with image paths relative to its directory."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for e in manifest.entries:
            writer.writerow(
                (e.subject, e.sample, e.label, e.degradation, os.path.relpath(e.path, base))
            )
