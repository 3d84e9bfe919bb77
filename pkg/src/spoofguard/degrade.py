"""Fake-sample generation: reference distortion, attack noises, synthetic corpus.

The three artificial attack noises follow common imaging-toolchain
defaults (blur sigma 2.0, salt-and-pepper density 0.05, speckle
variance 0.04); all randomness comes from the package's SplitMix64
streams so a (spec, seed) pair reproduces byte-identical fakes.

The Bogazici hand dataset is not redistributable, so ``synth_hand``
provides a procedural stand-in: a palm-plus-five-fingers silhouette on
a textured background with stable per-subject shape and small
per-sample jitter, good enough to exercise every metric and the full
classification protocol.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from . import filters
from .errors import ParameterError, ValidationError
from .imgio import CANONICAL_COLS, CANONICAL_ROWS, load_image, round_half_up, save_image
from .manifest import DatasetManifest, ManifestEntry
from .rng import Stream, derive_key

KINDS = ("reference-gaussian", "gaussian-blur", "salt-pepper", "speckle")

DEFAULT_STRENGTH = {
    "reference-gaussian": 0.0,
    "gaussian-blur": 2.0,
    "salt-pepper": 0.05,
    "speckle": 0.04,
}


@dataclass(frozen=True)
class DegradeSpec:
    kind: str
    strength: float = None
    seed: int = 0

    def resolved_strength(self):
        s = DEFAULT_STRENGTH[self.kind] if self.strength is None else self.strength
        if self.kind == "salt-pepper" and not 0.0 < s < 1.0:
            raise ParameterError(f"salt-pepper density must be in (0, 1), got {s}")
        if self.kind in ("gaussian-blur", "speckle") and s <= 0.0:
            raise ParameterError(f"{self.kind} strength must be positive, got {s}")
        return s


def degrade(img, spec):
    """Apply one degradation; pure in (img, spec.kind, strength, seed)."""
    if spec.kind not in KINDS:
        raise ParameterError(f"unknown degradation kind {spec.kind!r}")
    arr = np.asarray(img, dtype=np.float64)
    if spec.kind == "reference-gaussian":
        return filters.gaussian3x3(arr)
    strength = spec.resolved_strength()
    if spec.kind == "gaussian-blur":
        return filters.gaussian_blur(arr, strength)
    stream = Stream(derive_key(spec.seed, "degrade", spec.kind))
    if spec.kind == "salt-pepper":
        u = stream.uniform(arr.size).reshape(arr.shape)
        out = arr.copy()
        out[u < strength / 2.0] = 0.0
        out[(u >= strength / 2.0) & (u < strength)] = 255.0
        return out
    # speckle: multiplicative zero-mean Gaussian with the given variance
    noise = stream.normal(arr.size).reshape(arr.shape) * math.sqrt(strength)
    return np.clip(arr * (1.0 + noise), 0.0, 255.0)


def build_fake_dataset(manifest_in, kinds, out_dir):
    """One fake per (real sample x degrade spec); returns reals + fakes.

    Per-image noise streams are split from each spec's seed and the
    sample identity, so the result is independent of generation order.
    Fake PGMs land in out_dir as {subject}_{sample}_{kind}.pgm.
    """
    if manifest_in.fakes():
        raise ValidationError("build_fake_dataset expects a manifest of real samples only")
    os.makedirs(out_dir, exist_ok=True)
    entries = list(manifest_in.entries)
    for spec in kinds:
        if spec.kind == "reference-gaussian":
            raise ValidationError("reference-gaussian is the Eq-style reference blur, not an attack kind")
        for e in manifest_in.reals():
            child = DegradeSpec(
                kind=spec.kind,
                strength=spec.strength,
                seed=derive_key(spec.seed, e.subject, e.sample),
            )
            fake = degrade(load_image(e.path), child)
            name = f"{e.subject}_{e.sample}_{spec.kind}.pgm"
            save_image(fake, os.path.join(out_dir, name))
            entries.append(
                ManifestEntry(
                    subject=e.subject,
                    sample=e.sample,
                    label="fake",
                    degradation=spec.kind,
                    path=os.path.join(out_dir, name),
                )
            )
    return DatasetManifest(entries)


def _upsample(grid, rows, cols):
    # bilinear, pixel-center aligned; rows interpolated while the array
    # is still narrow, then columns
    def axis(n_in, n_out):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.minimum(np.floor(src).astype(np.intp), n_in - 2)
        return lo, src - lo

    r_lo, r_w = axis(grid.shape[0], rows)
    c_lo, c_w = axis(grid.shape[1], cols)
    top = grid[r_lo, :]
    tall = top + (grid[r_lo + 1, :] - top) * r_w[:, None]
    left = tall[:, c_lo]
    return left + (tall[:, c_lo + 1] - left) * c_w[None, :]


def _value_noise(stream, grid_shape, rows, cols):
    grid = stream.uniform(grid_shape[0] * grid_shape[1]).reshape(grid_shape) * 2.0 - 1.0
    return _upsample(grid, rows, cols)


def _capsule_distance(px, py, ax, ay, bx, by):
    vx = bx - ax
    vy = by - ay
    qx = px - ax
    qy = py - ay
    vv = vx * vx + vy * vy
    t = np.clip((qx * vx + qy * vy) / vv, 0.0, 1.0)
    dx = qx - t * vx
    dy = qy - t * vy
    return np.sqrt(dx * dx + dy * dy)


def synth_hand(subject_seed, sample_index):
    """Procedural 400x300 hand image, deterministic in (subject_seed, sample_index)."""
    rows, cols = CANONICAL_ROWS, CANONICAL_COLS
    shape_rng = Stream(derive_key(subject_seed, "shape"))
    sample_rng = Stream(derive_key(subject_seed, "sample", sample_index))

    u = shape_rng.uniform(16)
    bg_level = 70.0 + 50.0 * u[0]
    slope_x = -30.0 + 60.0 * u[1]
    slope_y = -30.0 + 60.0 * u[2]
    bg_amp = 6.0 + 8.0 * u[3]
    hand_level = 150.0 + 45.0 * u[4]
    hand_amp = 4.0 + 5.0 * u[5]
    cy = 235.0 + 40.0 * u[6]
    cx = 135.0 + 30.0 * u[7]
    ry = 58.0 + 22.0 * u[8]
    rx = 44.0 + 14.0 * u[9]
    finger_scale = 0.95 + 0.25 * u[10]

    angle_jit = shape_rng.uniform(5) * 10.0 - 5.0
    width_jit = shape_rng.uniform(5) * 3.0
    base_angles = np.array([-62.0, -26.0, -4.0, 18.0, 42.0]) + angle_jit
    base_lengths = np.array([0.85, 1.25, 1.45, 1.35, 1.05]) * ry * finger_scale
    base_widths = np.array([13.0, 11.0, 11.5, 11.0, 9.5]) + width_jit

    su = sample_rng.uniform(4)
    shift_x = -5.0 + 10.0 * su[0]
    shift_y = -5.0 + 10.0 * su[1]
    rot = math.radians(-3.0 + 6.0 * su[2])
    fine_amp = 2.0 + 3.0 * su[3]

    # inverse-rotate the query grid around the (shifted) palm centre
    x0 = cx + shift_x
    y0 = cy + shift_y
    cos_r = math.cos(rot)
    sin_r = math.sin(rot)
    px = np.arange(cols, dtype=np.float64)[None, :] - x0
    py = np.arange(rows, dtype=np.float64)[:, None] - y0
    qx = cos_r * px + sin_r * py
    qy = -sin_r * px + cos_r * py

    far = 60.0
    margin = 25.0  # distances beyond this are visually background
    dist = np.full((rows, cols), far)

    def window(qx_lo, qx_hi, qy_lo, qy_hi):
        # q-space rectangle -> enclosing array-index window
        xs, ys = [], []
        for wx in (qx_lo, qx_hi):
            for wy in (qy_lo, qy_hi):
                xs.append(x0 + cos_r * wx - sin_r * wy)
                ys.append(y0 + sin_r * wx + cos_r * wy)
        i0 = max(0, int(math.floor(min(ys))))
        i1 = min(rows, int(math.ceil(max(ys))) + 1)
        j0 = max(0, int(math.floor(min(xs))))
        j1 = min(cols, int(math.ceil(max(xs))) + 1)
        return slice(i0, i1), slice(j0, j1)

    sl = window(-rx - margin, rx + margin, -ry - margin, ry + margin)
    radial = np.sqrt((qx[sl] / rx) ** 2 + (qy[sl] / ry) ** 2)
    np.minimum(dist[sl], (radial - 1.0) * min(rx, ry), out=dist[sl])
    for ang, length, width in zip(base_angles, base_lengths, base_widths):
        theta = math.radians(ang)
        dir_x = math.sin(theta)
        dir_y = -math.cos(theta)
        ax = 0.72 * rx * dir_x
        ay = 0.80 * ry * dir_y
        bx = ax + length * dir_x
        by = ay + length * dir_y
        pad = width + margin
        sl = window(min(ax, bx) - pad, max(ax, bx) + pad, min(ay, by) - pad, max(ay, by) + pad)
        seg = _capsule_distance(qx[sl], qy[sl], ax, ay, bx, by) - width
        np.minimum(dist[sl], seg, out=dist[sl])

    alpha = 1.0 / (1.0 + np.exp(np.clip(dist / 1.5, -60.0, 60.0)))

    bg = (
        bg_level
        + slope_x * (np.arange(cols, dtype=np.float64)[None, :] / cols)
        + slope_y * (np.arange(rows, dtype=np.float64)[:, None] / rows)
        + bg_amp * _value_noise(shape_rng.spawn("bg-texture"), (26, 20), rows, cols)
    )
    hand = (
        hand_level
        - 14.0 * (qy / max(ry, 1.0))
        + hand_amp * _value_noise(shape_rng.spawn("hand-texture"), (50, 38), rows, cols)
    )
    img = bg * (1.0 - alpha) + hand * alpha
    img += fine_amp * sample_rng.normal(rows * cols).reshape(rows, cols)
    return round_half_up(np.clip(img, 0.0, 255.0))
