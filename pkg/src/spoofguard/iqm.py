"""The ten full-reference image quality metrics.

Each metric is a pure function of (reference, distorted); both images
must share dimensions.  Metric ids, in the canonical (a)-(j) report
order:

    mse, psnr, sc, ed, cd, eyd, ssim, essim, wash, gms

Conventions worth knowing:
  * mse is the raw sum of squared differences (no 1/NM factor); the
    downstream min-max normalization makes the scale immaterial.
  * psnr returns the cap value 100.0 when mse is zero, and the floor
    -100.0 for an all-zero reference, so feature vectors stay finite.
  * gms defaults to the scalar "mean-root" form at th = 8; the
    per-pixel reading and the similarity-ratio form are selectable via
    ``variant``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import filters
from .errors import DegenerateInputError, ParameterError, ValidationError
from .imgio import round_half_up

METRIC_IDS = ("mse", "psnr", "sc", "ed", "cd", "eyd", "ssim", "essim", "wash", "gms")
METRIC_LETTERS = dict(zip("abcdefghij", METRIC_IDS))

PSNR_CAP = 100.0
PSNR_FLOOR = -100.0
EPS = 1e-5
WASH_GAMMA = 0.8

_LAPLACE4 = ((0, 1, 0), (1, -4, 1), (0, 1, 0))


@dataclass(frozen=True)
class SsimParams:
    """Exponents, stabilizers and window size of the SSIM computation."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    c1: float = (0.01 * 255.0) ** 2
    c2: float = (0.03 * 255.0) ** 2
    c3: float = (0.03 * 255.0) ** 2 / 2.0
    window: int = 8


DEFAULT_SSIM = SsimParams()


def _check_pair(ref, dist):
    a = np.asarray(ref, dtype=np.float64)
    b = np.asarray(dist, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"image dimensions differ: {a.shape} vs {b.shape}")
    if a.ndim != 2 or a.shape[0] < 2 or a.shape[1] < 2:
        raise ValidationError(f"expected 2-D images of at least 2x2, got {a.shape}")
    return a, b


def mse(ref, dist):
    """Sum of squared pixel differences (Eq. form without 1/NM)."""
    a, b = _check_pair(ref, dist)
    d = a - b
    return float(np.sum(d * d))


def psnr(ref, dist):
    """10 log10(max(I^2) / MSE), capped at 100.0 when MSE is zero."""
    a, b = _check_pair(ref, dist)
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    peak = float(np.max(a * a))
    if peak == 0.0:
        return PSNR_FLOOR
    return float(10.0 * math.log10(peak / err))


def sc(ref, dist):
    """Structural content: sum(I^2) / sum(Ibar^2)."""
    a, b = _check_pair(ref, dist)
    denom = float(np.sum(b * b))
    if denom == 0.0:
        raise DegenerateInputError("structural content undefined: distorted image is all zero")
    return float(np.sum(a * a)) / denom


def _edge_difference(edges_ref, edges_dist):
    return float(np.mean(edges_ref != edges_dist))


def ed(ref, dist, cutoff_factor=4.0):
    """Mean absolute difference of the two Sobel binary edge maps."""
    a, b = _check_pair(ref, dist)
    return _edge_difference(
        filters.sobel_edges(a, cutoff_factor), filters.sobel_edges(b, cutoff_factor)
    )


def _corner_difference(n_ref, n_dist):
    if n_ref == 0 and n_dist == 0:
        return 0.0
    return abs(n_ref - n_dist) / max(n_ref, n_dist)


def cd(ref, dist):
    """Relative difference of Harris corner counts; 0 when both are zero."""
    a, b = _check_pair(ref, dist)
    return _corner_difference(filters.harris_corners(a), filters.harris_corners(b))


def entropy(img):
    """Shannon entropy (bits) of the rounded-intensity histogram."""
    arr = np.asarray(img, dtype=np.float64)
    values = round_half_up(arr).astype(np.int64).ravel()
    counts = np.bincount(values, minlength=256)
    p = counts[counts > 0] / values.size
    return float(-np.sum(p * np.log2(p)))


def eyd(ref, dist):
    """Relative entropy difference; 0 when both entropies are zero."""
    a, b = _check_pair(ref, dist)
    ha = entropy(a)
    hb = entropy(b)
    top = abs(ha - hb)
    bottom = max(ha, hb)
    if bottom == 0.0:
        return 0.0
    return top / bottom


def _window_sums(arr, w):
    # summed-area table; windows anchored top-left, stride 1
    n, m = arr.shape
    sat = np.zeros((n + 1, m + 1))
    np.cumsum(arr, axis=0, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    return sat[w:, w:] - sat[:-w, w:] - sat[w:, :-w] + sat[:-w, :-w]


def ssim(ref, dist, params=DEFAULT_SSIM):
    """Mean structural similarity over stride-1 square windows.

    Components per window: luminance l, contrast c and structure s in
    their standard ratio forms, combined as l**alpha * c**beta *
    s**gamma.  Window statistics use the population (1/n) convention.
    """
    a, b = _check_pair(ref, dist)
    w = params.window
    if a.shape[0] < w or a.shape[1] < w:
        raise ValidationError(f"image {a.shape} smaller than SSIM window {w}")
    count = float(w * w)
    mu1 = _window_sums(a, w) / count
    mu2 = _window_sums(b, w) / count
    v1 = np.maximum(_window_sums(a * a, w) / count - mu1 * mu1, 0.0)
    v2 = np.maximum(_window_sums(b * b, w) / count - mu2 * mu2, 0.0)
    cov = _window_sums(a * b, w) / count - mu1 * mu2
    lum = (2.0 * mu1 * mu2 + params.c1) / (mu1 * mu1 + mu2 * mu2 + params.c1)
    sd_prod = np.sqrt(v1 * v2)
    con = (2.0 * sd_prod + params.c2) / (v1 + v2 + params.c2)
    struct = (cov + params.c3) / (sd_prod + params.c3)
    return float(np.mean(lum**params.alpha * con**params.beta * struct**params.gamma))


def _strength_similarity(e_ref, e_dist):
    num = 2.0 * e_ref * e_dist + EPS
    den = e_ref * e_ref + e_dist * e_dist + EPS
    return float(np.mean(num / den))


def essim(ref, dist):
    """Edge-strength similarity from the directional Scharr strength maps."""
    a, b = _check_pair(ref, dist)
    return _strength_similarity(filters.scharr_edge_strength(a), filters.scharr_edge_strength(b))


def _band_energy(band):
    return float(np.sum(band * band))


def _sharpness(bands):
    detail = sum(_band_energy(x) for x in bands.details)
    total = detail + _band_energy(bands.ll)
    if total == 0.0:
        return 0.0
    return detail / total


def _zero_crossings(band):
    lap = filters.correlate3x3(band, _LAPLACE4)
    s = np.sign(lap)
    mask = np.zeros(band.shape, dtype=bool)
    mask[:, :-1] |= s[:, :-1] * s[:, 1:] < 0
    mask[:-1, :] |= s[:-1, :] * s[1:, :] < 0
    return mask


def zero_crossing_similarity(ne_ref, ne_dist):
    """Edge structural similarity of two zero-crossing masks (Eq. 11 ratio)."""
    n_ref = int(np.sum(ne_ref))
    n_dist = int(np.sum(ne_dist))
    if n_ref == 0 and n_dist == 0:
        return 1.0
    if n_ref == 0 or n_dist == 0:
        return 0.0
    inter = int(np.sum(ne_ref & ne_dist))
    return inter / math.sqrt(float(n_ref) * float(n_dist))


def wash(ref, dist):
    """Wavelet sharpness + zero-crossing quality.

    Sharpness ratios of the single-level Haar bands feed the
    similarity term; zero-crossing masks (Laplacian sign changes) of
    the three detail bands feed the structural product; the total is
    upsilon**0.8 + Z**0.2.
    """
    a, b = _check_pair(ref, dist)
    bands_ref = filters.haar_decompose(a)
    bands_dist = filters.haar_decompose(b)
    lam_ref = _sharpness(bands_ref)
    lam_dist = _sharpness(bands_dist)
    upsilon = (2.0 * lam_ref * lam_dist + EPS) / (lam_ref * lam_ref + lam_dist * lam_dist + EPS)
    z = 1.0
    for band_ref, band_dist in zip(bands_ref.details, bands_dist.details):
        z *= zero_crossing_similarity(_zero_crossings(band_ref), _zero_crossings(band_dist))
    return float(upsilon**WASH_GAMMA + z ** (1.0 - WASH_GAMMA))


GMS_VARIANTS = ("mean-root", "per-pixel-root", "similarity-ratio")


def gms(ref, dist, th=8.0, variant="mean-root"):
    """Thresholded gradient magnitude similarity.

    mean-root (default): sqrt(dGx + dGy) / NM with dGx, dGy the summed
    squared differences of the thresholded gradient maps; zero for
    identical images and exactly proportional to 1/th for th = 2**p.
    per-pixel-root: mean over pixels of the rootled per-pixel squared
    differences.  similarity-ratio: the stabilized ratio form
    (2 dGx dGy + eps) / (NM (dGx^2 + dGy^2 + eps)).
    """
    a, b = _check_pair(ref, dist)
    if variant not in GMS_VARIANTS:
        raise ParameterError(f"unknown gms variant {variant!r}")
    maps_ref = filters.thresholded_gradients(a, th)
    maps_dist = filters.thresholded_gradients(b, th)
    nm = a.shape[0] * a.shape[1]
    ddx = maps_ref.gx - maps_dist.gx
    ddy = maps_ref.gy - maps_dist.gy
    if variant == "per-pixel-root":
        return float(np.sum(np.sqrt(ddx * ddx + ddy * ddy)) / nm)
    dgx = float(np.sum(ddx * ddx))
    dgy = float(np.sum(ddy * ddy))
    if variant == "mean-root":
        return math.sqrt(dgx + dgy) / nm
    return (2.0 * dgx * dgy + EPS) / (nm * (dgx * dgx + dgy * dgy + EPS))


def compute_all(ref, dist, th=8.0):
    """All ten metrics in (a)-(j) order as a length-10 float vector."""
    a, b = _check_pair(ref, dist)
    return np.array(
        [
            mse(a, b),
            psnr(a, b),
            sc(a, b),
            ed(a, b),
            cd(a, b),
            eyd(a, b),
            ssim(a, b),
            essim(a, b),
            wash(a, b),
            gms(a, b, th=th),
        ]
    )


def metric_by_name(name):
    """Resolve a metric id or (a)-(j) letter to its callable."""
    key = name.lower()
    key = METRIC_LETTERS.get(key, key)
    table = {
        "mse": mse,
        "psnr": psnr,
        "sc": sc,
        "ed": ed,
        "cd": cd,
        "eyd": eyd,
        "ssim": ssim,
        "essim": essim,
        "wash": wash,
        "gms": gms,
    }
    if key not in table:
        raise ParameterError(f"unknown metric {name!r}")
    return key, table[key]
