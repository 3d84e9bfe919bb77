"""Convolution and derivative kernels shared by the quality metrics.

All operators use edge replication at the image boundary and return
arrays of the source shape.  Smoothing kernels are applied in a
"delta" formulation, out = x + sum_k w_k * (shift_k(x) - x), which is
algebraically the normalized kernel but preserves constant images
bit-exactly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ValidationError

# 1-D taps of the 3x3 sigma=0.5 Gaussian: exp(-d^2 / (2 * 0.25))
_G3_SIDE = math.exp(-2.0) / (1.0 + 2.0 * math.exp(-2.0))

PREWITT_X = ((1, 0, -1), (1, 0, -1), (1, 0, -1))
PREWITT_Y = ((1, 1, 1), (0, 0, 0), (-1, -1, -1))
SOBEL_X = ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))
SOBEL_Y = ((-1, -2, -1), (0, 0, 0), (1, 2, 1))
# Scharr 3/10/3 derivative kernels at 0, 90, 45 and 135 degrees
SCHARR_0 = ((3, 0, -3), (10, 0, -10), (3, 0, -3))
SCHARR_90 = ((3, 10, 3), (0, 0, 0), (-3, -10, -3))
SCHARR_45 = ((0, -3, -10), (3, 0, -3), (10, 3, 0))
SCHARR_135 = ((10, 3, 0), (3, 0, -3), (0, -3, -10))


@dataclass(frozen=True)
class GradientMaps:
    """Thresholded absolute-difference gradient maps of one image."""

    gx: np.ndarray
    gy: np.ndarray
    threshold: float


@dataclass(frozen=True)
class WaveletBands:
    """Single-level 2-D wavelet decomposition (approximation + 3 details)."""

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    @property
    def details(self):
        return (self.lh, self.hl, self.hh)


def _check_image(img, what="image"):
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValidationError(f"{what}: expected a 2-D array of at least 2x2")
    return arr


def _correlate_padded(pad, kernel, n, m):
    out = None
    tmp = np.empty((n, m))
    for di in range(3):
        for dj in range(3):
            w = kernel[di][dj]
            if w:
                np.multiply(pad[di : di + n, dj : dj + m], w, out=tmp)
                if out is None:
                    out = tmp
                    tmp = np.empty((n, m))
                else:
                    out += tmp
    return out if out is not None else np.zeros((n, m))


def correlate3x3(img, kernel):
    """Correlate with a 3x3 kernel, edge replication, source shape out."""
    arr = np.asarray(img, dtype=np.float64)
    n, m = arr.shape
    return _correlate_padded(np.pad(arr, 1, mode="edge"), kernel, n, m)


def correlate3x3_many(img, kernels):
    """Several 3x3 correlations of the same image, sharing one padded copy."""
    arr = np.asarray(img, dtype=np.float64)
    n, m = arr.shape
    pad = np.pad(arr, 1, mode="edge")
    return [_correlate_padded(pad, kern, n, m) for kern in kernels]


def _blur3_axis(arr, w, axis):
    # delta form of the normalized [w, 1-2w, w] tap along one axis; with
    # edge replication the boundary delta is exactly zero, so the
    # interior slice update reproduces it bit-for-bit
    out = arr.copy()
    lead = (slice(None),) * axis
    head = lead + (slice(None, -1),)
    tail = lead + (slice(1, None),)
    delta = np.subtract(arr[head], arr[tail])
    delta *= w
    out[tail] += delta
    np.negative(delta, out=delta)  # w*(tail-head) is the exact negation
    out[head] += delta
    return out


def _smooth_axis(arr, side_weights, axis):
    # delta form of a symmetric normalized 1-D kernel along one axis
    n = arr.shape[axis]
    out = arr.copy()
    idx = np.arange(n)
    for off, w in side_weights:
        src = np.clip(idx + off, 0, n - 1)
        shifted = np.take(arr, src, axis=axis)
        out += w * (shifted - arr)
    return out


def gaussian3x3(img):
    """3x3 Gaussian smoothing (sigma = 0.5), kernel normalized to sum 1.

    Separable; constant images are preserved exactly.
    """
    arr = _check_image(img)
    return _blur3_axis(_blur3_axis(arr, _G3_SIDE, 0), _G3_SIDE, 1)


def gaussian_blur(img, sigma):
    """Gaussian smoothing with radius ceil(3*sigma), separable, replication."""
    if sigma <= 0:
        raise ParameterError(f"blur sigma must be positive, got {sigma}")
    arr = _check_image(img)
    radius = math.ceil(3.0 * sigma)
    taps = [math.exp(-(d * d) / (2.0 * sigma * sigma)) for d in range(-radius, radius + 1)]
    total = sum(taps)
    side = [(d, taps[d + radius] / total) for d in range(-radius, radius + 1) if d != 0]
    return _smooth_axis(_smooth_axis(arr, side, 0), side, 1)


def thresholded_gradients(img, th):
    """Pixel-wise |forward difference| / th along x and y.

    gx(i, j) = |I(i,j) - I(i,j+1)| / th with the last column zero,
    gy likewise along rows with the last row zero.  Dividing by th = 2**p
    scales the maps exactly.
    """
    if th <= 0:
        raise ParameterError(f"gradient threshold must be positive, got {th}")
    arr = _check_image(img)
    gx = np.zeros_like(arr)
    gy = np.zeros_like(arr)
    gx[:, :-1] = np.abs(arr[:, :-1] - arr[:, 1:]) / th
    gy[:-1, :] = np.abs(arr[:-1, :] - arr[1:, :]) / th
    return GradientMaps(gx=gx, gy=gy, threshold=float(th))


def gradient_sum_image(img, th):
    """gx + gy of the thresholded gradient maps, as one matrix."""
    maps = thresholded_gradients(img, th)
    return maps.gx + maps.gy


def binarize_gradient(maps, cutoff=1.0):
    """Boolean map of pixels whose summed gradient exceeds the cutoff."""
    if cutoff < 0:
        raise ParameterError(f"cutoff must be nonnegative, got {cutoff}")
    return (maps.gx + maps.gy) > cutoff


def sobel_magnitude(img):
    """Gradient magnitude from the standard 3x3 Sobel kernels."""
    arr = _check_image(img)
    sx, sy = correlate3x3_many(arr, (SOBEL_X, SOBEL_Y))
    return np.sqrt(sx * sx + sy * sy)


def sobel_edges(img, cutoff_factor=4.0):
    """Binary edge map: Sobel magnitude above cutoff_factor * mean magnitude.

    The paper-style automatic threshold keeps the rule parameter-free
    across image sizes; cutoff_factor is exposed for tuning.
    """
    mag = sobel_magnitude(img)
    return mag > cutoff_factor * mag.mean()


def _neighborhood_max(arr):
    n, m = arr.shape
    pad = np.pad(arr, 1, mode="constant", constant_values=-np.inf)
    out = np.full_like(arr, -np.inf)
    for di in range(3):
        for dj in range(3):
            np.maximum(out, pad[di : di + n, dj : dj + m], out)
    return out


def harris_corners(img, k=0.04, rel_threshold=0.01):
    """Number of Harris corners.

    Structure tensor from Prewitt derivatives smoothed with gaussian3x3;
    response R = det - k * trace^2; a pixel counts if R >= rel_threshold
    * max(R), it attains the maximum of its 3x3 neighborhood, and no
    earlier (raster-order) accepted corner is adjacent -- the last rule
    resolves plateau ties deterministically.
    """
    arr = _check_image(img)
    ix, iy = correlate3x3_many(arr, (PREWITT_X, PREWITT_Y))
    a = gaussian3x3(ix * ix)
    b = gaussian3x3(ix * iy)
    c = gaussian3x3(iy * iy)
    r = (a * c - b * b) - k * (a + c) * (a + c)
    rmax = r.max()
    if rmax <= 0.0:
        return 0
    candidates = (r >= rel_threshold * rmax) & (r >= _neighborhood_max(r))
    # candidates with no candidate neighbor can neither suppress nor be
    # suppressed; only plateau members need the sequential raster scan
    n, m = candidates.shape
    pad = np.pad(candidates, 1)
    neighbor_count = np.zeros(candidates.shape, dtype=np.int64)
    for di in range(3):
        for dj in range(3):
            neighbor_count += pad[di : di + n, dj : dj + m]
    contested = candidates & (neighbor_count > 1)
    count = int(np.count_nonzero(candidates & ~contested))
    if contested.any():
        accepted = np.zeros((n + 2, m + 2), dtype=bool)
        for i, j in np.argwhere(contested):
            if not accepted[i : i + 3, j : j + 3].any():
                accepted[i + 1, j + 1] = True
                count += 1
    return count


def haar_decompose(img):
    """Single-level orthonormal Haar decomposition.

    Pairs adjacent columns then adjacent rows with low = (a+b)/sqrt(2),
    high = (a-b)/sqrt(2); odd dimensions are edge-replicated to even.
    Satisfies Parseval for even-sized inputs.
    """
    arr = _check_image(img)
    n, m = arr.shape
    if m % 2:
        arr = np.concatenate([arr, arr[:, -1:]], axis=1)
    if n % 2:
        arr = np.concatenate([arr, arr[-1:, :]], axis=0)
    s = math.sqrt(2.0)
    lo_c = (arr[:, 0::2] + arr[:, 1::2]) / s
    hi_c = (arr[:, 0::2] - arr[:, 1::2]) / s
    ll = (lo_c[0::2, :] + lo_c[1::2, :]) / s
    hl = (lo_c[0::2, :] - lo_c[1::2, :]) / s
    lh = (hi_c[0::2, :] + hi_c[1::2, :]) / s
    hh = (hi_c[0::2, :] - hi_c[1::2, :]) / s
    return WaveletBands(ll=ll, lh=lh, hl=hl, hh=hh)


def scharr_edge_strength(img):
    """Directional edge strength: max |Scharr derivative| over 0/90/45/135 deg.

    Kernels keep the raw 3/10/3 weighting (no normalization); a 0|255
    vertical step therefore peaks at 255 * 16 = 4080.
    """
    arr = _check_image(img)
    derivs = correlate3x3_many(arr, (SCHARR_0, SCHARR_90, SCHARR_45, SCHARR_135))
    strength = np.abs(derivs[0])
    for d in derivs[1:]:
        np.maximum(strength, np.abs(d), strength)
    return strength
