"""Grayscale image loading, saving and resizing.

Images are plain 2-D float64 numpy arrays with intensities in [0, 255]
and at least 2 rows and 2 columns; every function in the package
operates on that representation.  Binary PGM (P5, maxval 255) is the
golden interchange format because it round-trips bit-exactly and parses
trivially anywhere; 8-bit PNG (gray or RGB) is accepted for
convenience.  The canonical working size after preprocessing is
400 x 300 (rows x cols).
"""

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, ParameterError, ValidationError

CANONICAL_ROWS = 400
CANONICAL_COLS = 300

# ITU-R BT.601 luminance weights for RGB -> gray
_LUMA = (0.299, 0.587, 0.114)


def round_half_up(values):
    """Round to nearest integer with halves going up (2.5 -> 3), as floats."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


def validate_gray(img, what="image"):
    """Check the 2-D / >=2x2 / finite / [0,255] contract, return float64 view."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{what}: expected a 2-D array, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValidationError(f"{what}: needs at least 2x2 pixels, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: contains non-finite intensities")
    if arr.min() < 0.0 or arr.max() > 255.0:
        raise ValidationError(f"{what}: intensities outside [0, 255]")
    return arr


def _parse_pgm(data, path):
    # header: "P5" <whitespace> cols <ws> rows <ws> maxval <single ws> raster
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise FormatError(f"{path}: truncated PGM header")
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise FormatError(f"{path}: malformed PGM header") from None
    cols, rows, maxval = fields
    if maxval > 255 or maxval <= 0:
        raise FormatError(f"{path}: unsupported PGM bit depth (maxval {maxval})")
    if rows < 2 or cols < 2:
        raise FormatError(f"{path}: image smaller than 2x2 ({rows}x{cols})")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos : pos + rows * cols]
    if len(raster) < rows * cols:
        raise FormatError(f"{path}: truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(rows, cols).astype(np.float64)


def _load_png(path):
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            elif mode == "RGB":
                rgb = np.asarray(im, dtype=np.float64)
                arr = round_half_up(
                    _LUMA[0] * rgb[:, :, 0] + _LUMA[1] * rgb[:, :, 1] + _LUMA[2] * rgb[:, :, 2]
                )
            else:
                raise FormatError(f"{path}: unsupported PNG mode {mode!r} (need 8-bit gray or RGB)")
    except UnidentifiedImageError:
        raise FormatError(f"{path}: not a decodable PNG") from None
    return arr


def load_image(path):
    """Load a PGM (P5) or 8-bit PNG file as a grayscale image.

    RGB inputs are converted with BT.601 weights 0.299/0.587/0.114 and
    rounded half-up, so the stored values are integral.
    """
    with open(path, "rb") as fh:
        head = fh.read(8)
        if head.startswith(b"P5"):
            data = head + fh.read()
            return validate_gray(_parse_pgm(data, path), str(path))
    if head.startswith(b"\x89PNG"):
        return validate_gray(_load_png(path), str(path))
    raise FormatError(f"{path}: unsupported format (need binary PGM P5 or PNG)")


def save_image(img, path):
    """Write a grayscale image as binary PGM (P5, maxval 255).

    Intensities are quantized round-half-up, so integral images
    round-trip exactly through save_image/load_image.
    """
    arr = validate_gray(img, str(path))
    quant = np.clip(round_half_up(arr), 0, 255).astype(np.uint8)
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(quant.tobytes())


def resize_bilinear(img, out_rows, out_cols):
    """Resize with bilinear interpolation and pixel-center alignment.

    Source coordinate for output index d is (d + 0.5) * in/out - 0.5,
    clamped to the valid range; resizing to the input size is an exact
    identity.
    """
    arr = validate_gray(img)
    if out_rows < 2 or out_cols < 2:
        raise ParameterError(f"resize target must be at least 2x2, got {out_rows}x{out_cols}")
    in_rows, in_cols = arr.shape
    if (out_rows, out_cols) == (in_rows, in_cols):
        return arr.copy()

    def axis_coords(n_in, n_out):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        lo = np.floor(src).astype(np.intp)
        lo = np.minimum(lo, n_in - 2)
        return lo, src - lo

    r_lo, r_w = axis_coords(in_rows, out_rows)
    c_lo, c_w = axis_coords(in_cols, out_cols)
    r_w = r_w[:, None]
    c_w = c_w[None, :]
    tl = arr[np.ix_(r_lo, c_lo)]
    tr = arr[np.ix_(r_lo, c_lo + 1)]
    bl = arr[np.ix_(r_lo + 1, c_lo)]
    br = arr[np.ix_(r_lo + 1, c_lo + 1)]
    top = tl + (tr - tl) * c_w
    bot = bl + (br - bl) * c_w
    out = top + (bot - top) * r_w
    return np.clip(out, 0.0, 255.0)


def to_canonical(img):
    """Resize to the canonical 400x300 working size."""
    return resize_bilinear(img, CANONICAL_ROWS, CANONICAL_COLS)
