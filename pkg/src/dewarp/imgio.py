"""Image and field file I/O.

File contracts:
  - probability mask: single-channel 8-bit grayscale PNG, value v -> probability v/255
  - binary mask:      single-channel 8-bit PNG with values {0, 255}
  - displacement dump: 16-byte header {magic b"DWRP", u32 width, u32 height,
    u32 planes=2} little-endian, followed by the dx then dy plane as
    row-major 32-bit floats
Writes are atomic (temp file + rename) so concurrent batch workers and
interrupted runs never leave partial files behind.
"""

import json
import os
import struct
import tempfile

import numpy as np
from PIL import Image

from .errors import MissingInputError

DISPLACEMENT_MAGIC = b"DWRP"

# Rec. 601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


def luminance(image: np.ndarray) -> np.ndarray:
    """Reduce an image to float64 luminance (Rec. 601 weights for color)."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr[:, :, 0] * _LUMA[0] + arr[:, :, 1] * _LUMA[1] + arr[:, :, 2] * _LUMA[2]
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {arr.shape}")


def read_image(path) -> np.ndarray:
    """Load a PNG/JPEG into uint8 (H, W) grayscale or (H, W, 3) RGB."""
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return np.asarray(im, dtype=np.uint8)
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise MissingInputError(f"image not found: {path}") from exc
    except OSError as exc:
        raise MissingInputError(f"cannot read image {path}: {exc}") from exc


def read_probability_mask(path) -> np.ndarray:
    """Load an 8-bit grayscale mask PNG as float64 probabilities in [0, 1]."""
    try:
        with Image.open(path) as im:
            gray = np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError as exc:
        raise MissingInputError(f"mask not found: {path}") from exc
    except OSError as exc:
        raise MissingInputError(f"cannot read mask {path}: {exc}") from exc
    return gray.astype(np.float64) / 255.0


def _atomic_write(path, write_fn):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_image(path, image: np.ndarray, fmt: str = "png", quality: int = 95) -> None:
    """Write uint8 image as PNG or JPEG (quality applies to JPEG only)."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        raise ValueError("write_image expects uint8 pixel data")
    im = Image.fromarray(arr)
    fmt = fmt.lower()
    if fmt == "png":
        _atomic_write(path, lambda fh: im.save(fh, format="PNG"))
    elif fmt in ("jpeg", "jpg"):
        if im.mode == "L":
            im = im.convert("L")
        _atomic_write(path, lambda fh: im.save(fh, format="JPEG", quality=quality))
    else:
        raise ValueError(f"unsupported output format: {fmt}")


def write_probability_mask(path, mask: np.ndarray) -> None:
    """Write probabilities in [0, 1] as the 8-bit grayscale mask contract."""
    arr = np.asarray(mask, dtype=np.float64)
    quantized = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    write_image(path, quantized, "png")


def write_binary_mask(path, bits: np.ndarray) -> None:
    """Write a {0,1} mask as an 8-bit PNG with values {0, 255}."""
    arr = (np.asarray(bits) > 0).astype(np.uint8) * 255
    write_image(path, arr, "png")


def read_binary_mask(path) -> np.ndarray:
    """Load a binary-mask PNG back to {0,1} uint8 (threshold at 128)."""
    gray = np.asarray(Image.open(path).convert("L"), dtype=np.uint8)
    return (gray >= 128).astype(np.uint8)


def write_displacement(path, dx: np.ndarray, dy: np.ndarray) -> None:
    """Dump a displacement field in the 2-plane float32 binary layout."""
    if dx.shape != dy.shape or dx.ndim != 2:
        raise ValueError("dx and dy must be equal-shaped 2-D arrays")
    h, w = dx.shape
    header = DISPLACEMENT_MAGIC + struct.pack("<III", w, h, 2)

    def _write(fh):
        fh.write(header)
        fh.write(np.ascontiguousarray(dx, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(dy, dtype="<f4").tobytes())

    _atomic_write(path, _write)


def read_displacement(path):
    """Read a displacement dump; returns (dx, dy) float32 arrays."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != DISPLACEMENT_MAGIC:
            raise ValueError(f"not a displacement dump: {path}")
        w, h, planes = struct.unpack("<III", header[4:])
        if planes != 2:
            raise ValueError(f"expected 2 planes, got {planes}")
        data = np.frombuffer(fh.read(w * h * planes * 4), dtype="<f4")
    if data.size != w * h * planes:
        raise ValueError(f"truncated displacement dump: {path}")
    dx = data[: w * h].reshape(h, w).copy()
    dy = data[w * h:].reshape(h, w).copy()
    return dx, dy


def write_json(path, obj) -> None:
    payload = json.dumps(obj, indent=2, sort_keys=True).encode("utf-8")
    _atomic_write(path, lambda fh: fh.write(payload))
