"""Raster container, PNG/JPEG decoding and the solarization transform.

Images are stored row-major as ``(height, width, channels)`` float64 arrays
with every value in ``[0, 1]``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from solarbench.errors import ImageDecodeError, UnsupportedImageFormat

# PIL modes that carry 8 bits per channel and convert losslessly to L / RGB.
_GRAY_MODES = {"L", "1"}
_COLOR_MODES = {"RGB", "RGBA", "RGBX", "P", "PA", "LA", "CMYK", "YCbCr"}


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable H×W×C raster with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise ValueError(f"expected an H x W x C array, got shape {arr.shape}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise ValueError(f"image must be at least 1x1, got {h}x{w}")
        if c not in (1, 3):
            raise ValueError(f"image must have 1 or 3 channels, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError(
                f"image values must lie in [0, 1], got range [{arr.min()}, {arr.max()}]"
            )
        if arr is self.pixels or not arr.flags.owndata:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the values, length height*width*channels."""
        return self.pixels.reshape(-1)

    @classmethod
    def uniform(cls, value: float, height: int = 4, width: int = 4, channels: int = 3) -> "Image":
        return cls(np.full((height, width, channels), value, dtype=np.float64))

    def to_rgb(self) -> "Image":
        if self.channels == 3:
            return self
        return Image(np.repeat(self.pixels, 3, axis=2))

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and np.array_equal(
            self.pixels, other.pixels
        )

    __hash__ = None


def check_threshold(alpha: float) -> float:
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise ValueError(f"solarization threshold must be a real number, got {alpha!r}") from None
    if not math.isfinite(alpha) or alpha < 0.0:
        raise ValueError(f"solarization threshold must be finite and >= 0, got {alpha!r}")
    return alpha


def solarize(image: Image, alpha: float) -> Image:
    """Invert every value at or above ``alpha``; leave the rest untouched.

    ``alpha = 0`` inverts the whole image and any ``alpha`` above the
    brightest value is the identity. The input is not modified.
    """
    alpha = check_threshold(alpha)
    if not isinstance(image, Image):
        image = Image(image)
    x = image.pixels
    return Image(np.where(x >= alpha, 1.0 - x, x))


def decode_image(data: bytes, name: str | None = None) -> Image:
    """Decode PNG or JPEG bytes into an :class:`Image`.

    8-bit value ``u`` becomes ``u / 255``. Grayscale files decode to one
    channel, everything else to R, G, B (alpha is dropped).
    """
    label = name or "<bytes>"
    try:
        with PILImage.open(io.BytesIO(data)) as pil:
            fmt = pil.format
            if fmt not in ("PNG", "JPEG"):
                raise UnsupportedImageFormat(f"unsupported image format {fmt!r}", label)
            mode = pil.mode
            if mode in _GRAY_MODES:
                pil = pil.convert("L")
            elif mode in _COLOR_MODES:
                pil = pil.convert("RGB")
            else:
                raise UnsupportedImageFormat(
                    f"unsupported pixel mode {mode!r} (only 8-bit channels are supported)",
                    label,
                )
            arr = np.asarray(pil, dtype=np.uint8)
    except UnsupportedImageFormat:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image: {exc}", label) from exc
    return Image(arr.astype(np.float64) / 255.0)


def load_image(path) -> Image:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageDecodeError(f"cannot read image file: {exc.strerror or exc}", str(path)) from exc
    return decode_image(data, str(path))
