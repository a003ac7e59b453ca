"""Grayscale conversion and the overlapping-patch grid on top of it.

Pixel coordinates are (x, y) = (row, column) with the origin at the top-left
corner, x growing downward and y growing rightward. Patch ids enumerate
top-left corners row-major over the grid of valid corner positions.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, InvalidPatchSizeError, OutOfBoundsError

# ITU-R BT.601 luma weights.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Default rectangle color for result overlays.
MARK_COLOR = (255, 64, 64)

MIN_PATCH_SIZE = 2


@dataclass(frozen=True)
class GrayImage:
    """8-bit single-channel image, immutable after construction."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise DecodeError("expected a non-empty 2D luminance array")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise DecodeError(f"expected integer pixels, got {px.dtype}")
            if px.min() < 0 or px.max() > 255:
                raise DecodeError("luminance values must lie in [0, 255]")
        px = np.array(px, dtype=np.uint8)  # private copy
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


@dataclass(frozen=True)
class GridMeta:
    """Dimensions of an image and its patch grid, without pixel data.

    Carries every integer needed to map between pixel coordinates and
    patch ids, so index files can restore the mapping without the image.
    """

    height: int
    width: int
    patch_size: int

    def __post_init__(self) -> None:
        m, n, p = self.height, self.width, self.patch_size
        if m < 1 or n < 1:
            raise DecodeError(f"image dimensions must be positive, got {m}x{n}")
        if p < MIN_PATCH_SIZE or p > min(m, n):
            raise InvalidPatchSizeError(
                f"patch size {p} outside [{MIN_PATCH_SIZE}, {min(m, n)}] for a {m}x{n} image"
            )

    @property
    def grid_height(self) -> int:
        return self.height - self.patch_size + 1

    @property
    def grid_width(self) -> int:
        return self.width - self.patch_size + 1

    @property
    def n_patches(self) -> int:
        return self.grid_height * self.grid_width

    def clamp_corner(self, x: int, y: int) -> tuple[int, int]:
        """Nearest valid top-left corner for a clicked pixel.

        The pixel must lie inside the image; corners saturate at the grid
        edge so clicks in the right/bottom margin still map to a patch.
        """
        if not (0 <= x < self.height and 0 <= y < self.width):
            raise OutOfBoundsError(
                f"pixel ({x}, {y}) outside a {self.height}x{self.width} image"
            )
        return min(x, self.grid_height - 1), min(y, self.grid_width - 1)

    def patch_id(self, x: int, y: int) -> int:
        cx, cy = self.clamp_corner(x, y)
        return cx * self.grid_width + cy

    def patch_coords(self, patch_id: int) -> tuple[int, int]:
        if not (0 <= patch_id < self.n_patches):
            raise OutOfBoundsError(
                f"patch id {patch_id} outside [0, {self.n_patches})"
            )
        x, y = divmod(patch_id, self.grid_width)
        return x, y


@dataclass(frozen=True)
class PatchView:
    """One patch: its id, top-left corner, and a read-only pixel window."""

    patch_id: int
    x: int
    y: int
    pixels: np.ndarray


@dataclass(frozen=True)
class PatchGrid:
    """All overlapping square patches of a grayscale image."""

    image: GrayImage
    meta: GridMeta

    @property
    def patch_size(self) -> int:
        return self.meta.patch_size

    @property
    def grid_height(self) -> int:
        return self.meta.grid_height

    @property
    def grid_width(self) -> int:
        return self.meta.grid_width

    @property
    def n_patches(self) -> int:
        return self.meta.n_patches

    def patch_id(self, x: int, y: int) -> int:
        return self.meta.patch_id(x, y)

    def patch_coords(self, patch_id: int) -> tuple[int, int]:
        return self.meta.patch_coords(patch_id)

    def view(self, patch_id: int) -> PatchView:
        x, y = self.meta.patch_coords(patch_id)
        p = self.patch_size
        return PatchView(patch_id, x, y, self.image.pixels[x : x + p, y : y + p])

    def iter_views(self):
        for t in range(self.n_patches):
            yield self.view(t)


def extract_patches(image: GrayImage, patch_size: int) -> PatchGrid:
    """Build the grid of all overlapping patch_size x patch_size windows."""
    meta = GridMeta(image.height, image.width, int(patch_size))
    return PatchGrid(image, meta)


def to_grayscale(raster: np.ndarray) -> GrayImage:
    """Collapse an RGB raster to 8-bit luminance; 2D input passes through."""
    arr = np.asarray(raster)
    if arr.ndim == 2:
        return GrayImage(arr)
    if arr.ndim == 3 and arr.shape[2] == 3:
        wr, wg, wb = LUMA_WEIGHTS
        luma = wr * arr[:, :, 0] + wg * arr[:, :, 1] + wb * arr[:, :, 2]
        return GrayImage(np.clip(np.rint(luma), 0, 255).astype(np.uint8))
    raise DecodeError(f"expected a 2D or HxWx3 raster, got shape {arr.shape}")


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG or PGM bytes into a 2D gray or HxWx3 RGB uint8 raster."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            if img.width < 1 or img.height < 1:
                raise DecodeError("image has zero area")
            if img.mode == "L":
                return np.asarray(img, dtype=np.uint8)
            if img.mode != "RGB":
                img = img.convert("RGB")
            return np.asarray(img, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"unrecognized image data: {exc}") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"corrupt image data: {exc}") from exc


def load_image(path) -> np.ndarray:
    """Read an image file (PNG or 8-bit PGM) as a uint8 raster."""
    with open(path, "rb") as fh:
        return decode_image(fh.read())


def encode_png(raster: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(raster)
    if arr.ndim == 2:
        img = Image.fromarray(arr.astype(np.uint8), mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        img = Image.fromarray(arr.astype(np.uint8), mode="RGB")
    else:
        raise DecodeError(f"cannot encode raster of shape {arr.shape}")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def save_png(raster: np.ndarray, path) -> None:
    data = encode_png(raster)
    with open(path, "wb") as fh:
        fh.write(data)


def annotate(
    raster: np.ndarray,
    rects: list[tuple[int, int, int, int]],
    color: tuple[int, int, int] = MARK_COLOR,
    thickness: int = 1,
) -> np.ndarray:
    """Draw hollow rectangles (x, y, height, width) on a copy of the raster.

    Grayscale input is promoted to RGB so the marks can carry color. The
    input array is never modified.
    """
    arr = np.asarray(raster)
    if arr.ndim == 2:
        out = np.repeat(arr[:, :, None], 3, axis=2).astype(np.uint8)
    elif arr.ndim == 3 and arr.shape[2] == 3:
        out = arr.astype(np.uint8).copy()
    else:
        raise DecodeError(f"cannot annotate raster of shape {arr.shape}")
    m, n = out.shape[:2]
    col = np.array(color, dtype=np.uint8)
    for x, y, h, w in rects:
        if h < 1 or w < 1 or x < 0 or y < 0 or x + h > m or y + w > n:
            raise OutOfBoundsError(
                f"rectangle ({x}, {y}, {h}, {w}) outside a {m}x{n} raster"
            )
        t = min(thickness, h, w)
        out[x : x + t, y : y + w] = col
        out[x + h - t : x + h, y : y + w] = col
        out[x : x + h, y : y + t] = col
        out[x : x + h, y + w - t : y + w] = col
    return out
