"""Segmentation-mask decoding and application to document images.

Masks arrive either color-coded (red=handwriting, green=printed text,
blue=form elements, near-neutral=background) or as palette indices 0..3.
Applying a mask keeps the pixels whose class is in the keep set and paints
everything else with a fill value (white by default, since the downstream
embedders expect documents on a white field).

Color decoding rule for a pixel (r, g, b): take the strongest channel; the
pixel belongs to that channel's class iff the channel is >= 128 and exceeds
the median channel by >= 64, otherwise it is background.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .dataset import MaskClass, SegMask

DEFAULT_KEEP = frozenset({MaskClass.PRINTED_TEXT, MaskClass.FORM_ELEMENTS})

# Fig.-1 convention: channel index -> content class.
_CHANNEL_CLASS = np.array(
    [MaskClass.HANDWRITING, MaskClass.PRINTED_TEXT, MaskClass.FORM_ELEMENTS],
    dtype=np.uint8,
)
COLOR_MIN_CHANNEL = 128
COLOR_MARGIN = 64


class MaskEncoding(str, enum.Enum):
    COLOR_CODED = "color"
    INDEXED = "indexed"


class MaskError(ValueError):
    """Mask/image mismatch or undecodable mask raster."""


@dataclass(frozen=True)
class GrayImage:
    """8-bit luminance raster, row-major."""

    pixels: np.ndarray  # uint8, H x W

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.uint8)
        if pixels.ndim != 2 or pixels.size == 0:
            raise MaskError("image must be a non-empty 2-D uint8 raster")
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def decode_mask(raster: np.ndarray, encoding: MaskEncoding) -> SegMask:
    """Turn a mask raster (H x W x 3 color image or H x W indices) into a SegMask."""
    raster = np.asarray(raster)
    if raster.size == 0:
        raise MaskError("mask raster has zero size")
    if encoding is MaskEncoding.INDEXED:
        if raster.ndim != 2:
            raise MaskError(f"indexed mask must be 2-D, got shape {raster.shape}")
        if raster.min(initial=0) < 0 or raster.max(initial=0) > max(MaskClass):
            bad = int(raster.max()) if raster.max() > max(MaskClass) else int(raster.min())
            raise MaskError(f"indexed mask value {bad} outside 0..{max(MaskClass)}")
        return SegMask(raster.astype(np.uint8))
    if raster.ndim != 3 or raster.shape[2] != 3:
        raise MaskError(f"color-coded mask must be H x W x 3, got shape {raster.shape}")
    rgb = raster.astype(np.int16)
    strongest = rgb.max(axis=2)
    median = np.median(rgb, axis=2).astype(np.int16)
    dominant = (strongest >= COLOR_MIN_CHANNEL) & (strongest - median >= COLOR_MARGIN)
    channel = rgb.argmax(axis=2)
    classes = np.where(dominant, _CHANNEL_CLASS[channel], MaskClass.BACKGROUND)
    return SegMask(classes.astype(np.uint8))


def apply_mask(
    image: GrayImage,
    mask: SegMask,
    keep: frozenset[MaskClass] | set[MaskClass] = DEFAULT_KEEP,
    fill: int = 255,
) -> GrayImage:
    """Keep pixels whose mask class is in ``keep``; paint the rest ``fill``."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise MaskError(
            f"image is {image.width}x{image.height} but mask is "
            f"{mask.width}x{mask.height}"
        )
    keep_values = np.array(sorted(int(c) for c in keep), dtype=np.uint8)
    kept = np.isin(mask.classes, keep_values)
    out = np.where(kept, image.pixels, np.uint8(fill))
    return GrayImage(out.astype(np.uint8))


def read_gray_png(path: str | Path) -> GrayImage:
    with Image.open(path) as img:
        return GrayImage(np.asarray(img.convert("L")))


def write_gray_png(image: GrayImage, path: str | Path) -> None:
    Image.fromarray(image.pixels, mode="L").save(path, format="PNG")


def read_mask_png(
    path: str | Path, encoding: MaskEncoding | None = None
) -> SegMask:
    """Read a mask PNG; palette images decode as indices, RGB as color-coded.

    Passing ``encoding`` overrides the mode-based auto-detection.
    """
    with Image.open(path) as img:
        if encoding is None:
            encoding = (
                MaskEncoding.INDEXED
                if img.mode in ("P", "L")
                else MaskEncoding.COLOR_CODED
            )
        if encoding is MaskEncoding.INDEXED:
            raster = np.asarray(img if img.mode in ("P", "L") else img.convert("L"))
        else:
            raster = np.asarray(img.convert("RGB"))
    return decode_mask(raster, encoding)


def write_mask_png(mask: SegMask, path: str | Path, color_coded: bool = True) -> None:
    """Write a mask as color-coded RGB (default) or as palette indices."""
    if color_coded:
        lut = np.zeros((4, 3), dtype=np.uint8)
        lut[MaskClass.HANDWRITING] = (255, 0, 0)
        lut[MaskClass.PRINTED_TEXT] = (0, 255, 0)
        lut[MaskClass.FORM_ELEMENTS] = (0, 0, 255)
        Image.fromarray(lut[mask.classes], mode="RGB").save(path, format="PNG")
    else:
        Image.fromarray(mask.classes, mode="L").save(path, format="PNG")
