"""Mask decoding and application, checked pixel-by-pixel against a naive oracle."""

from __future__ import annotations

import numpy as np
import pytest

from formbench.cli import main as cli_main
from formbench.dataset import MaskClass, SegMask
from formbench.mask import (
    COLOR_MARGIN,
    COLOR_MIN_CHANNEL,
    DEFAULT_KEEP,
    GrayImage,
    MaskEncoding,
    MaskError,
    apply_mask,
    decode_mask,
    read_gray_png,
    read_mask_png,
    write_gray_png,
    write_mask_png,
)

_CLASS_OF_CHANNEL = {
    0: MaskClass.HANDWRITING,
    1: MaskClass.PRINTED_TEXT,
    2: MaskClass.FORM_ELEMENTS,
}


def classify_pixel_oracle(r: int, g: int, b: int) -> MaskClass:
    """Reference color rule, written without vectorization tricks."""
    channels = [r, g, b]
    strongest = max(range(3), key=lambda i: (channels[i], -i))  # first max wins
    median = sorted(channels)[1]
    if channels[strongest] >= COLOR_MIN_CHANNEL and (
        channels[strongest] - median >= COLOR_MARGIN
    ):
        return _CLASS_OF_CHANNEL[strongest]
    return MaskClass.BACKGROUND


def test_primary_colors_decode_to_documented_classes():
    raster = np.array(
        [
            [[255, 0, 0], [0, 255, 0]],
            [[0, 0, 255], [255, 255, 255]],
            [[0, 0, 0], [127, 0, 0]],
        ],
        dtype=np.uint8,
    )
    mask = decode_mask(raster, MaskEncoding.COLOR_CODED)
    assert mask.classes[0, 0] == MaskClass.HANDWRITING  # red
    assert mask.classes[0, 1] == MaskClass.PRINTED_TEXT  # green
    assert mask.classes[1, 0] == MaskClass.FORM_ELEMENTS  # blue
    assert mask.classes[1, 1] == MaskClass.BACKGROUND  # white: no margin
    assert mask.classes[2, 0] == MaskClass.BACKGROUND  # black: too weak
    assert mask.classes[2, 1] == MaskClass.BACKGROUND  # just below threshold


def test_color_rule_thresholds_are_exact():
    # strongest exactly at the minimum and exactly at the margin: in
    cases = [
        ((128, 64, 0), MaskClass.HANDWRITING),  # margin exactly 64
        ((128, 65, 0), MaskClass.BACKGROUND),  # margin 63: out
        ((127, 0, 0), MaskClass.BACKGROUND),  # strongest 127: out
        ((0, 200, 100), MaskClass.PRINTED_TEXT),
        ((10, 10, 250), MaskClass.FORM_ELEMENTS),
    ]
    raster = np.array([[list(rgb) for rgb, _ in cases]], dtype=np.uint8)
    mask = decode_mask(raster, MaskEncoding.COLOR_CODED)
    for col, (_, expected) in enumerate(cases):
        assert mask.classes[0, col] == expected, cases[col]


def test_color_decode_matches_oracle_on_random_rasters():
    rng = np.random.default_rng(77)
    for _ in range(25):
        h, w = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        raster = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        mask = decode_mask(raster, MaskEncoding.COLOR_CODED)
        for y in range(h):
            for x in range(w):
                want = classify_pixel_oracle(*raster[y, x])
                assert mask.classes[y, x] == want, (raster[y, x], y, x)


def test_indexed_decode_and_bounds():
    raster = np.array([[0, 1], [2, 3]], dtype=np.uint8)
    mask = decode_mask(raster, MaskEncoding.INDEXED)
    assert mask.classes.tolist() == [[0, 1], [2, 3]]
    with pytest.raises(MaskError):
        decode_mask(np.array([[4]], dtype=np.uint8), MaskEncoding.INDEXED)


def test_apply_mask_partitions_pixels():
    rng = np.random.default_rng(31)
    for _ in range(100):
        h, w = int(rng.integers(1, 12)), int(rng.integers(1, 12))
        image = GrayImage(rng.integers(0, 256, size=(h, w), dtype=np.uint8))
        mask = SegMask(rng.integers(0, 4, size=(h, w), dtype=np.uint8))
        keep_size = int(rng.integers(1, 5))
        keep = frozenset(
            MaskClass(v) for v in rng.choice(4, size=keep_size, replace=False)
        )
        fill = int(rng.integers(0, 256))
        before = image.pixels.copy()
        out = apply_mask(image, mask, keep=keep, fill=fill)
        kept = np.isin(mask.classes, [int(c) for c in keep])
        # kept pixels pass through untouched, everything else is the fill value
        assert np.array_equal(out.pixels[kept], image.pixels[kept])
        assert (out.pixels[~kept] == fill).all()
        # pure function: inputs are never modified
        assert np.array_equal(image.pixels, before)


def test_apply_mask_default_keeps_printed_text_and_form_elements():
    image = GrayImage(np.full((1, 4), 50, dtype=np.uint8))
    mask = SegMask(np.array([[0, 1, 2, 3]], dtype=np.uint8))
    out = apply_mask(image, mask)
    assert DEFAULT_KEEP == {MaskClass.PRINTED_TEXT, MaskClass.FORM_ELEMENTS}
    assert out.pixels.tolist() == [[255, 255, 50, 50]]


def test_apply_mask_rejects_shape_mismatch():
    image = GrayImage(np.zeros((4, 4), dtype=np.uint8))
    mask = SegMask(np.zeros((4, 5), dtype=np.uint8))  # 5 wide, 4 tall
    with pytest.raises(MaskError, match="mask is 5x4"):
        apply_mask(image, mask)


def test_png_round_trips(tmp_path):
    rng = np.random.default_rng(5)
    image = GrayImage(rng.integers(0, 256, size=(7, 5), dtype=np.uint8))
    write_gray_png(image, tmp_path / "img.png")
    assert np.array_equal(read_gray_png(tmp_path / "img.png").pixels, image.pixels)

    mask = SegMask(rng.integers(0, 4, size=(7, 5), dtype=np.uint8))
    write_mask_png(mask, tmp_path / "color.png", color_coded=True)
    assert np.array_equal(
        read_mask_png(tmp_path / "color.png").classes, mask.classes
    )
    write_mask_png(mask, tmp_path / "indexed.png", color_coded=False)
    assert np.array_equal(
        read_mask_png(tmp_path / "indexed.png").classes, mask.classes
    )


def test_mask_apply_cli(tmp_path, capsys):
    rng = np.random.default_rng(13)
    (tmp_path / "images").mkdir()
    (tmp_path / "masks").mkdir()
    image = GrayImage(rng.integers(0, 256, size=(6, 6), dtype=np.uint8))
    mask = SegMask(rng.integers(0, 4, size=(6, 6), dtype=np.uint8))
    write_gray_png(image, tmp_path / "images" / "page.png")
    write_mask_png(mask, tmp_path / "masks" / "page.png")
    # an image with no mask is reported but not fatal
    write_gray_png(image, tmp_path / "images" / "orphan.png")

    code = cli_main(
        [
            "mask-apply",
            "--images",
            str(tmp_path / "images"),
            "--masks",
            str(tmp_path / "masks"),
            "--out",
            str(tmp_path / "out"),
            "--keep",
            "handwriting",
            "--fill",
            "0",
        ]
    )
    assert code == 0
    err = capsys.readouterr().err
    assert "orphan" in err
    out = read_gray_png(tmp_path / "out" / "page.png")
    expected = apply_mask(image, mask, keep={MaskClass.HANDWRITING}, fill=0)
    assert np.array_equal(out.pixels, expected.pixels)
    assert not (tmp_path / "out" / "orphan.png").exists()
