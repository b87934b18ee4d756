"""Regenerate the grayscale benchmark PGMs from scikit-image's bundled photos.

Usage: python scripts/make_benchmarks.py [--size 128] [--out benchmarks/images]
"""

import argparse
from pathlib import Path

import numpy as np
from skimage import color, data, transform

from hprmul.imaging import ImageGray, save_pgm

SOURCES = ("camera", "astronaut", "coffee", "chelsea", "moon", "coins")


def to_gray_u8(img, size):
    if img.ndim == 3:
        img = color.rgb2gray(img)
    h, w = img.shape
    side = min(h, w)
    top, left = (h - side) // 2, (w - side) // 2
    img = img[top:top + side, left:left + side]
    img = transform.resize(img, (size, size), anti_aliasing=True, preserve_range=False)
    return np.clip(np.rint(img * 255), 0, 255).astype(np.uint8)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--out", default="benchmarks/images")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in SOURCES:
        arr = to_gray_u8(getattr(data, name)(), args.size)
        save_pgm(ImageGray.from_array(arr), out / f"{name}.pgm")
        print(out / f"{name}.pgm")


if __name__ == "__main__":
    main()
