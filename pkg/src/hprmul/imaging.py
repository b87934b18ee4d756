"""Grayscale benchmark applications run on a redundant multiplier.

Every pixel x coefficient (or pixel x pixel) product goes through ``mul``, a
callable ``mul(a, b, plan, index) -> products`` as returned by
:func:`hprmul.schemes.make_multiplier`.  Accumulation, the ``2X`` term of
the sharpening filter and the final divisions are exact.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .fault import NO_FAULTS, FaultPlan


class PgmError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True, eq=False)
class ImageGray:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) uint8, row-major

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.size != self.width * self.height:
            raise ValueError("pixel count does not match width*height")
        if px.size and (px.min() < 0 or px.max() > 255):
            raise ValueError("pixels must lie in [0, 255]")
        px = px.astype(np.uint8).reshape(self.height, self.width)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr) -> "ImageGray":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(arr.shape[1], arr.shape[0], arr)

    def __array__(self, dtype=None, copy=None):
        return self.pixels if dtype is None else self.pixels.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, ImageGray):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and bool(
            np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True)
class Kernel5x5:
    coefficients: tuple[tuple[int, ...], ...]
    divisor: int

    def __post_init__(self):
        if len(self.coefficients) != 5 or any(len(r) != 5 for r in self.coefficients):
            raise ValueError("kernel must be 5x5")
        if sum(map(sum, self.coefficients)) != self.divisor:
            raise ValueError("kernel coefficients must sum to the divisor")


SHARPEN_KERNEL = Kernel5x5((
    (1, 4, 7, 4, 1),
    (4, 16, 26, 16, 4),
    (7, 26, 41, 26, 7),
    (4, 16, 26, 16, 4),
    (1, 4, 7, 4, 1),
), 273)

SMOOTH_KERNEL = Kernel5x5((
    (1, 1, 1, 1, 1),
    (1, 4, 4, 4, 1),
    (1, 4, 12, 4, 1),
    (1, 4, 4, 4, 1),
    (1, 1, 1, 1, 1),
), 60)


# PGM -------------------------------------------------------------------------

_WS = b" \t\r\n\v\f"
_P2_TOKEN = re.compile(rb"#[^\r\n]*|[^\s#]+")


def _header_tokens(data: bytes, count: int) -> tuple[list[tuple[bytes, int]], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise PgmError("truncated header", i)
        c = data[i:i + 1]
        if c in _WS:
            i += 1
        elif c == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        else:
            start = i
            while i < len(data) and data[i:i + 1] not in _WS and data[i:i + 1] != b"#":
                i += 1
            tokens.append((data[start:i], start))
    return tokens, i


def _int_token(tok: bytes, offset: int, what: str) -> int:
    if not tok.isdigit():
        raise PgmError(f"bad {what} {tok!r}", offset)
    return int(tok)


def parse_pgm(data: bytes) -> ImageGray:
    tokens, pos = _header_tokens(data, 4)
    magic, off = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"unsupported magic {magic!r}", off)
    width = _int_token(*tokens[1], "width")
    height = _int_token(*tokens[2], "height")
    maxval = _int_token(*tokens[3], "maxval")
    if maxval != 255:
        raise PgmError(f"maxval must be 255, got {maxval}", tokens[3][1])
    npx = width * height

    if magic == b"P5":
        if pos >= len(data) or data[pos:pos + 1] not in _WS:
            raise PgmError("missing whitespace after maxval", pos)
        start = pos + 1
        body = data[start:start + npx]
        if len(body) < npx:
            raise PgmError(f"truncated raster: expected {npx} bytes, got {len(body)}",
                           start + len(body))
        return ImageGray(width, height, np.frombuffer(body, dtype=np.uint8).copy())

    values = []
    for m in _P2_TOKEN.finditer(data, pos):
        tok = m.group()
        if tok.startswith(b"#"):
            continue
        v = _int_token(tok, m.start(), "pixel")
        if v > 255:
            raise PgmError(f"pixel {v} exceeds maxval", m.start())
        values.append(v)
        if len(values) == npx:
            break
    if len(values) < npx:
        raise PgmError(f"truncated raster: expected {npx} values, got {len(values)}", len(data))
    return ImageGray(width, height, np.array(values, dtype=np.uint8))


def load_pgm(path) -> ImageGray:
    with open(path, "rb") as f:
        return parse_pgm(f.read())


def encode_pgm(img: ImageGray, ascii: bool = False) -> bytes:
    header = f"{'P2' if ascii else 'P5'}\n{img.width} {img.height}\n255\n".encode()
    if not ascii:
        return header + img.pixels.tobytes()
    rows = (" ".join(str(int(v)) for v in row) for row in img.pixels)
    return header + ("\n".join(rows) + "\n").encode()


def save_pgm(img: ImageGray, path, ascii: bool = False) -> None:
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as f:
        f.write(encode_pgm(img, ascii))
    os.replace(tmp, path)


# applications ------------------------------------------------------------------

def _round_div(num: np.ndarray, den: int) -> np.ndarray:
    """Round-half-up integer division, valid for negative numerators."""
    return (2 * num + den) // (2 * den)


def _to_image(values: np.ndarray) -> ImageGray:
    return ImageGray.from_array(np.clip(values, 0, 255).astype(np.uint8))


def image_multiply(x1: ImageGray, x2: ImageGray, mul, faults: FaultPlan = NO_FAULTS) -> ImageGray:
    if (x1.width, x1.height) != (x2.width, x2.height):
        raise ValueError("image dimensions differ")
    a = x1.pixels.ravel().astype(np.uint64)
    b = x2.pixels.ravel().astype(np.uint64)
    idx = np.arange(a.size, dtype=np.uint64)
    p = mul(a, b, faults, idx).astype(np.int64)
    return _to_image(_round_div(p, 255).reshape(x1.height, x1.width))


def convolve_products(x: ImageGray, kernel: Kernel5x5, mul,
                      faults: FaultPlan = NO_FAULTS) -> np.ndarray:
    """Sum of the 25 pixel*coefficient products per pixel (replicate padding).

    Product ``t`` (row-major tap order) of pixel ``p`` draws its faults with
    sample index ``25*p + t``.
    """
    if x.width < 5 or x.height < 5:
        raise ValueError("image must be at least 5x5")
    padded = np.pad(x.pixels, 2, mode="edge").astype(np.uint64)
    h, w = x.height, x.width
    base = np.arange(h * w, dtype=np.uint64) * np.uint64(25)
    acc = np.zeros(h * w, dtype=np.int64)
    for t in range(25):
        dm, dn = divmod(t, 5)
        a = padded[dm:dm + h, dn:dn + w].ravel()
        b = np.full(a.shape, kernel.coefficients[dm][dn], dtype=np.uint64)
        acc += mul(a, b, faults, base + np.uint64(t)).astype(np.int64)
    return acc.reshape(h, w)


def sharpen(x: ImageGray, mul, faults: FaultPlan = NO_FAULTS) -> ImageGray:
    acc = convolve_products(x, SHARPEN_KERNEL, mul, faults)
    d = SHARPEN_KERNEL.divisor
    return _to_image(_round_div(2 * d * x.pixels.astype(np.int64) - acc, d))


def smooth(x: ImageGray, mul, faults: FaultPlan = NO_FAULTS) -> ImageGray:
    acc = convolve_products(x, SMOOTH_KERNEL, mul, faults)
    return _to_image(_round_div(acc, SMOOTH_KERNEL.divisor))


APPS = {"sharpen": sharpen, "smooth": smooth}
