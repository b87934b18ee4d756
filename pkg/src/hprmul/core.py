"""Bit-exact unsigned block-level multiplication.

An N-bit operand is split at bit K into an upper (N-K)-bit half and a lower
K-bit half.  The product is then rebuilt from four smaller blocks::

    A*B = (a_hi*b_hi) << 2K  +  ((a_hi*b_lo + a_lo*b_hi) << K) + a_lo*b_lo
          \\___ p_hh ___/        \\_________ lower sum S __________________/

Scalar entry points work on :class:`UWord`; the ``*_array`` helpers operate
on ``numpy.uint64`` arrays and back the scheme simulators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_WIDTH = 32


class ConfigError(ValueError):
    """Raised on inconsistent bit widths or split points."""


def mask(width: int) -> int:
    return (1 << width) - 1


@dataclass(frozen=True)
class MulConfig:
    n: int
    k: int

    def __post_init__(self):
        if not 2 <= self.n <= MAX_WIDTH:
            raise ConfigError(f"N must be in [2, {MAX_WIDTH}], got {self.n}")
        if not 0 <= self.k < self.n:
            raise ConfigError(f"K must satisfy 0 <= K < N={self.n}, got {self.k}")

    @property
    def hi_width(self) -> int:
        return self.n - self.k

    @property
    def out_width(self) -> int:
        return 2 * self.n

    @property
    def rp_width(self) -> int:
        """Width of the reduced-precision product and of the HPR voter."""
        return 2 * (self.n - self.k)

    @property
    def lower_sum_width(self) -> int:
        return self.n + self.k + 1


@dataclass(frozen=True)
class UWord:
    width: int
    value: int

    def __post_init__(self):
        if self.width < 0:
            raise ConfigError(f"negative width {self.width}")
        if not 0 <= self.value <= mask(self.width):
            raise ConfigError(f"value {self.value} does not fit in {self.width} bits")

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class SplitOperands:
    a_hi: UWord
    a_lo: UWord
    b_hi: UWord
    b_lo: UWord


@dataclass(frozen=True)
class PartialProducts:
    p_hh: UWord
    p_hl: UWord
    p_lh: UWord
    p_ll: UWord


@dataclass(frozen=True)
class LowerSum:
    s: int
    width: int

    def __post_init__(self):
        if not 0 <= self.s <= mask(self.width):
            raise ConfigError(f"lower sum {self.s} exceeds {self.width} bits")


def _check(x: UWord, width: int, what: str = "operand"):
    if x.width != width:
        raise ConfigError(f"{what} width {x.width} != expected {width}")


def split_operand(x: UWord, cfg: MulConfig) -> tuple[UWord, UWord]:
    _check(x, cfg.n)
    return UWord(cfg.hi_width, x.value >> cfg.k), UWord(cfg.k, x.value & mask(cfg.k))


def split_operands(a: UWord, b: UWord, cfg: MulConfig) -> SplitOperands:
    a_hi, a_lo = split_operand(a, cfg)
    b_hi, b_lo = split_operand(b, cfg)
    return SplitOperands(a_hi, a_lo, b_hi, b_lo)


def block_partials(a: UWord, b: UWord, cfg: MulConfig) -> PartialProducts:
    sp = split_operands(a, b, cfg)
    h, k = cfg.hi_width, cfg.k
    return PartialProducts(
        p_hh=UWord(2 * h, sp.a_hi.value * sp.b_hi.value),
        p_hl=UWord(cfg.n, sp.a_hi.value * sp.b_lo.value),
        p_lh=UWord(cfg.n, sp.a_lo.value * sp.b_hi.value),
        p_ll=UWord(2 * k, sp.a_lo.value * sp.b_lo.value),
    )


def lower_sum(pp: PartialProducts, cfg: MulConfig) -> LowerSum:
    s = ((pp.p_hl.value + pp.p_lh.value) << cfg.k) + pp.p_ll.value
    return LowerSum(s & mask(cfg.lower_sum_width), cfg.lower_sum_width)


def forwarded_bus(s: LowerSum, cfg: MulConfig) -> tuple[int, int]:
    """Split S into the carry fed to the upper adders and the bypassing low bits."""
    return s.s >> (2 * cfg.k), s.s & mask(2 * cfg.k)


def compose_product(p_hh: UWord, s: LowerSum, cfg: MulConfig) -> UWord:
    _check(p_hh, cfg.rp_width, "p_hh")
    value = ((p_hh.value << (2 * cfg.k)) + s.s) & mask(cfg.out_width)
    return UWord(cfg.out_width, value)


def exact_mul(a: UWord, b: UWord) -> UWord:
    if a.width != b.width:
        raise ConfigError(f"operand widths differ: {a.width} vs {b.width}")
    return UWord(2 * a.width, a.value * b.value)


# numpy kernels -------------------------------------------------------------

def as_u64(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.uint64))


def block_partials_array(a: np.ndarray, b: np.ndarray, cfg: MulConfig):
    """Return ``(p_hh, p_hl, p_lh, p_ll)`` for arrays of N-bit operands."""
    k = np.uint64(cfg.k)
    lo = np.uint64(mask(cfg.k))
    a_hi, a_lo = a >> k, a & lo
    b_hi, b_lo = b >> k, b & lo
    return a_hi * b_hi, a_hi * b_lo, a_lo * b_hi, a_lo * b_lo


def lower_sum_array(p_hl, p_lh, p_ll, cfg: MulConfig) -> np.ndarray:
    s = ((p_hl + p_lh) << np.uint64(cfg.k)) + p_ll
    return s & np.uint64(mask(cfg.lower_sum_width))


def compose_product_array(p_hh, s, cfg: MulConfig) -> np.ndarray:
    return ((p_hh << np.uint64(2 * cfg.k)) + s) & np.uint64(mask(cfg.out_width))
