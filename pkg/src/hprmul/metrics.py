"""Error metrics, K selection from a quality bound, and mean SSIM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import ConfigError


@dataclass(frozen=True)
class SamplePair:
    exact: int
    observed: int


def ed(p: SamplePair) -> int:
    return abs(p.exact - p.observed)


@dataclass(frozen=True)
class ErrorStats:
    """Aggregate error metrics over ``t`` samples.

    Integer sums are kept exactly so partial results can be merged in any
    order; ``mred`` is ``None`` when every exact output is zero.
    """

    t: int
    d: int
    n_err: int
    sum_ed: int
    sum_sq: int
    mred_sum: float
    mred_count: int

    @property
    def er(self) -> float:
        return self.n_err / self.t

    @property
    def med(self) -> float:
        return self.sum_ed / self.t

    @property
    def mned(self) -> float:
        return self.sum_ed / (self.t * self.d)

    @property
    def mse(self) -> float:
        return self.sum_sq / self.t

    @property
    def mred(self) -> float | None:
        # samples with a zero exact output are skipped
        if self.mred_count == 0:
            return None
        return self.mred_sum / self.mred_count

    @property
    def mred_skipped(self) -> int:
        return self.t - self.mred_count

    def merge(self, other: "ErrorStats") -> "ErrorStats":
        if self.d != other.d:
            raise ValueError("cannot merge stats with different D")
        return ErrorStats(self.t + other.t, self.d, self.n_err + other.n_err,
                          self.sum_ed + other.sum_ed, self.sum_sq + other.sum_sq,
                          self.mred_sum + other.mred_sum,
                          self.mred_count + other.mred_count)

    def as_dict(self) -> dict:
        return {"t": self.t, "er": self.er, "med": self.med, "mred": self.mred,
                "mned": self.mned, "mse": self.mse}


def default_d(n: int) -> int:
    return ((1 << n) - 1) ** 2


def aggregate(samples, d: int, observed=None) -> ErrorStats:
    """Aggregate metrics.

    ``samples`` is either a sequence of :class:`SamplePair` or, when
    ``observed`` is given, an array of exact outputs paired element-wise with
    ``observed``.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if observed is None:
        pairs = list(samples)
        exact = np.array([p.exact for p in pairs], dtype=np.uint64)
        observed = np.array([p.observed for p in pairs], dtype=np.uint64)
    else:
        exact = np.asarray(samples, dtype=np.uint64)
        observed = np.asarray(observed, dtype=np.uint64)
    t = exact.shape[0]
    if t < 1 or observed.shape != exact.shape:
        raise ValueError("need T >= 1 equally sized exact/observed samples")

    dist = np.where(exact >= observed, exact - observed, observed - exact)
    nz = exact != 0
    rel = dist[nz].astype(np.float64) / exact[nz].astype(np.float64)
    if int(dist.max()) < (1 << 31):
        sum_ed = int(dist.sum(dtype=np.uint64))
        # chunked so every partial uint64 sum is exact
        sq = dist * dist
        chunk = max(1, (1 << 63) // max(1, int(sq.max())))
        sum_sq = sum(int(sq[i:i + chunk].sum(dtype=np.uint64)) for i in range(0, t, chunk))
    else:
        vals = [int(v) for v in dist]
        sum_ed = sum(vals)
        sum_sq = sum(v * v for v in vals)
    return ErrorStats(t=t, d=d, n_err=int(np.count_nonzero(dist)), sum_ed=sum_ed,
                      sum_sq=sum_sq, mred_sum=math.fsum(rel.tolist()),
                      mred_count=int(nz.sum()))


# K selection -----------------------------------------------------------------

@dataclass(frozen=True)
class QualitySpec:
    n: int
    q_dub: float
    mted: float
    m: int
    k: int


def mted(n: int, q_dub: float) -> float:
    if n < 2:
        raise ConfigError("n must be >= 2")
    if not q_dub > 0:
        raise ConfigError(f"Q_DUB must be positive, got {q_dub}")
    return ((1 << n) - 1) * q_dub / 100


def quality_spec(n: int, q_dub: float) -> QualitySpec:
    t = mted(n, q_dub)
    m = 0
    # largest m with 4**m <= MTED; degenerate m = 0 when MTED < 1
    while 4 ** (m + 1) <= t:
        m += 1
    return QualitySpec(n, q_dub, t, m, min(m, n - 1))


def select_k(n: int, q_dub: float) -> int:
    return quality_spec(n, q_dub).k


# SSIM ------------------------------------------------------------------------

@dataclass(frozen=True)
class SsimParams:
    c1: float = (0.01 * 255) ** 2
    c2: float = (0.03 * 255) ** 2
    window: int = 8
    dynamic_range: int = 255

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("SSIM constants must be positive")
        if self.window < 2:
            raise ValueError("window must be >= 2")


def ssim_map(x: np.ndarray, y: np.ndarray, p: SsimParams = SsimParams()) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    if min(x.shape) < p.window:
        raise ValueError("image smaller than the SSIM window")
    w = (p.window, p.window)
    wx = sliding_window_view(x, w)
    wy = sliding_window_view(y, w)
    mx = wx.mean(axis=(-2, -1))
    my = wy.mean(axis=(-2, -1))
    vx = (wx * wx).mean(axis=(-2, -1)) - mx * mx
    vy = (wy * wy).mean(axis=(-2, -1)) - my * my
    cxy = (wx * wy).mean(axis=(-2, -1)) - mx * my
    num = (2 * mx * my + p.c1) * (2 * cxy + p.c2)
    den = (mx * mx + my * my + p.c1) * (vx + vy + p.c2)
    return num / den


def mssim(x, y, p: SsimParams = SsimParams()) -> float:
    """Mean SSIM over all stride-1 uniform windows, clamped to [0, 1]."""
    value = float(ssim_map(np.asarray(x), np.asarray(y), p).mean())
    return min(1.0, max(0.0, value))
