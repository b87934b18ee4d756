"""Redundant multipliers: typical TMR, baseline RPR and HPR.

The ``*_array`` functions simulate a batch of samples at once.  ``index``
holds the per-sample indices that key the fault streams; when omitted it
defaults to ``0..len(a)-1``.  The scalar ``tmr_mul``/``rpr_mul``/``hpr_mul``
wrappers take :class:`UWord` operands and return a :class:`SchemeOutput`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import core
from .core import ConfigError, MulConfig, UWord, mask
from .fault import NO_FAULTS, Bus, FaultPlan, Injector, Replica

FP, RP1, RP2 = Replica.FP, Replica.RP1, Replica.RP2


@dataclass(frozen=True)
class RprConfig:
    cfg: MulConfig
    theta: int | None = None

    def __post_init__(self):
        if self.theta is not None and self.theta < 0:
            raise ConfigError("theta must be non-negative")

    @property
    def threshold(self) -> int:
        return rpr_default_threshold(self.cfg) if self.theta is None else self.theta


@dataclass(frozen=True)
class SchemeOutput:
    value: UWord
    trace: dict | None = None


@dataclass(frozen=True)
class CostReport:
    scheme: str
    n: int
    k: int
    mult_cells: int
    adder_bits: int
    voter_bits: int

    @property
    def total(self) -> int:
        return self.mult_cells + self.adder_bits + self.voter_bits


def bitwise_majority(x, y, z):
    """Per-bit 2-of-3 vote.  Works on ints, numpy arrays or equal-width UWords."""
    if isinstance(x, UWord):
        if not x.width == y.width == z.width:
            raise ConfigError("voter inputs must share one width")
        return UWord(x.width, bitwise_majority(x.value, y.value, z.value))
    return (x & y) | (y & z) | (x & z)


def rpr_default_threshold(cfg: MulConfig) -> int:
    """Largest fault-free gap between A*B and its truncated estimate."""
    h, k = cfg.n - cfg.k, cfg.k
    return 2 * ((1 << h) - 1) * ((1 << k) - 1) * (1 << k) + ((1 << k) - 1) ** 2


def _indices(a, index):
    if index is None:
        return np.arange(a.shape[0], dtype=np.uint64)
    return np.broadcast_to(core.as_u64(index), a.shape)


def _block_fp(inj: Injector, replica: Replica, a, b, cfg: MulConfig):
    """Block-level N-bit multiplier up to the lower sum; returns (p_hh, S)."""
    a = inj(replica, Bus.INPUT_A, a)
    b = inj(replica, Bus.INPUT_B, b)
    p_hh, p_hl, p_lh, p_ll = core.block_partials_array(a, b, cfg)
    p_hh = inj(replica, Bus.P_HH, p_hh)
    p_hl = inj(replica, Bus.P_HL, p_hl)
    p_lh = inj(replica, Bus.P_LH, p_lh)
    p_ll = inj(replica, Bus.P_LL, p_ll)
    s = inj(replica, Bus.LOWER_SUM, core.lower_sum_array(p_hl, p_lh, p_ll, cfg))
    return p_hh, s


def _full_multiplier(inj: Injector, replica: Replica, a, b, cfg: MulConfig):
    p_hh, s = _block_fp(inj, replica, a, b, cfg)
    out = inj(replica, Bus.FP_SUM_OUT, core.compose_product_array(p_hh, s, cfg))
    return inj(replica, Bus.VOTER_IN, out)


def tmr_array(a, b, cfg: MulConfig, plan: FaultPlan = NO_FAULTS, index=None,
              trace: dict | None = None) -> np.ndarray:
    a, b = core.as_u64(a), core.as_u64(b)
    inj = Injector(plan, "tmr", cfg, _indices(a, index))
    outs = [_full_multiplier(inj, r, a, b, cfg) for r in (FP, RP1, RP2)]
    voted = bitwise_majority(*outs)
    if trace is not None:
        trace.update(replicas=outs, voted=voted)
    return voted


def rpr_array(a, b, cfg: MulConfig, plan: FaultPlan = NO_FAULTS, index=None,
              theta: int | None = None, trace: dict | None = None) -> np.ndarray:
    a, b = core.as_u64(a), core.as_u64(b)
    inj = Injector(plan, "rpr", cfg, _indices(a, index))
    k = np.uint64(cfg.k)
    theta = rpr_default_threshold(cfg) if theta is None else theta

    fp = _full_multiplier(inj, FP, a, b, cfg)
    rps = []
    for r in (RP1, RP2):
        ra = inj(r, Bus.INPUT_A, a >> k)
        rb = inj(r, Bus.INPUT_B, b >> k)
        prod = inj(r, Bus.PRODUCT, ra * rb)
        rps.append(inj(r, Bus.VOTER_IN, prod))
    rp1, rp2 = rps

    scaled = rp1 << np.uint64(2 * cfg.k)
    # |FP - RP1| in uint64 without wraparound
    diff = np.where(fp >= scaled, fp - scaled, scaled - fp)
    fp_ok = diff <= np.uint64(theta)
    rp_disagree = rp1 != rp2
    out = np.where(fp_ok | rp_disagree, fp, scaled) & np.uint64(mask(cfg.out_width))
    if trace is not None:
        decision = np.where(fp_ok, "fp", np.where(rp_disagree, "fp_rp_fault", "rp"))
        trace.update(replicas=[fp, rp1, rp2], diff=diff, decision=decision, voted=out)
    return out


def hpr_array(a, b, cfg: MulConfig, plan: FaultPlan = NO_FAULTS, index=None,
              trace: dict | None = None) -> np.ndarray:
    a, b = core.as_u64(a), core.as_u64(b)
    inj = Injector(plan, "hpr", cfg, _indices(a, index))
    k = np.uint64(cfg.k)
    k2 = np.uint64(2 * cfg.k)
    hi_mask = np.uint64(mask(cfg.rp_width))

    p_hh, s = _block_fp(inj, FP, a, b, cfg)
    # forwarded bus: carry into the upper adders, low bits bypass the voter
    carry_hi = s >> k2
    low = s & np.uint64(mask(2 * cfg.k))
    fp_hi = inj(FP, Bus.FP_SUM_OUT, (p_hh + carry_hi) & hi_mask)
    voter = [inj(FP, Bus.VOTER_IN, fp_hi)]
    for r in (RP1, RP2):
        ra = inj(r, Bus.INPUT_A, a >> k)
        rb = inj(r, Bus.INPUT_B, b >> k)
        rp_hh = inj(r, Bus.P_HH, ra * rb)
        rp = inj(r, Bus.RP_ADDER_OUT, (rp_hh + carry_hi) & hi_mask)
        voter.append(inj(r, Bus.VOTER_IN, rp))

    voted_hi = bitwise_majority(*voter)
    out = (voted_hi << k2) | low
    if trace is not None:
        trace.update(replicas=voter, lower_sum=s, carry_hi=carry_hi, low=low,
                     voted_hi=voted_hi, voted=out)
    return out


ARRAY_SCHEMES: dict[str, Callable] = {"tmr": tmr_array, "rpr": rpr_array, "hpr": hpr_array}


def exact_array(a, b, cfg: MulConfig | None = None, plan: FaultPlan = NO_FAULTS,
                index=None, trace=None) -> np.ndarray:
    return core.as_u64(a) * core.as_u64(b)


def make_multiplier(scheme: str, cfg: MulConfig, theta: int | None = None) -> Callable:
    """Bind a scheme to a config: ``mul(a, b, plan, index) -> products``."""
    if scheme == "exact":
        return lambda a, b, plan=NO_FAULTS, index=None: exact_array(a, b)
    if scheme not in ARRAY_SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}")
    fn = ARRAY_SCHEMES[scheme]
    if scheme == "rpr":
        return lambda a, b, plan=NO_FAULTS, index=None: fn(a, b, cfg, plan, index, theta=theta)
    return lambda a, b, plan=NO_FAULTS, index=None: fn(a, b, cfg, plan, index)


# scalar wrappers -----------------------------------------------------------

def _scalar(fn, a: UWord, b: UWord, cfg: MulConfig, faults, sample_index, want_trace, **kw):
    if a.width != cfg.n or b.width != cfg.n:
        raise ConfigError(f"operands must be {cfg.n} bits wide")
    tr = {} if want_trace else None
    out = fn(a.value, b.value, cfg, faults, index=sample_index, trace=tr, **kw)
    if tr is not None:
        tr = {key: (v[0].item() if isinstance(v, np.ndarray) else [x[0].item() for x in v])
              for key, v in tr.items()}
    return SchemeOutput(UWord(cfg.out_width, int(out[0])), tr)


def tmr_mul(a: UWord, b: UWord, cfg: MulConfig, faults: FaultPlan = NO_FAULTS,
            sample_index: int = 0, trace: bool = False) -> SchemeOutput:
    return _scalar(tmr_array, a, b, cfg, faults, sample_index, trace)


def rpr_mul(a: UWord, b: UWord, rcfg: RprConfig, faults: FaultPlan = NO_FAULTS,
            sample_index: int = 0, trace: bool = False) -> SchemeOutput:
    return _scalar(rpr_array, a, b, rcfg.cfg, faults, sample_index, trace,
                   theta=rcfg.threshold)


def hpr_mul(a: UWord, b: UWord, cfg: MulConfig, faults: FaultPlan = NO_FAULTS,
            sample_index: int = 0, trace: bool = False) -> SchemeOutput:
    return _scalar(hpr_array, a, b, cfg, faults, sample_index, trace)


# structural cost proxy -------------------------------------------------------

COST_DISCLAIMER = ("structural proxy (1-bit cell counts); "
                   "not a synthesis, area, delay or power result")


def cost_report(scheme: str, cfg: MulConfig) -> CostReport:
    n, k = cfg.n, cfg.k
    h = n - k
    if scheme == "tmr":
        cells, adders, voter = 3 * n * n, 0, 2 * n
    elif scheme == "rpr":
        cells, adders, voter = n * n + 2 * h * h, 2 * n, 2 * h + 2 * n
    elif scheme == "hpr":
        cells = k * k + 2 * k * h + h * h + 2 * h * h
        adders, voter = 4 * n + 2 * (2 * h), 2 * h
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    return CostReport(scheme, n, k, cells, adders, voter)
