"""Seeded bit-flip noise model.

Every corruptible bus of every scheme is a :class:`SiteId`.  A flip decision
for bit ``j`` of a site on sample ``i`` is a pure function of
``(seed, i, site ordinal, j)`` computed with a splitmix64-style counter hash,
so results do not depend on evaluation order or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

from .core import ConfigError, MulConfig, UWord, mask


class FaultPlanError(ValueError):
    pass


class Mode(str, Enum):
    NONE = "none"
    INPUT = "input"
    INTERNAL = "internal"
    FORCED = "forced"


class Replica(str, Enum):
    # For TMR the three labels simply name replicas 0, 1 and 2.
    FP = "fp"
    RP1 = "rp1"
    RP2 = "rp2"


class Bus(str, Enum):
    INPUT_A = "input_a"
    INPUT_B = "input_b"
    P_HH = "p_hh"
    P_HL = "p_hl"
    P_LH = "p_lh"
    P_LL = "p_ll"
    LOWER_SUM = "lower_sum"
    RP_ADDER_OUT = "rp_adder_out"
    FP_SUM_OUT = "fp_sum_out"
    PRODUCT = "product"
    VOTER_IN = "voter_in"


SCHEMES = ("tmr", "rpr", "hpr")
REPLICAS = (Replica.FP, Replica.RP1, Replica.RP2)

INPUT_BUSES = frozenset({Bus.INPUT_A, Bus.INPUT_B})
# Voter ports are addressable by forced flips and site filters only.
RANDOM_EXCLUDED = frozenset({Bus.VOTER_IN})

# Every full-precision multiplier (TMR replicas, RPR FP, HPR FP) is the same
# block-level N-bit design, so all of them expose the same internal buses.
_FP_BLOCK = (Bus.INPUT_A, Bus.INPUT_B, Bus.P_HH, Bus.P_HL, Bus.P_LH, Bus.P_LL,
             Bus.LOWER_SUM, Bus.FP_SUM_OUT, Bus.VOTER_IN)
_RPR_RP = (Bus.INPUT_A, Bus.INPUT_B, Bus.PRODUCT, Bus.VOTER_IN)
_HPR_RP = (Bus.INPUT_A, Bus.INPUT_B, Bus.P_HH, Bus.RP_ADDER_OUT, Bus.VOTER_IN)

SCHEME_BUSES: dict[str, dict[Replica, tuple[Bus, ...]]] = {
    "tmr": {r: _FP_BLOCK for r in REPLICAS},
    "rpr": {Replica.FP: _FP_BLOCK, Replica.RP1: _RPR_RP, Replica.RP2: _RPR_RP},
    "hpr": {Replica.FP: _FP_BLOCK, Replica.RP1: _HPR_RP, Replica.RP2: _HPR_RP},
}


@dataclass(frozen=True, order=True)
class SiteId:
    scheme: str
    replica: Replica
    bus: Bus

    def __str__(self):
        return f"{self.scheme}.{self.replica.value}.{self.bus.value}"

    @classmethod
    def parse(cls, text: str) -> "SiteId":
        try:
            scheme, replica, bus = text.split(".")
            site = cls(scheme, Replica(replica), Bus(bus))
        except ValueError as exc:
            raise FaultPlanError(f"bad site id {text!r}") from exc
        if site not in SITE_ORDINALS:
            raise FaultPlanError(f"site {text!r} does not exist")
        return site

    @property
    def ordinal(self) -> int:
        return SITE_ORDINALS[self]


ALL_SITES: tuple[SiteId, ...] = tuple(
    SiteId(s, r, b) for s in SCHEMES for r in REPLICAS for b in SCHEME_BUSES[s][r]
)
SITE_ORDINALS = {site: i + 1 for i, site in enumerate(ALL_SITES)}


def scheme_sites(scheme: str) -> tuple[SiteId, ...]:
    return tuple(s for s in ALL_SITES if s.scheme == scheme)


def site_width(site: SiteId, cfg: MulConfig) -> int:
    n, k = cfg.n, cfg.k
    full = site.replica is Replica.FP or site.scheme == "tmr"
    bus = site.bus
    if bus in INPUT_BUSES:
        return n if full else n - k
    if bus is Bus.P_HH:
        return 2 * (n - k)
    if bus in (Bus.P_HL, Bus.P_LH):
        return n
    if bus is Bus.P_LL:
        return 2 * k
    if bus is Bus.LOWER_SUM:
        return cfg.lower_sum_width
    if bus is Bus.FP_SUM_OUT:
        # HPR's FP only sums the upper part; its low 2K bits come from S.
        return 2 * (n - k) if site.scheme == "hpr" else 2 * n
    if bus in (Bus.RP_ADDER_OUT, Bus.PRODUCT):
        return 2 * (n - k)
    if bus is Bus.VOTER_IN:
        return 2 * n if full and site.scheme != "hpr" else 2 * (n - k)
    raise ConfigError(f"unknown bus {bus}")


# counter-based random streams ---------------------------------------------

_M64 = mask(64)
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_SITE_MUL = 0xD6E8FEB86659FD93


def _mix(z: int) -> int:
    z = (z + _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * _C1) & _M64
    z = ((z ^ (z >> 27)) * _C2) & _M64
    return z ^ (z >> 31)


def _mix_np(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_C1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_C2)
    return z ^ (z >> np.uint64(31))


def _to_unit(h):
    # Uniform on (0, 1]: p_f = 0 never flips, p_f = 1 always flips.
    return ((h >> 11) + 1) * 2.0**-53


def _sample_key(seed: int, index: int) -> int:
    return _mix(_mix(seed & _M64) ^ (index & _M64))


def _site_key(sample_key: int, ordinal: int) -> int:
    return _mix(sample_key ^ ((ordinal * _SITE_MUL) & _M64))


@dataclass
class RandomStream:
    key: int
    position: int = 0

    def uniform_at(self, j: int) -> float:
        return _to_unit(_mix((self.key + j) & _M64))

    def next(self) -> float:
        u = self.uniform_at(self.position)
        self.position += 1
        return u


def stream_for(seed: int, sample_index: int, site: SiteId) -> RandomStream:
    return RandomStream(_site_key(_sample_key(seed, sample_index), site.ordinal))


def corrupt(x: UWord, p_f: float, stream: RandomStream) -> UWord:
    """Flip each bit of ``x`` independently when its draw is <= ``p_f``."""
    if not 0.0 <= p_f <= 1.0:
        raise FaultPlanError(f"p_f must lie in [0, 1], got {p_f}")
    flips = 0
    for j in range(x.width):
        if stream.next() <= p_f:
            flips |= 1 << j
    return UWord(x.width, x.value ^ flips)


def flip_mask_array(seed: int, index: np.ndarray, site: SiteId, width: int,
                    p_f: float, sample_keys: np.ndarray | None = None) -> np.ndarray:
    """Vectorised equivalent of :func:`corrupt`'s flip mask for many samples."""
    if sample_keys is None:
        sample_keys = sample_keys_array(seed, index)
    key = _mix_np(sample_keys ^ np.uint64((site.ordinal * _SITE_MUL) & _M64))
    out = np.zeros(key.shape, dtype=np.uint64)
    for j in range(width):
        h = _mix_np(key + np.uint64(j))
        u = _to_unit(h).astype(np.float64)
        out |= (u <= p_f).astype(np.uint64) << np.uint64(j)
    return out


def sample_keys_array(seed: int, index: np.ndarray) -> np.ndarray:
    idx = np.asarray(index, dtype=np.uint64)
    seed_key = np.uint64(_mix(seed & _M64))
    return _mix_np(idx ^ seed_key)


# plans ---------------------------------------------------------------------

@dataclass(frozen=True)
class FaultPlan:
    mode: Mode = Mode.NONE
    p_f: float = 0.0
    seed: int = 0
    site_filter: frozenset[SiteId] | None = None
    forced_flips: tuple[tuple[SiteId, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not 0.0 <= self.p_f <= 1.0:
            raise FaultPlanError(f"p_f must lie in [0, 1], got {self.p_f}")
        if not 0 <= self.seed <= _M64:
            raise FaultPlanError("seed must be an unsigned 64-bit integer")
        if self.forced_flips and self.mode is not Mode.FORCED:
            raise FaultPlanError("forced_flips given but mode is not 'forced'")

    @classmethod
    def forced(cls, flips: Iterable[tuple[SiteId | str, int]]) -> "FaultPlan":
        parsed = tuple(
            (SiteId.parse(s) if isinstance(s, str) else s, int(bit)) for s, bit in flips
        )
        return cls(mode=Mode.FORCED, forced_flips=parsed)

    @property
    def is_clean(self) -> bool:
        if self.mode is Mode.NONE:
            return True
        if self.mode is Mode.FORCED:
            return not self.forced_flips
        return self.p_f == 0.0

    def validate(self, scheme: str, cfg: MulConfig) -> None:
        valid = set(scheme_sites(scheme))
        for site, bit in self.forced_flips:
            if site.scheme != scheme:
                continue
            if site not in valid:
                raise FaultPlanError(f"site {site} does not exist in {scheme}")
            if not 0 <= bit < site_width(site, cfg):
                raise FaultPlanError(
                    f"bit {bit} outside {site} (width {site_width(site, cfg)})")

    def targets(self, site: SiteId) -> bool:
        """Whether random noise (input/internal mode) reaches ``site``."""
        if self.site_filter is not None and site not in self.site_filter:
            return False
        if self.mode is Mode.INPUT:
            return site.bus in INPUT_BUSES
        if self.mode is Mode.INTERNAL:
            return site.bus not in INPUT_BUSES and site.bus not in RANDOM_EXCLUDED
        return False

    def forced_mask(self, site: SiteId) -> int:
        if self.site_filter is not None and site not in self.site_filter:
            return 0
        m = 0
        for s, bit in self.forced_flips:
            if s == site:
                m ^= 1 << bit
        return m

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "p_f": self.p_f,
            "seed": self.seed,
            "site_filter": None if self.site_filter is None
            else sorted(str(s) for s in self.site_filter),
            "forced_flips": [[str(s), b] for s, b in self.forced_flips],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FaultPlan":
        sf = d.get("site_filter")
        return cls(
            mode=Mode(d.get("mode", "none")),
            p_f=float(d.get("p_f", 0.0)),
            seed=int(d.get("seed", 0)),
            site_filter=None if sf is None else frozenset(SiteId.parse(s) for s in sf),
            forced_flips=tuple((SiteId.parse(s), int(b)) for s, b in d.get("forced_flips", ())),
        )


NO_FAULTS = FaultPlan()


def apply_plan(plan: FaultPlan, site: SiteId, clean: UWord, sample_index: int = 0) -> UWord:
    if plan.mode is Mode.FORCED:
        m = plan.forced_mask(site)
        if m > mask(clean.width):
            raise FaultPlanError(f"forced flip outside {site} (width {clean.width})")
        return UWord(clean.width, clean.value ^ m)
    if not plan.targets(site):
        return clean
    return corrupt(clean, plan.p_f, stream_for(plan.seed, sample_index, site))


class Injector:
    """Applies a plan to the buses of one scheme over a batch of samples."""

    def __init__(self, plan: FaultPlan, scheme: str, cfg: MulConfig, index: np.ndarray):
        plan.validate(scheme, cfg)
        self.plan = plan
        self.scheme = scheme
        self.cfg = cfg
        self.index = index
        self.active = not plan.is_clean
        self._keys = None

    def __call__(self, replica: Replica, bus: Bus, value: np.ndarray) -> np.ndarray:
        if not self.active:
            return value
        site = SiteId(self.scheme, replica, bus)
        plan = self.plan
        if plan.mode is Mode.FORCED:
            m = plan.forced_mask(site)
            return value ^ np.uint64(m) if m else value
        if not plan.targets(site):
            return value
        if self._keys is None:
            self._keys = sample_keys_array(plan.seed, self.index)
        width = site_width(site, self.cfg)
        return value ^ flip_mask_array(plan.seed, self.index, site, width, plan.p_f,
                                       sample_keys=self._keys)
