"""Experiment drivers behind the CLI: MSE sweeps, image runs, cost tables."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ConfigError, MulConfig
from .fault import FaultPlan, Mode
from .imaging import APPS, ImageGray, image_multiply
from .metrics import ErrorStats, aggregate, default_d, mssim
from .schemes import cost_report, make_multiplier

SWEEP_COLUMNS = ("scheme", "k", "p_f", "mode", "t", "er", "med", "mred", "mned",
                 "mse", "mse_norm_tmr")
COST_COLUMNS = ("scheme", "n", "k", "mult_cells", "adder_bits", "voter_bits",
                "mult_cells_vs_tmr_percent")
CSV_SCHEMA = {"sweep": "hprmul.sweep/1", "cost": "hprmul.cost/1"}
KNOWN_SCHEMES = ("tmr", "rpr", "hpr")


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop inclusive) or a comma list of values."""
    text = str(text).strip()
    if ":" not in text:
        return tuple(float(v) for v in text.split(",") if v.strip())
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if step <= 0 or stop < start:
        raise ConfigError(f"bad grid {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + i * step, 12) for i in range(count))


@dataclass
class ExperimentConfig:
    schemes: tuple[str, ...] = KNOWN_SCHEMES
    n: int = 8
    ks: tuple[int, ...] = (2, 4, 6)
    p_f: tuple[float, ...] = parse_grid("0.001:0.02:0.001")
    samples: int = 100_000
    mode: str = "input"
    seed: int = 1
    theta: int | None = None
    # execution detail only; never changes results, so not stamped in reports
    workers: int = field(default=1, compare=False)

    def validate(self) -> None:
        if not self.schemes or not self.ks or not self.p_f:
            raise ConfigError("scheme, k and p_f grids must be non-empty")
        for s in self.schemes:
            if s not in KNOWN_SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}")
        for k in self.ks:
            MulConfig(self.n, k)
        for p in self.p_f:
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"p_f {p} outside [0, 1]")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.mode not in ("input", "internal"):
            raise ConfigError("sweep mode must be 'input' or 'internal'")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def stamp(self) -> dict:
        d = asdict(self)
        d.pop("workers")
        return d


def draw_inputs(seed: int, n: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform operand pairs, shared by every scheme run with the same seed."""
    rng = np.random.Generator(np.random.PCG64(seed))
    hi = 1 << n
    a = rng.integers(0, hi, size=t, dtype=np.uint64)
    b = rng.integers(0, hi, size=t, dtype=np.uint64)
    return a, b


def _run_point(args) -> ErrorStats:
    scheme, n, k, p_f, mode, seed, samples, theta = args
    cfg = MulConfig(n, k)
    a, b = draw_inputs(seed, n, samples)
    mul = make_multiplier(scheme, cfg, theta)
    plan = FaultPlan(mode=Mode(mode), p_f=p_f, seed=seed)
    out = mul(a, b, plan, np.arange(samples, dtype=np.uint64))
    return aggregate(a * b, default_d(n), observed=out)


def run_sweep(config: ExperimentConfig) -> list[dict]:
    config.validate()
    # TMR always runs: it is the normalisation reference
    schemes = ("tmr",) + tuple(s for s in config.schemes if s != "tmr")
    jobs = [(s, config.n, k, p, config.mode, config.seed, config.samples, config.theta)
            for k in config.ks for p in config.p_f for s in schemes]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            stats = list(ex.map(_run_point, jobs))
    else:
        stats = [_run_point(j) for j in jobs]

    by_key = {(j[0], j[2], j[3]): st for j, st in zip(jobs, stats)}
    rows = []
    for k in config.ks:
        for p in config.p_f:
            tmr_mse = by_key[("tmr", k, p)].mse
            for s in config.schemes:
                st = by_key[(s, k, p)]
                if s == "tmr":
                    norm = 1.0
                elif tmr_mse == 0:
                    norm = None
                else:
                    norm = st.mse / tmr_mse
                rows.append({"scheme": s, "k": k, "p_f": p, "mode": config.mode,
                             **st.as_dict(), "mse_norm_tmr": norm})
    return rows


def mse_ratio_summary(rows: list[dict], num: str = "hpr", den: str = "rpr") -> dict:
    """Grid-mean of MSE(num)/MSE(den) per K, skipping points where den is zero."""
    out = {}
    ks = sorted({r["k"] for r in rows})
    for k in ks:
        mse = {(r["scheme"], r["p_f"]): r["mse"] for r in rows if r["k"] == k}
        ratios = [mse[(num, p)] / mse[(den, p)] for (s, p) in mse
                  if s == den and mse[(den, p)] > 0 and (num, p) in mse]
        out[k] = sum(ratios) / len(ratios) if ratios else None
    return out


def run_image(app: str, scheme: str, k: int, p_f: float, seed: int,
              x1: ImageGray, x2: ImageGray | None = None, n: int = 8,
              mode: str = "input", theta: int | None = None) -> tuple[ImageGray, dict]:
    cfg = MulConfig(n, k)
    if app not in ("multiply", *APPS):
        raise ConfigError(f"unknown app {app!r}")
    if app == "multiply" and x2 is None:
        raise ConfigError("multiply needs a second input image")
    mul = make_multiplier(scheme, cfg, theta)
    exact = make_multiplier("exact", cfg)
    plan = FaultPlan(mode=Mode(mode), p_f=p_f, seed=seed)
    if app == "multiply":
        out = image_multiply(x1, x2, mul, plan)
        ref = image_multiply(x1, x2, exact)
    else:
        out = APPS[app](x1, mul, plan)
        ref = APPS[app](x1, exact)
    report = {"app": app, "scheme": scheme, "k": k, "p_f": p_f, "seed": seed,
              "mode": mode, "n": n, "mssim_vs_faultfree_exact": mssim(out, ref)}
    return out, report


def cost_rows(schemes, n: int, ks) -> list[dict]:
    rows = []
    for k in ks:
        cfg = MulConfig(n, k)
        tmr_cells = cost_report("tmr", cfg).mult_cells
        for s in schemes:
            c = cost_report(s, cfg)
            rows.append({"scheme": s, "n": n, "k": k, "mult_cells": c.mult_cells,
                         "adder_bits": c.adder_bits, "voter_bits": c.voter_bits,
                         "mult_cells_vs_tmr_percent":
                             round(100.0 * (1 - c.mult_cells / tmr_cells), 1)})
    return rows
