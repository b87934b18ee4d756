"""Command line entry point: ``hprmul {select-k,sweep,image,cost}``.

Settings resolve in order defaults < ``--config`` file < ``HPRMUL_*``
environment variables < command-line flags.  Config files are JSON objects or
flat ``key = value`` lines using the flag names (``pf``, ``scheme``, ``in`` ...).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from .core import ConfigError
from .experiments import (COST_COLUMNS, CSV_SCHEMA, SWEEP_COLUMNS, ExperimentConfig,
                          cost_rows, mse_ratio_summary, parse_grid, run_image, run_sweep)
from .fault import FaultPlanError
from .imaging import PgmError, load_pgm, save_pgm
from .metrics import quality_spec

log = logging.getLogger("hprmul")

ENV_PREFIX = "HPRMUL_"
KEYS = ("n", "k", "qdub", "pf", "samples", "mode", "seed", "scheme", "app", "in",
        "in2", "out", "report", "theta", "workers")


def _read_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            data[key] = value
    out = {}
    for key, value in data.items():
        key = key.replace("-", "_").lower()
        key = {"p_f": "pf", "q_dub": "qdub", "schemes": "scheme", "ks": "k"}.get(key, key)
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    settings = {}
    if args.config:
        settings.update(_read_config_file(args.config))
    for key in KEYS:
        env = os.environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            settings[key] = env
    for key in KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _int_list(value) -> tuple[int, ...]:
    return tuple(int(v) for v in str(value).split(",") if v.strip())


def _str_list(value) -> tuple[str, ...]:
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


def _dump_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


def _write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    os.replace(tmp, path)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r[c] is None else repr(r[c]) if isinstance(r[c], float)
                    else r[c] for c in columns])
    return buf.getvalue()


def _emit_csv(columns, rows, path: str | None) -> None:
    text = _csv_text(columns, rows)
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


# commands ------------------------------------------------------------------------

def cmd_select_k(s: dict) -> int:
    if "qdub" not in s:
        raise ConfigError("select-k needs --qdub")
    n = int(s.get("n", 8))
    q = quality_spec(n, float(s["qdub"]))
    if q.mted < 1:
        log.warning("MTED %.4g < 1: degenerate case, K = 0 (full triplication)", q.mted)
    _dump_json({"n": q.n, "q_dub": q.q_dub, "mted": q.mted, "m": q.m, "k": q.k},
               s.get("report"))
    return 0


def experiment_config(s: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if "scheme" in s:
        cfg.schemes = _str_list(s["scheme"])
    if "n" in s:
        cfg.n = int(s["n"])
    if "k" in s:
        cfg.ks = _int_list(s["k"])
    if "pf" in s:
        cfg.p_f = parse_grid(s["pf"])
    if "samples" in s:
        cfg.samples = int(s["samples"])
    if "mode" in s:
        cfg.mode = str(s["mode"])
    if "seed" in s:
        cfg.seed = int(s["seed"])
    if s.get("theta") not in (None, ""):
        cfg.theta = int(s["theta"])
    if "workers" in s:
        cfg.workers = int(s["workers"])
    cfg.validate()
    return cfg


def cmd_sweep(s: dict) -> int:
    cfg = experiment_config(s)
    rows = run_sweep(cfg)
    _emit_csv(SWEEP_COLUMNS, rows, s.get("out"))
    if s.get("report"):
        summary = {}
        if {"hpr", "rpr"} <= set(cfg.schemes):
            summary = {str(k): v for k, v in mse_ratio_summary(rows).items()}
        _dump_json({"command": "sweep", "csv_schema": CSV_SCHEMA["sweep"],
                    "config": cfg.stamp(), "grid_mean_mse_hpr_over_rpr": summary},
                   s["report"])
    return 0


def cmd_image(s: dict) -> int:
    app = s.get("app")
    if app is None or "in" not in s or "out" not in s:
        raise ConfigError("image needs --app, --in and --out")
    scheme = _str_list(s.get("scheme", "hpr"))
    if len(scheme) != 1:
        raise ConfigError("image runs take exactly one --scheme")
    pf = parse_grid(s.get("pf", "0.01"))
    if len(pf) != 1:
        raise ConfigError("image runs take a single --pf value")
    ks = _int_list(s.get("k", "4"))
    if len(ks) != 1:
        raise ConfigError("image runs take a single --k value")
    x1 = load_pgm(s["in"])
    x2 = load_pgm(s["in2"]) if s.get("in2") else None
    theta = int(s["theta"]) if s.get("theta") not in (None, "") else None
    out, report = run_image(app, scheme[0], ks[0], pf[0], int(s.get("seed", 1)), x1, x2,
                            n=int(s.get("n", 8)), mode=str(s.get("mode", "input")),
                            theta=theta)
    save_pgm(out, s["out"])
    report["config"] = {k: s[k] for k in sorted(s) if k not in ("report", "workers")}
    _dump_json(report, s.get("report"))
    return 0


def cmd_cost(s: dict) -> int:
    schemes = _str_list(s.get("scheme", "tmr,rpr,hpr"))
    ks = _int_list(s.get("k", "1,2,3,4,5,6,7"))
    rows = cost_rows(schemes, int(s.get("n", 8)), ks)
    _emit_csv(COST_COLUMNS, rows, s.get("out"))
    return 0


COMMANDS = {"select-k": cmd_select_k, "sweep": cmd_sweep, "image": cmd_image,
            "cost": cmd_cost}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or key=value config file")
    common.add_argument("--n", type=int, help="operand width N (default 8)")
    common.add_argument("--k", help="split point K, or a comma list")
    common.add_argument("--scheme", help="comma list of tmr,rpr,hpr")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output file (CSV or PGM); stdout if omitted")
    common.add_argument("--report", help="JSON report path")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hprmul", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sk = sub.add_parser("select-k", parents=[common], help="choose K from Q_DUB")
    sk.add_argument("--qdub", type=float, help="quality degradation bound in percent")

    sw = sub.add_parser("sweep", parents=[common], help="MSE sweep over P_f")
    sw.add_argument("--pf", help="start:stop:step or comma list")
    sw.add_argument("--samples", type=int)
    sw.add_argument("--mode", choices=["input", "internal"])
    sw.add_argument("--theta", type=int, help="RPR voter threshold override")
    sw.add_argument("--workers", type=int)

    im = sub.add_parser("image", parents=[common], help="run an image benchmark")
    im.add_argument("--app", choices=["multiply", "sharpen", "smooth"])
    im.add_argument("--in", dest="in", help="input PGM")
    im.add_argument("--in2", help="second input PGM (multiply)")
    im.add_argument("--pf")
    im.add_argument("--mode", choices=["input", "internal"])
    im.add_argument("--theta", type=int)

    sub.add_parser("cost", parents=[common], help="structural cost proxy table")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s: %(message)s")
    try:
        settings = resolve(args)
        return COMMANDS[args.command](settings)
    except (ConfigError, FaultPlanError, PgmError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
