"""Command-line experiment runner.

Every subcommand writes CSV data plus a ``*.meta.json`` file recording the
full configuration, so a run can be reproduced from its outputs alone.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import RunConfig
from .criticality import critical_points_pql, critical_times, gapless_momenta, on_phase_boundary
from .errors import (ConfigurationError, DegenerateBandError, FloquetError, ParameterError,
                     UndefinedPhaseError)
from .floquet_core import band_arrays
from .geometry import dtop, phase_trace
from .observables import detect_cusps, k_grid, rate_function, s_grid
from .protocols import PERIOD, make_pql

log = logging.getLogger("floquet_dqpt")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_IO = 4


def write_csv(path: Path, header, columns):
    cols = [np.asarray(c) for c in columns]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def write_json(path: Path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        return val if math.isfinite(val) else None
    return obj


def metadata(cfg: RunConfig, command: str, **extra) -> dict:
    meta = {"command": command, "config": cfg.to_dict(), "period": PERIOD}
    meta.update(extra)
    return meta


def config_from_metadata(meta: dict) -> RunConfig:
    """Rebuild the run configuration stored in a metadata file."""
    return cfgmod.build(meta["config"])


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _protocol(cfg: RunConfig):
    return make_pql(cfg.J_x, cfg.J_y)


def _times(cfg: RunConfig):
    return s_grid(cfg.s_count)


def cmd_spectrum(cfg: RunConfig) -> dict:
    proto = _protocol(cfg)
    out = _outdir(cfg)
    ks = k_grid(cfg.k_count)
    hx, hy = proto.fields(ks)
    E, n, sinE = band_arrays(hx, hy)
    gapless = sinE < 1e-9
    write_csv(out / "spectrum.csv", ["k", "E", "n_x", "n_y", "n_z", "gapless"],
              [ks, E, n[0], n[1], n[2], gapless])
    summary = {"min_sin_E": float(sinE.min()), "gapless_samples": int(gapless.sum()),
               "gapless_momenta": [[g.k_0, g.m, g.n] for g in gapless_momenta(proto)]}
    write_json(out / "spectrum.meta.json", metadata(cfg, "spectrum", protocol=proto.describe(), **summary))
    return summary


def cmd_rate(cfg: RunConfig) -> dict:
    proto = _protocol(cfg)
    out = _outdir(cfg)
    trace = rate_function(proto, _times(cfg), cfg.k_count)
    preds = critical_points_pql(cfg.J_x, cfg.J_y)
    report = detect_cusps(trace, preds, threshold=cfg.cusp_threshold)
    t, f = trace.periodic(cfg.periods)
    write_csv(out / "rate.csv", ["t", "f"], [t, f])
    write_json(out / "cusps.json", report.to_dict())
    write_json(out / "critical.json", [p.to_dict() for p in preds])
    write_json(out / "rate.meta.json", metadata(cfg, "rate", protocol=proto.describe(), g_min=trace.g_min))
    return {"detected": report.times, "predicted": report.predicted,
            "matched": len(report.matched), "unmatched_predicted": report.unmatched_predicted,
            "unmatched_detected": report.unmatched_detected}


def cmd_dtop(cfg: RunConfig, heatmap: bool = False) -> dict:
    proto = _protocol(cfg)
    out = _outdir(cfg)
    s = _times(cfg)
    t = np.concatenate([s + PERIOD * ell for ell in range(cfg.periods)])
    trace = dtop(proto, cfg.band, t, k_count=cfg.dtop_k_count, k_range=cfg.dtop_range)
    write_csv(out / "dtop.csv", ["t", "w"], [t, trace.w])
    write_json(out / "dtop.json", trace.to_dict())
    if heatmap:
        ph = phase_trace(proto, cfg.band, s, cfg.k_count)
        kk, ss = np.meshgrid(ph.k_grid, ph.s_grid, indexing="ij")
        write_csv(out / "geometric_phase.csv", ["k", "s", "phi_G"],
                  [kk.ravel(), ss.ravel(), ph.geometric.ravel()])
    write_json(out / "dtop.meta.json", metadata(cfg, "dtop", protocol=proto.describe()))
    return {"jumps": trace.jumps, "non_quantized": trace.non_quantized}


def cmd_critical(cfg: RunConfig) -> dict:
    proto = _protocol(cfg)
    out = _outdir(cfg)
    preds = critical_points_pql(cfg.J_x, cfg.J_y)
    gap = gapless_momenta(proto)
    flag, wit = on_phase_boundary(cfg.J_x, cfg.J_y)
    write_json(out / "critical.json", [p.to_dict() for p in preds])
    payload = {"critical_times": critical_times(preds),
               "gapless_momenta": [{"k_0": g.k_0, "m": g.m, "n": g.n} for g in gap],
               "on_boundary": flag, "witnesses": [list(w) for w in wit]}
    write_json(out / "critical.meta.json", metadata(cfg, "critical", **payload))
    return payload


def phase_point(jx: float, jy: float) -> dict:
    J_x, J_y = jx * math.pi, jy * math.pi
    flag, wit = on_phase_boundary(J_x, J_y)
    proto = make_pql(J_x, J_y)
    first_half = [t for t in critical_times(critical_points_pql(J_x, J_y))]
    return {"jx_over_pi": jx, "jy_over_pi": jy, "on_boundary": flag,
            "witnesses": ";".join(f"{m}/{n}" for m, n in wit),
            "gapless_count": len(gapless_momenta(proto)),
            "critical_time_count": len(first_half)}


def cmd_phase_diagram(cfg: RunConfig) -> list:
    if cfg.sweep is None:
        raise ConfigurationError("phase-diagram needs sweep_jx and sweep_jy")
    out = _outdir(cfg)
    rows = [phase_point(jx, jy) for jx, jy in cfg.sweep.points()]
    keys = ["jx_over_pi", "jy_over_pi", "on_boundary", "witnesses", "gapless_count", "critical_time_count"]
    write_csv(out / "phase_diagram.csv", keys, [[r[k] for r in rows] for k in keys])
    write_json(out / "phase_diagram.meta.json", metadata(cfg, "phase-diagram"))
    return rows


def _sweep_worker(args):
    cfg, jx, jy = args
    sub = cfgmod.with_point(cfg, jx, jy)
    sub = cfgmod.build({**sub.to_dict(), "out": str(Path(cfg.out) / f"jx{jx!r}_jy{jy!r}")})
    try:
        res = cmd_rate(sub)
        return {"jx_over_pi": jx, "jy_over_pi": jy, "status": "ok",
                "detected": len(res["detected"]), "predicted": len(res["predicted"]), "error": ""}
    except (FloquetError, OSError) as exc:
        return {"jx_over_pi": jx, "jy_over_pi": jy, "status": "failed",
                "detected": -1, "predicted": -1, "error": f"{type(exc).__name__}: {exc}"}


def cmd_sweep(cfg: RunConfig) -> list:
    """Rate-function run at every sweep point; failures are recorded per point."""
    if cfg.sweep is None:
        raise ConfigurationError("sweep needs sweep_jx and sweep_jy")
    out = _outdir(cfg)
    jobs = [(cfg, jx, jy) for jx, jy in cfg.sweep.points()]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(j) for j in jobs]
    keys = ["jx_over_pi", "jy_over_pi", "status", "detected", "predicted", "error"]
    write_csv(out / "sweep.csv", keys, [[r[k] for r in rows] for k in keys])
    write_json(out / "sweep.meta.json", metadata(cfg, "sweep"))
    return rows


COMMANDS = {
    "spectrum": cmd_spectrum,
    "rate": cmd_rate,
    "dtop": cmd_dtop,
    "critical": cmd_critical,
    "phase-diagram": cmd_phase_diagram,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floquet-dqpt",
                                     description="Floquet DQPT simulator for periodically quenched lattices")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--jx", dest="jx_over_pi", type=float, help="J_x in units of pi")
        p.add_argument("--jy", dest="jy_over_pi", type=float, help="J_y in units of pi")
        p.add_argument("--band", type=int, choices=(-1, 1))
        p.add_argument("--k-count", dest="k_count", type=int)
        p.add_argument("--s-count", dest="s_count", type=int)
        p.add_argument("--periods", type=int)
        p.add_argument("--dtop-range", dest="dtop_range", choices=cfgmod.RANGE_MODES)
        p.add_argument("--dtop-k-count", dest="dtop_k_count", type=int)
        p.add_argument("--cusp-threshold", dest="cusp_threshold", type=float)
        p.add_argument("--sweep-jx", dest="sweep_jx", help="start:stop:step in units of pi")
        p.add_argument("--sweep-jy", dest="sweep_jy", help="start:stop:step in units of pi")
        p.add_argument("--workers", type=int)
        if name == "dtop":
            p.add_argument("--heatmap", action="store_true", help="also write the geometric-phase heatmap")
    return parser


def resolve_config(args) -> RunConfig:
    values = cfgmod.load(args.config) if args.config else {}
    for key in cfgmod.KNOWN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    return cfgmod.build(values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "dtop":
            result = cmd_dtop(cfg, heatmap=args.heatmap)
        else:
            result = COMMANDS[args.command](cfg)
    except (ConfigurationError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateBandError, UndefinedPhaseError) as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(_jsonable(result), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
