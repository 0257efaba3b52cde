"""Command-line front end.

Every subcommand resolves its parameters as defaults < JSON config file <
flags, validates them, runs one experiment and writes CSV/JSON files into
the output directory (``--output-dir``, overridden by ``YINYANG_OUTPUT_DIR``).
Each file starts with a metadata block carrying the config hash and the
package and library versions; no timestamps are written, so equal
configurations give byte-identical files.

Exit codes: 0 ok, 2 invalid configuration, 3 numerical failure, 4 failed
acceptance check under ``--strict``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .errors import YinYangError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 2, 3, 4


class ConfigError(ValueError):
    """Invalid or inconsistent command parameters."""


DEFAULTS: Dict[str, dict] = {
    "soliton": {"theta_min": 8.0, "theta_max": 2000.0, "step": 0.5, "order": 6},
    "cap": {"t": -100.0, "K": 10.0, "B": -1.0, "nodes": 4001, "uncorrected": False},
    "deficit": {"t_start": -1000.0, "t_end": -25.0, "ratio": 1.1, "K": 10.0, "fit": False},
    "flow": {"t0": -100.0, "t_end": -90.0, "nodes": 4000, "snapshot_every": 1.0, "record_every": 0.5,
             "rho": 1e-2, "remesh_every": 400, "rays": [0.0, 0.5 * np.pi, np.pi], "leaves": [0.0]},
    "homotopy": {"kind": "nested", "t_end": 0.3, "dt": 1e-3, "nodes": 400, "slices": 33,
                 "window": 2.0, "t0": -200.0, "outputs": 5},
    "report": {"criteria": list(range(1, 12))},
}


# ---------------------------------------------------------------------------
# config handling


def resolve_config(command: str, file_cfg: Optional[dict], flags: dict) -> dict:
    """Merge defaults, the command's section of the config file and flags."""
    cfg = dict(DEFAULTS[command])
    if file_cfg:
        section = file_cfg.get(command, {k: v for k, v in file_cfg.items() if k in cfg})
        unknown = set(section) - set(cfg) - {"seed", "output_dir"}
        if unknown:
            raise ConfigError(f"unknown {command} keys: {sorted(unknown)}")
        cfg.update(section)
        for k in ("seed", "output_dir"):
            if k in file_cfg:
                cfg.setdefault(k, file_cfg[k])
    cfg.update({k: v for k, v in flags.items() if v is not None})
    cfg.setdefault("seed", 0)
    return cfg


def validate(command: str, cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    if command == "soliton":
        need(8.0 <= cfg["theta_min"] < cfg["theta_max"] <= 1e5, "need 8 <= theta_min < theta_max <= 1e5")
        need(cfg["step"] > 0, "step must be positive")
        need(0 <= int(cfg["order"]) <= 12, "order must be in [0, 12]")
    elif command == "cap":
        need(cfg["t"] <= -25.0, "cap needs t <= -25")
        need(cfg["K"] > 0 and int(cfg["nodes"]) >= 11, "need K > 0 and nodes >= 11")
    elif command == "deficit":
        need(cfg["t_start"] < cfg["t_end"] <= -25.0, "need t_start < t_end <= -25")
        need(cfg["ratio"] > 1.0, "ratio must exceed 1")
    elif command == "flow":
        need(cfg["t0"] < cfg["t_end"] <= -25.0, "need t0 < t_end <= -25")
        need(0 < cfg["rho"] < 1.0, "rho must lie in (0, 1)")
        need(int(cfg["nodes"]) > 0 and cfg["snapshot_every"] > 0, "nodes and snapshot cadence must be positive")
    elif command == "homotopy":
        need(cfg["kind"] in ("nested", "star", "window"), "kind must be nested, star or window")
        need(int(cfg["slices"]) >= 2 and int(cfg["nodes"]) >= 16, "need slices >= 2 and nodes >= 16")
        need(cfg["dt"] > 0 and cfg["t_end"] > 0, "dt and t_end must be positive")
        if cfg["kind"] == "window":
            need(cfg["t0"] <= -25.0 and cfg["window"] > 0, "window runs need t0 <= -25 and window > 0")
    elif command == "report":
        need(all(1 <= int(c) <= 11 for c in cfg["criteria"]), "criteria are numbered 1 to 11")


def config_hash(command: str, cfg: dict) -> str:
    blob = json.dumps({"command": command, **{k: v for k, v in cfg.items() if k != "output_dir"}},
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata(command: str, cfg: dict) -> dict:
    return {"command": command, "config_hash": config_hash(command, cfg),
            "versions": {"yinyang": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
            "config": {k: v for k, v in sorted(cfg.items()) if k != "output_dir"}}


# ---------------------------------------------------------------------------
# writers


class Writer:
    """Writes files with a shared metadata block into one directory."""

    def __init__(self, out_dir: Path, meta: dict):
        self.out_dir = out_dir
        self.meta = meta
        self.written: List[str] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> Path:
        columns = list(columns or (rows[0].keys() if rows else []))
        buf = io.StringIO()
        buf.write(f"# yinyang {self.meta['command']} config_hash={self.meta['config_hash']} "
                  + " ".join(f"{k}={v}" for k, v in self.meta["versions"].items()) + "\n")
        w = csv.DictWriter(buf, columns, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k, "")) for k in columns})
        return self._put(name, buf.getvalue())

    def json(self, name: str, data: dict) -> Path:
        return self._put(name, json.dumps({"meta": self.meta, **data}, indent=1, sort_keys=True,
                                          default=_jsonable) + "\n")

    def _put(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        path.write_text(text)
        self.written.append(name)
        return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    return str(v)


# ---------------------------------------------------------------------------
# commands


def cmd_soliton(cfg: dict, out: Writer) -> int:
    from .acceptance import remainder_slopes
    from .soliton import default_table, expansion_coefficients

    order = int(cfg["order"])
    theta = np.arange(cfg["theta_min"], cfg["theta_max"] + 0.5 * cfg["step"], cfg["step"])
    if order == 0:
        # leading order: u = 0, R = sqrt(2 theta)
        R = np.sqrt(2.0 * theta)
        rows = [{"theta": a, "u": 0.0, "R": b, "Rprime": 1.0 / b} for a, b in zip(theta, R)]
    else:
        table = default_table() if cfg["theta_max"] <= 2000.0 else None
        if table is None:
            from .soliton import integrate_u
            table = integrate_u(cfg["theta_max"] + 10.0)
        R, Rp = table.R(theta), table.Rprime(theta)
        rows = [{"theta": a, "u": a - 0.5 * b * b, "R": b, "Rprime": c} for a, b, c in zip(theta, R, Rp)]
    out.csv("table.csv", rows, ["theta", "u", "R", "Rprime"])
    data = {"order": order}
    if order >= 1:
        co = expansion_coefficients(order)
        data["c"] = [str(x) for x in co.c]
        data["c_float"] = [float(x) for x in co.c]
        data["u"] = [str(x) for x in co.u]
        orders = [n for n in (1, 2, 3) if n < order]
        if orders:
            data["remainder_slopes"] = {str(n): s for n, s in remainder_slopes(orders).items()}
    out.json("coeffs.json", data)
    return EXIT_OK


def cmd_cap(cfg: dict, out: Writer) -> int:
    from .cap import build_cap
    from .deficit import cap_deficit_W

    cap = build_cap(cfg["t"], cfg["K"], int(cfg["nodes"]), B=cfg["B"], corrected=not cfg["uncorrected"])
    W = cap_deficit_W(cap)
    X = cap.ambient()
    rows = [{"p": p, "Z1": z[0], "Z2": z[1], "x": x[0], "y": x[1], "F": F, "W": w}
            for p, z, x, F, w in zip(cap.p, cap.Z, X, cap.F, W)]
    out.csv("cap.csv", rows)
    out.json("cap_summary.json", {"t": cap.t, "tau": cap.tau, "sup_W": float(np.abs(W).max())})
    return EXIT_OK


def cmd_deficit(cfg: dict, out: Writer) -> int:
    from .deficit import deficit_report, fit_power_law, geometric_time_grid

    times = geometric_time_grid(cfg["t_start"], cfg["t_end"], cfg["ratio"])
    rows = [deficit_report(t, cfg["K"]).row() for t in times]
    cols = ["t", "tau", "cap_sup", "cap_l1", "trans_l1", "total_l1"]
    out.csv("deficit.csv", rows, cols)
    if cfg["fit"]:
        tau = np.array([r["tau"] for r in rows])
        fits = {}
        for c in cols[2:]:
            s, b, se = fit_power_law(tau, np.array([r[c] for r in rows]))
            fits[c] = {"slope": s, "intercept": b, "stderr": se}
        out.json("slopes.json", {"fits": fits})
    return EXIT_OK


def _square_spec(cfg: dict):
    from .flow import SquareProfileSpec, square_profile_points
    from .soliton import default_table

    spec = SquareProfileSpec(cfg["t0"], rounding_radius=cfg["rho"])
    n = len(square_profile_points(spec, default_table())[0])
    # refine the spacing until the node budget is met
    while n < int(cfg["nodes"]):
        f = max(n / int(cfg["nodes"]), 0.5)
        spec = SquareProfileSpec(cfg["t0"], rounding_radius=cfg["rho"], h_max=spec.h_max * f,
                                 c_kappa=spec.c_kappa * f)
        n = len(square_profile_points(spec, default_table())[0])
    return spec


def cmd_flow(cfg: dict, out: Writer) -> int:
    from .flow import run_experiment

    spec = _square_spec(cfg)
    res = run_experiment(spec, cfg["t_end"], rays=tuple(cfg["rays"]), leaves=tuple(cfg["leaves"]),
                         record_every=cfg["record_every"], remesh_every=int(cfg["remesh_every"]),
                         snapshot_every=cfg["snapshot_every"])
    out.csv("diagnostics.csv", [f.row() for f in res.frames])
    snaps = []
    for i, (t, P) in enumerate(res.snapshots):
        name = f"snapshot_{i:04d}.json"
        frame = min(res.frames, key=lambda f: abs(f.t - t))
        out.json(name, {"t": t, "points": P, "diagnostics": frame.row()})
        snaps.append(name)
    out.json("manifest.json", {"snapshots": snaps, "energy_integral": res.energy_integral,
                               "length_drop": res.length_drop, "violations": res.violations,
                               "nodes_initial": len(res.snapshots[0][1]), "nodes_final": len(res.final.points)})
    return EXIT_OK


def cmd_homotopy(cfg: dict, out: Writer) -> int:
    from .homotopy import (FlowParams, contraction_violations, evolve_homotopy, normalize_homotopy,
                           radial_sheet, random_star_sheet, square_window_run)

    if cfg["kind"] == "window":
        t1 = cfg["t0"] + cfg["window"]
        wr = square_window_run(cfg["t0"], t1, FlowParams(window=cfg["window"]), outputs=int(cfg["outputs"]))
        rows = [{"t": t, "area_approx": a, "area_omega": b}
                for t, a, b in zip(wr.times, wr.area_approx, wr.area_omega)]
        out.csv("window_areas.csv", rows)
        out.json("window.json", {"A0": wr.A0, "final_points": wr.final.points})
        return EXIT_OK
    n = int(cfg["nodes"])
    if cfg["kind"] == "nested":
        th = np.arange(n) * (2 * np.pi / n)
        E = np.column_stack([np.cos(th), np.sin(th)])
        sheet = radial_sheet(E, 2 * E, int(cfg["slices"]))
    else:
        rng = np.random.default_rng(int(cfg["seed"]))
        sheet = normalize_homotopy(random_star_sheet(rng, n_nodes=n, n_slices=int(cfg["slices"])))
    out.json("sheet_initial.json", {"sheet": sheet.to_json()})
    final = evolve_homotopy(sheet, 0.0, cfg["t_end"], cfg["dt"])
    out.csv("length.csv", final.history.to_rows(), ["t", "length", "renormalized"])
    out.json("sheet_final.json", {"sheet": final.to_json(),
                                  "violations": contraction_violations(final.history)})
    return EXIT_OK


def cmd_report(cfg: dict, out: Writer, strict: bool = False) -> int:
    from .acceptance import run_all

    results = run_all([int(c) for c in cfg["criteria"]], echo=print)
    lines = [r.line() for r in results]
    out._put("report.txt", "\n".join(lines) + "\n")
    out.json("report.json", {"criteria": [r.to_json() for r in results]})
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if strict and failed else EXIT_OK


COMMANDS = {"soliton": cmd_soliton, "cap": cmd_cap, "deficit": cmd_deficit, "flow": cmd_flow,
            "homotopy": cmd_homotopy, "report": cmd_report}


# ---------------------------------------------------------------------------
# argument parsing


def _floats(s: str) -> List[float]:
    return [float(x) for x in s.split(",") if x]


def _ints(s: str) -> List[int]:
    return [int(x) for x in s.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--output-dir", type=Path, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--strict", action="store_true", help="exit 4 if an acceptance check fails")

    p = argparse.ArgumentParser(prog="yinyang", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("soliton", parents=[common], help="soliton table and expansion coefficients")
    s.add_argument("--theta-min", type=float)
    s.add_argument("--theta-max", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--order", type=int)

    s = sub.add_parser("cap", parents=[common], help="corrected Grim Reaper cap and its deficit")
    s.add_argument("--t", type=float)
    s.add_argument("--K", type=float)
    s.add_argument("--B", type=float)
    s.add_argument("--nodes", type=int)
    s.add_argument("--uncorrected", action="store_const", const=True)

    s = sub.add_parser("deficit", parents=[common], help="deficit of the approximate solution over time")
    s.add_argument("--t-start", type=float)
    s.add_argument("--t-end", type=float)
    s.add_argument("--ratio", type=float)
    s.add_argument("--K", type=float)
    s.add_argument("--fit", action="store_const", const=True)

    s = sub.add_parser("flow", parents=[common], help="square-profile flow with monitors")
    s.add_argument("--t0", type=float)
    s.add_argument("--t-end", type=float)
    s.add_argument("--nodes", type=int)
    s.add_argument("--snapshot-every", type=float)
    s.add_argument("--record-every", type=float)
    s.add_argument("--rho", type=float, help="corner rounding radius")
    s.add_argument("--remesh-every", type=int)
    s.add_argument("--rays", type=_floats)
    s.add_argument("--leaves", type=_floats)

    s = sub.add_parser("homotopy", parents=[common], help="homotopy length under the flow")
    s.add_argument("--kind", choices=["nested", "star", "window"])
    s.add_argument("--t-end", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--nodes", type=int)
    s.add_argument("--slices", type=int)
    s.add_argument("--window", type=float)
    s.add_argument("--t0", type=float)
    s.add_argument("--outputs", type=int)

    s = sub.add_parser("report", parents=[common], help="acceptance summary")
    s.add_argument("--all", action="store_true")
    s.add_argument("--criteria", type=_ints)
    return p


def main(argv: Optional[Iterable[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(None if argv is None else list(argv))
    command = args.command
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "output_dir", "strict", "all")}
    try:
        file_cfg = json.loads(args.config.read_text()) if args.config else None
        cfg = resolve_config(command, file_cfg, flags)
        validate(command, cfg)
    except (ConfigError, OSError, json.JSONDecodeError) as e:
        print(f"yinyang {command}: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = os.environ.get("YINYANG_OUTPUT_DIR") or args.output_dir or cfg.get("output_dir") or "yinyang_out"
    out = Writer(Path(out_dir), metadata(command, cfg))
    try:
        if command == "report":
            code = cmd_report(cfg, out, args.strict)
        else:
            code = COMMANDS[command](cfg, out)
    except YinYangError as e:
        print(f"yinyang {command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(e, ValueError) else EXIT_NUMERIC
    except (ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"yinyang {command}: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    for name in out.written:
        if command != "flow" or not name.startswith("snapshot_"):
            print(Path(out_dir) / name)
    return code


if __name__ == "__main__":
    sys.exit(main())
