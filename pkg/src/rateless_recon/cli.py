"""Command-line front end: experiment sweeps, CSV emission, replay.

Subcommands: efficiency, optimal-va, skr, decode-bench, replay.  Every run
is configured by a line-oriented key=value file plus repeatable --set
overrides (no positional arguments), and every CSV starts with a comment
block echoing the full configuration, so a file can be reproduced
byte-for-byte (timing columns aside) from its own header.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .channel import ChannelParams, channel_snr
from .degree import distribution_by_name
from .keyrate import (
    KeyRateInputs,
    asymptotic_key_rate,
    finite_size_key_rate,
    optimal_va,
    va_for_target_snr,
)
from .session import (
    SessionConfig,
    envelope_efficiency,
    measure_efficiency,
    replay_session,
    run_biawgn_session,
    select_distribution,
)

_TIMING_COLUMNS = {"wall_ms", "decode_ms"}


class UsageError(ValueError):
    pass


# --- configuration -----------------------------------------------------------

def _parse_bool(s):
    if str(s).lower() in ("1", "true", "yes", "on"):
        return True
    if str(s).lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {s!r}")


def _parse_grid(s):
    """Comma list ('-12,-8,0') or 'start:stop:step' inclusive range."""
    s = str(s).strip()
    if ":" in s:
        start, stop, step = (float(v) for v in s.split(":"))
        if step <= 0:
            raise UsageError("grid step must be > 0")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    return [float(v) for v in s.split(",") if v.strip()]


# key -> (parser, default); None default means required
_COMMON = {
    "seed": (int, None),
    "out": (str, "-"),
    "workers": (int, 1),
}

_SCHEMAS = {
    "efficiency": {
        **_COMMON,
        "snr_db_grid": (_parse_grid, None),
        "distributions": (str, "adaptive"),
        "blocks": (int, 20),
        "k": (int, 9900),
        "d": (int, 8),
        "channel": (str, "biawgn"),
        "beta_min": (float, 0.90),
        "beta_start": (float, 0.96),
        "batch": (int, 0),
        "max_iters": (int, 150),
        "llr_mode": (str, "norm"),
        "archive_dir": (str, ""),
    },
    "optimal-va": {
        **_COMMON,
        "distance_grid_km": (_parse_grid, None),
        "xi": (float, 0.01),
        "eta": (float, 0.6),
        "vel": (float, 0.015),
        "alpha_db_per_km": (float, 0.2),
        "beta": (float, 0.956),
        "rep_rate_hz": (float, 5e6),
    },
    "skr": {
        **_COMMON,
        "distance_grid_km": (_parse_grid, None),
        "va_modes": (str, "optimal"),
        "va": (float, 5.0),
        "target_snr": (float, 0.075),
        "n_total": (float, 1e12),
        "n_ratio": (float, 1.0),
        "beta_mode": (str, "fixed"),
        "beta": (float, 0.956),
        "eps": (float, 1e-12),
        "xi": (float, 0.01),
        "eta": (float, 0.6),
        "vel": (float, 0.015),
        "alpha_db_per_km": (float, 0.2),
        "rep_rate_hz": (float, 5e6),
    },
    "decode-bench": {
        **_COMMON,
        "snr_db_grid": (_parse_grid, None),
        "distributions": (str, "adaptive"),
        "k": (int, 9900),
        "beta_min": (float, 0.90),
        "beta_start": (float, 0.96),
        "max_iters": (int, 150),
    },
    "replay": {
        "archive": (str, None),
        "out": (str, "-"),
    },
}


def load_config(command, path=None, overrides=()):
    schema = _SCHEMAS[command]
    raw = {}
    if path:
        with open(path) as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{line_no}: expected key=value")
                key, value = line.split("=", 1)
                raw[key.strip()] = value.strip()
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()

    cfg = {}
    for key, value in raw.items():
        if key not in schema:
            raise UsageError(f"unknown configuration key {key!r} for {command}")
        parser = schema[key][0]
        cfg[key] = parser(value)
    for key, (parser, default) in schema.items():
        if key not in cfg:
            if default is None:
                raise UsageError(f"missing required configuration key {key!r}")
            cfg[key] = default
    return cfg


def _echo_value(value):
    if isinstance(value, list):
        return ",".join(f"{v:g}" for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _csv_text(command, cfg, columns, rows):
    lines = [
        f"# rateless-recon {__version__}",
        f"# command = {command}",
    ]
    for key in sorted(cfg):
        if key == "out":
            continue
        lines.append(f"# cfg {key} = {_echo_value(cfg[key])}")
    lines.append(",".join(columns))
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            if isinstance(v, float):
                cells.append(f"{v:.10g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_csv_config(text):
    """(command, cfg dict) recovered from a CSV's comment header."""
    command = None
    pairs = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        body = line[1:].strip()
        if body.startswith("command ="):
            command = body.split("=", 1)[1].strip()
        elif body.startswith("cfg "):
            key, value = body[4:].split("=", 1)
            pairs.append(f"{key.strip()}={value.strip()}")
    if command is None:
        raise UsageError("CSV lacks a command echo line")
    return command, load_config(command, overrides=pairs)


def strip_timing_columns(text):
    """CSV text with wall_ms/decode_ms cells blanked, for reproduction diffs."""
    lines = text.splitlines()
    out = []
    drop_idx = None
    for line in lines:
        if line.startswith("#"):
            out.append(line)
            continue
        cells = line.split(",")
        if drop_idx is None:
            drop_idx = [i for i, c in enumerate(cells) if c in _TIMING_COLUMNS]
        else:
            for i in drop_idx:
                cells[i] = ""
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


# --- subcommands --------------------------------------------------------------

def _session_config(cfg):
    return SessionConfig(
        d=cfg.get("d", 8),
        k=cfg["k"],
        dist_policy="adaptive",
        beta_min=cfg["beta_min"],
        beta_start=cfg["beta_start"],
        batch=cfg["batch"] if cfg.get("batch") else None,
        max_iters=cfg["max_iters"],
        master_seed=cfg["seed"],
        llr_mode=cfg.get("llr_mode", "norm"),
    )


def _validate_snr_grid(grid):
    for db in grid:
        if not -20.0 <= db <= 0.0:
            raise UsageError(f"snr {db} dB outside the supported -20..0 dB grid")


def cmd_efficiency(cfg):
    _validate_snr_grid(cfg["snr_db_grid"])
    names = cfg["distributions"]
    if names == "all":
        dist_names = ["omega1", "omega2", "omega3", "omega4"]
    elif names == "adaptive":
        dist_names = None
    else:
        dist_names = [n.strip() for n in names.split(",") if n.strip()]
    scfg = _session_config(cfg)
    workers = int(os.environ.get("RATELESS_RECON_WORKERS", cfg["workers"]))
    columns = ["snr_db", "distribution", "blocks", "fer", "mean_n", "rate", "beta", "wall_ms"]
    rows = []
    failures = []
    for snr_db in cfg["snr_db_grid"]:
        gamma = 10.0 ** (snr_db / 10.0)
        point_rows = []
        selected = dist_names or [select_distribution(gamma).name]
        for name in selected:
            t0 = time.perf_counter()
            try:
                rep = measure_efficiency(
                    gamma,
                    scfg,
                    cfg["blocks"],
                    channel=cfg["channel"],
                    dist=distribution_by_name(name),
                    workers=workers,
                )
            except Exception as exc:  # pragma: no cover - surfaced via exit code
                failures.append(f"snr_db={snr_db} dist={name}: {exc}")
                continue
            wall = (time.perf_counter() - t0) * 1e3
            point_rows.append({
                "snr_db": snr_db,
                "distribution": name,
                "blocks": cfg["blocks"],
                "fer": rep.fer,
                "mean_n": rep.mean_n,
                "rate": rep.rate,
                "beta": rep.mean_beta,
                "wall_ms": wall,
            })
            if cfg["archive_dir"] and cfg["channel"] == "gaussian":
                _archive_blocks(cfg, scfg, gamma, name)
        rows.extend(point_rows)
        if point_rows:
            best = max(point_rows, key=lambda r: r["beta"])
            envelope = dict(best)
            envelope["distribution"] = "dd_adaptive"
            rows.append(envelope)
    return columns, rows, failures


def _archive_blocks(cfg, scfg, gamma, dist_name):
    from .rng import TAG_BLOCK_PAIR, derive_seed
    from .channel import simulate_gaussian_pair
    from .session import _symbol_budget, run_reconciliation

    os.makedirs(cfg["archive_dir"], exist_ok=True)
    _, _, n_limit = _symbol_budget(gamma, scfg, scfg.resolve_precode().kprime)
    for block in range(cfg["blocks"]):
        pair = simulate_gaussian_pair(
            n_limit, gamma, derive_seed(scfg.master_seed, TAG_BLOCK_PAIR, block)
        )
        out = run_reconciliation(pair.x, pair.y, gamma, scfg, block_index=block,
                                 dist=distribution_by_name(dist_name))
        path = os.path.join(
            cfg["archive_dir"], f"session_snr{gamma:.6g}_b{block}.npz"
        )
        np.savez_compressed(
            path,
            x=pair.x,
            transcript=np.frombuffer(out.transcript.to_bytes(), dtype=np.uint8),
            status=out.status,
            n_used=out.n_used,
        )


def cmd_optimal_va(cfg):
    base = ChannelParams(
        va=1.0,
        alpha_db_per_km=cfg["alpha_db_per_km"],
        xi=cfg["xi"],
        eta=cfg["eta"],
        vel=cfg["vel"],
    )
    columns = ["distance_km", "va_opt", "snr_db", "k_asymptotic"]
    rows = []
    for dist_km in cfg["distance_grid_km"]:
        params = replace(base, distance_km=dist_km)
        va, k = optimal_va(params, cfg["beta"])
        gamma = channel_snr(replace(params, va=va))
        rows.append({
            "distance_km": dist_km,
            "va_opt": va,
            "snr_db": 10.0 * math.log10(gamma),
            "k_asymptotic": k,
        })
    return columns, rows, []


def cmd_skr(cfg):
    base = ChannelParams(
        va=cfg["va"],
        alpha_db_per_km=cfg["alpha_db_per_km"],
        xi=cfg["xi"],
        eta=cfg["eta"],
        vel=cfg["vel"],
    )
    modes = [m.strip() for m in cfg["va_modes"].split(",") if m.strip()]
    columns = [
        "distance_km", "va_mode", "va", "n_total", "beta",
        "snr_db", "k_bits_per_pulse", "k_bits_per_sec",
    ]
    rows = []
    failures = []
    for mode in modes:
        if mode not in ("optimal", "fixed", "target_snr"):
            failures.append(f"unknown va_mode {mode!r}")
            continue
        for dist_km in cfg["distance_grid_km"]:
            params = replace(base, distance_km=dist_km)
            if mode == "optimal":
                va, _ = optimal_va(params, cfg["beta"])
            elif mode == "target_snr":
                va = va_for_target_snr(params, cfg["target_snr"])
            else:
                va = cfg["va"]
            params = replace(params, va=va)
            gamma = channel_snr(params)
            if cfg["beta_mode"] == "envelope":
                beta = envelope_efficiency(10.0 * math.log10(gamma))
            else:
                beta = cfg["beta"]
            report = finite_size_key_rate(KeyRateInputs(
                params=params,
                beta=beta,
                n_total=cfg["n_total"],
                key_fraction=cfg["n_ratio"],
                eps_pe=cfg["eps"],
                eps_bar=cfg["eps"],
                eps_pa=cfg["eps"],
                rep_rate_hz=cfg["rep_rate_hz"],
            ))
            rows.append({
                "distance_km": dist_km,
                "va_mode": mode,
                "va": va,
                "n_total": cfg["n_total"],
                "beta": beta,
                "snr_db": 10.0 * math.log10(gamma),
                "k_bits_per_pulse": report.k_finite,
                "k_bits_per_sec": report.k_rate,
            })
    return columns, rows, failures


def cmd_decode_bench(cfg):
    _validate_snr_grid(cfg["snr_db_grid"])
    columns = ["snr_db", "n_symbols", "iters", "decode_ms", "throughput_bits_per_sec"]
    rows = []
    failures = []
    for snr_db in cfg["snr_db_grid"]:
        gamma = 10.0 ** (snr_db / 10.0)
        scfg = SessionConfig(
            k=cfg["k"],
            dist_policy=cfg["distributions"] if cfg["distributions"] != "adaptive" else "adaptive",
            beta_min=cfg["beta_min"],
            beta_start=cfg["beta_start"],
            max_iters=cfg["max_iters"],
            master_seed=cfg["seed"],
        )
        t0 = time.perf_counter()
        out = run_biawgn_session(gamma, scfg, block_index=0)
        decode_ms = (time.perf_counter() - t0) * 1e3
        if out.status != "success":
            failures.append(f"snr_db={snr_db}: decode abandoned")
            continue
        rows.append({
            "snr_db": snr_db,
            "n_symbols": out.n_used,
            "iters": out.iters_total,
            "decode_ms": decode_ms,
            "throughput_bits_per_sec": cfg["k"] / (decode_ms / 1e3),
        })
    return columns, rows, failures


def cmd_replay(cfg):
    archive = np.load(cfg["archive"], allow_pickle=False)
    raw = archive["transcript"].tobytes()
    res = replay_session(raw, archive["x"])
    ok = (
        res.status == str(archive["status"])
        and res.n_used == int(archive["n_used"])
        and res.matches_stop
    )
    columns = ["status", "n_used", "matches_archive"]
    rows = [{
        "status": res.status,
        "n_used": res.n_used,
        "matches_archive": "yes" if ok else "no",
    }]
    return columns, rows, [] if ok else ["replay mismatch against archive"]


_COMMANDS = {
    "efficiency": cmd_efficiency,
    "optimal-va": cmd_optimal_va,
    "skr": cmd_skr,
    "decode-bench": cmd_decode_bench,
    "replay": cmd_replay,
}


def run_command(command, cfg):
    """Execute one subcommand; returns (csv_text, failures)."""
    columns, rows, failures = _COMMANDS[command](cfg)
    return _csv_text(command, cfg, columns, rows), failures


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rateless-recon",
        description="Rateless reconciliation simulations and key-rate sweeps",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument(
            "--set", action="append", default=[], metavar="KEY=VALUE",
            help="override one configuration key (repeatable)",
        )
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.set)
        text, failures = run_command(args.command, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.get("out", "-") == "-":
        sys.stdout.write(text)
    else:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    if failures:
        for f in failures:
            print(f"failed: {f}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
