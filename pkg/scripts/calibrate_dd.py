#!/usr/bin/env python3
"""Calibrate the DD-adaptive selection table at desk scale.

For each SNR grid point the plausible candidate distributions (neighbors
in the published ordering) are raced over a few Monte Carlo blocks; the
winner and its mean efficiency land in src/rateless_recon/data/dd_table.txt.
Points below -14 dB are expensive, so they run fewer blocks; the omega1
region boundary (-12 dB crossover versus omega2) is taken from the race at
-13/-12 dB.
"""

import argparse
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from rateless_recon.degree import distribution_by_name
from rateless_recon.session import SessionConfig, measure_efficiency

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "rateless_recon" / "data"

# candidate sets per dB point; omega ordering tracks the published curves
CANDIDATES = {
    0: ["omega4"], -1: ["omega4"], -2: ["omega4"], -3: ["omega4"],
    -4: ["omega3", "omega4"], -5: ["omega3", "omega4"],
    -6: ["omega3", "omega4"], -7: ["omega2", "omega3"],
    -8: ["omega2", "omega3"], -9: ["omega2", "omega3"],
    -10: ["omega2"], -11: ["omega2"], -12: ["omega1", "omega2"],
    -13: ["omega1", "omega2"], -14: ["omega1"], -15: ["omega1"],
    -16: ["omega1"], -17: ["omega1"], -18: ["omega1"],
    -19: ["omega1"], -20: ["omega1"],
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, default=3)
    ap.add_argument("--blocks-deep", type=int, default=2, help="blocks below -13 dB")
    ap.add_argument("--seed", type=int, default=20240812)
    ap.add_argument("--max-iters", type=int, default=150)
    ap.add_argument("--min-db", type=int, default=-20)
    ap.add_argument("--skip-measured", action="store_true",
                    help="keep existing rows, only fill missing dB points")
    args = ap.parse_args()

    out_path = DATA / "dd_table.txt"
    existing = {}
    if args.skip_measured and out_path.exists():
        for line in out_path.read_text().splitlines():
            if line.strip() and not line.startswith("#"):
                parts = line.split()
                existing[int(parts[0])] = (parts[1], float(parts[2]))

    rows = {}
    for db in sorted(CANDIDATES, reverse=True):
        if db < args.min_db:
            continue
        if db in existing:
            rows[db] = existing[db]
            continue
        gamma = 10.0 ** (db / 10.0)
        blocks = args.blocks if db >= -13 else args.blocks_deep
        cfg = SessionConfig(
            beta_min=0.85,
            beta_start=0.97,
            max_iters=args.max_iters,
            master_seed=args.seed + 1000 * db,
        )
        best = None
        for name in CANDIDATES[db]:
            t0 = time.time()
            rep = measure_efficiency(
                gamma, cfg, blocks, channel="biawgn", dist=distribution_by_name(name)
            )
            print(
                f"{db:+d} dB {name}: beta={rep.mean_beta:.4f} fer={rep.fer:.2f} "
                f"mean_n={rep.mean_n:.0f} [{time.time() - t0:.0f}s]",
                flush=True,
            )
            if best is None or rep.mean_beta > best[1]:
                best = (name, rep.mean_beta)
        rows[db] = best

    lines = [
        "# DD-adaptive selection table, calibrated at desk scale by",
        f"# scripts/calibrate_dd.py --blocks {args.blocks} --seed {args.seed}",
        "# Columns: snr_db  distribution  mean_beta",
    ]
    for db in sorted(rows):
        name, beta = rows[db]
        lines.append(f"{db} {name} {beta:.4f}")
    out_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {out_path}")


if __name__ == "__main__":
    main()
