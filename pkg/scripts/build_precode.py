#!/usr/bin/env python3
"""Regenerate the shipped precode fixture.

Builds the rate-0.99 column-weight-3 PEG code (k=9900, k'=10000) in
systematic column order and writes it to src/rateless_recon/data/.
The fixture is versioned; rebuilding with the same seed reproduces it
byte-for-byte.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from rateless_recon.precode import build_systematic_precode

DATA_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "rateless_recon" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=9900)
    ap.add_argument("--kprime", type=int, default=10000)
    ap.add_argument("--col-weight", type=int, default=3)
    ap.add_argument("--seed", type=int, default=20240811)
    ap.add_argument("--out", type=pathlib.Path, default=None)
    args = ap.parse_args()

    print(f"PEG-constructing {args.kprime - args.k} x {args.kprime} parity structure ...")
    pre = build_systematic_precode(args.k, args.kprime, args.col_weight, args.seed)

    u = np.random.default_rng(0).integers(0, 2, args.k, dtype=np.uint8)
    v = pre.encode(u)
    assert pre.check(v), "self-check failed: encoder output violates parities"
    weights = [len(r) for r in pre.rows]
    print(f"row weights: min={min(weights)} max={max(weights)}")

    out = args.out or DATA_DIR / f"precode_{args.k}_{args.kprime}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    header = f"# built by scripts/build_precode.py --k {args.k} --kprime {args.kprime} --col-weight {args.col_weight} --seed {args.seed}\n"
    out.write_text(header + pre.to_text())
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
