#!/usr/bin/env python3
"""Manufactured-solution convergence study in the three regimes:
nonconducting at 1 MHz, nonconducting at 10 Hz (where the unstabilized
variant breaks down), and conducting at 10 Hz.  One CSV per regime.
"""
import argparse
import pathlib
import sys

from aphi.cli import main as solver_main

HERE = pathlib.Path(__file__).resolve().parent
CONFIGS = HERE.parent / "configs"

REGIMES = (
    ("mms_sigma0.cfg", 1e6, "convergence_sigma0_f1e6.csv"),
    ("mms_sigma0.cfg", 10.0, "convergence_sigma0_f10.csv"),
    ("mms_sigma6e7.cfg", 10.0, "convergence_sigma6e7_f10.csv"),
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default=str(HERE))
    parser.add_argument("--subdivs", default="2,4,8")
    args = parser.parse_args()
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for config, freq, out in REGIMES:
        rc = solver_main([
            "converge", "--config", str(CONFIGS / config),
            "--subdivs", args.subdivs, "--freq", str(freq),
            "--methods", "original,tree-cotree",
            "--out", str(outdir / out)])
        if rc:
            return rc
        print(f"wrote {outdir / out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
