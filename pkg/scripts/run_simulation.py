"""Run a kinetic simulation from an INI config and print a short summary.

    python scripts/run_simulation.py configs/homogeneous_3d.ini --out out/homog
"""
from __future__ import annotations

import argparse
import sys

from bgkmix.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    argv = ["simulate", "--config", args.config] + (["--out", args.out] if args.out else [])
    sys.exit(main(argv))
