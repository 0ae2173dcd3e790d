#!/usr/bin/env python3
"""Decay of the coil-curvature expansion remainder over the block count."""
import pathlib
import sys

from dropcoil.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"
OUT.mkdir(exist_ok=True)

if __name__ == "__main__":
    sys.exit(main(["curvature-check", "--a", "0.3", "--n-list", "8:64:8",
                   "--out", str(OUT / "curvature_check.csv")]))
