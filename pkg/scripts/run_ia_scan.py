#!/usr/bin/env python3
"""Scan the stability integral over the neck parameter and write a CSV."""
import pathlib
import sys

from dropcoil.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"
OUT.mkdir(exist_ok=True)

if __name__ == "__main__":
    sys.exit(main(["ia-scan", "--a-range", "0.01:0.49:0.02",
                   "--out", str(OUT / "ia_scan.csv")]))
