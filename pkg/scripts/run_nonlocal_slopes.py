#!/usr/bin/env python3
"""Potential-vs-log(n) slope experiment at a = 0.3 (compare with 2V/T)."""
import pathlib
import sys

from dropcoil.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"
OUT.mkdir(exist_ok=True)

if __name__ == "__main__":
    sys.exit(main(["nonlocal-check", "--a", "0.3", "--n-list", "16:128:16",
                   "--out", str(OUT / "nonlocal_slopes.csv")]))
