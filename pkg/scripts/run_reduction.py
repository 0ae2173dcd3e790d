#!/usr/bin/env python3
"""One full reduction run (gamma solve + mass map) at a = 0.3, n = 32."""
import pathlib
import sys

from dropcoil.cli import main

OUT = pathlib.Path(__file__).resolve().parent.parent / "results"
OUT.mkdir(exist_ok=True)

if __name__ == "__main__":
    sys.exit(main(["reduce", "--a", "0.3", "--n", "32",
                   "--out", str(OUT / "reduce_a0.3_n32.json")]))
