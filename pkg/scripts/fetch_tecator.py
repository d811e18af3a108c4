#!/usr/bin/env python3
"""Download the Tecator meat spectrometry data and write the CSV this
package's loaders expect.

The canonical source is the StatLib archive. Each of the 240 records carries
125 numbers: 100 absorbances measured at wavelengths 850..1050nm, 22
principal components, then moisture, fat, and protein contents. The first
215 records (the C, M, and T sets) form the standard benchmark sample; the
response column is the fat content.

Usage:
    python scripts/fetch_tecator.py [--url URL] [--out data/tecator.csv]

The output schema matches `frem.bench.load_dataset`: a header of 100
wavelengths followed by "fat", one row per meat sample.
"""

import argparse
import os
import re
import sys
import urllib.request

import numpy as np

DEFAULT_URL = "http://lib.stat.cmu.edu/datasets/tecator"
N_SAMPLES = 240
N_KEEP = 215
N_CHANNELS = 100
VALUES_PER_RECORD = 125
FAT_INDEX = 123  # 100 absorbances, 22 principal components, moisture, fat, protein


def parse_statlib_text(text: str) -> np.ndarray:
    """Extract the numeric block from the StatLib file."""
    numbers = re.findall(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?", text)
    values = np.array([float(x) for x in numbers])
    needed = N_SAMPLES * VALUES_PER_RECORD
    if values.size < needed:
        raise SystemExit(
            f"expected at least {needed} numbers in the data file, found {values.size}"
        )
    # the numeric payload is the trailing block; any digits in the preamble
    # come first, so anchor at the end
    return values[-needed:].reshape(N_SAMPLES, VALUES_PER_RECORD)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--url", default=DEFAULT_URL)
    ap.add_argument("--out", default="data/tecator.csv")
    args = ap.parse_args()

    print(f"downloading {args.url} ...", file=sys.stderr)
    with urllib.request.urlopen(args.url, timeout=60) as resp:
        text = resp.read().decode("ascii", errors="replace")
    records = parse_statlib_text(text)[:N_KEEP]
    absorbance = records[:, :N_CHANNELS]
    fat = records[:, FAT_INDEX]
    if not (0.0 <= fat.min() and fat.max() <= 100.0):
        raise SystemExit("fat column out of range; file layout not as expected")

    wavelengths = np.linspace(850.0, 1050.0, N_CHANNELS)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w") as fh:
        fh.write(",".join(f"{w:.6g}" for w in wavelengths) + ",fat\n")
        for row, y in zip(absorbance, fat):
            fh.write(",".join(repr(float(v)) for v in row) + f",{y!r}\n")
    print(f"wrote {N_KEEP} samples to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
