#!/usr/bin/env python3
"""Write N rows of a 784-pixel-plus-label digit CSV as an IDX pair, taking the
first N/10 rows of each digit in file order (the source is sorted by digit).

The committed fixture in tests/data came from mlxtend's mnist_5k.csv.gz
(a 5000-sample MNIST subset) with N = 2000:

    python3 tools/make_digits_idx.py mnist_5k.csv.gz tests/data 2000
"""

import argparse
import gzip
import struct
from pathlib import Path


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("out_dir")
    ap.add_argument("count", type=int)
    args = ap.parse_args()

    opener = gzip.open if args.csv.endswith(".gz") else open
    per_digit = args.count // 10
    taken = [0] * 10
    pixels = bytearray()
    labels = bytearray()
    with opener(args.csv, "rt") as f:
        for line in f:
            cells = [int(c) for c in line.strip().split(",")]
            if len(cells) != 785:
                raise SystemExit(f"expected 785 fields, got {len(cells)}")
            digit = cells[784]
            if taken[digit] == per_digit:
                continue
            taken[digit] += 1
            pixels.extend(cells[:784])
            labels.append(digit)
    n = len(labels)
    if n < args.count:
        raise SystemExit(f"only {n} rows available")

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "digits2k-images-idx3-ubyte").write_bytes(
        struct.pack(">IIII", 0x803, n, 28, 28) + bytes(pixels))
    (out / "digits2k-labels-idx1-ubyte").write_bytes(
        struct.pack(">II", 0x801, n) + bytes(labels))


if __name__ == "__main__":
    main()
