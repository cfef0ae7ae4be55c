#!/usr/bin/env python3
"""Rebuild data/mnist-10k from the `mnist` npm package (MIT, 10,000 MNIST digits).

Usage:
    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 scripts/mnist_subset_from_npm.py package/src/digits data/mnist-10k

The package stores pixels as round(p / 255, 3); multiplying by 255 and rounding
recovers the original bytes exactly. Digits are interleaved with a fixed-seed
shuffle so that any prefix of the output is roughly class balanced.
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def main(src: str, dst: str) -> None:
    samples = []
    for digit in range(10):
        flat = json.loads(Path(src, f"{digit}.json").read_text())["data"]
        assert len(flat) % 784 == 0
        for k in range(len(flat) // 784):
            pixels = bytes(int(round(v * 255)) for v in flat[k * 784:(k + 1) * 784])
            samples.append((digit, pixels))
    random.Random(20240521).shuffle(samples)

    out = Path(dst)
    out.mkdir(parents=True, exist_ok=True)
    n = len(samples)
    images = struct.pack(">IIII", 0x00000803, n, 28, 28) + b"".join(p for _, p in samples)
    labels = struct.pack(">II", 0x00000801, n) + bytes(d for d, _ in samples)
    # mtime=0 keeps the archives byte-reproducible.
    with gzip.GzipFile(out / "images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(images)
    with gzip.GzipFile(out / "labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(labels)
    print(f"wrote {n} examples to {out}")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
