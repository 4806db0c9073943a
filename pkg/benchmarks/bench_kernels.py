#!/usr/bin/env python3
"""Benchmark the compiled scan kernels against the pure-Python twins.

The workload mirrors the heaviest real use: a full crash sweep that
re-validates every byte prefix of a ~50 KB journal (quadratic in file
size), plus single-pass parses of each container format.

    python3 benchmarks/bench_kernels.py [--size 50000]
"""
from __future__ import annotations

import argparse
import random
import struct
import time
import zlib


def crc(b: bytes) -> bytes:
    return struct.pack("<I", zlib.crc32(b) & 0xFFFFFFFF)


def build_journal(target_size: int, seed: int = 7) -> bytes:
    rng = random.Random(seed)
    out = [b"TCGJ\x01\x00"]
    size = 6
    step_no = 0
    while size < target_size:
        step_no += 1
        for _ in range(rng.randint(1, 8)):
            payload = rng.randbytes(rng.randrange(8, 64))
            body = struct.pack("<IBHI", step_no, rng.randint(0, 1), rng.randrange(64), len(payload)) + payload
            rec = body + crc(body)
            out.append(rec)
            size += len(rec)
        commit = struct.pack("<IBHI", step_no, 2, 0, 0)
        out.append(commit + crc(commit))
        size += 15
    return b"".join(out)


def build_blocks(count: int, seed: int = 9) -> bytes:
    rng = random.Random(seed)
    out = [b"TCGP\x01\x00"]
    for _ in range(count):
        data = rng.randbytes(rng.randrange(16, 256))
        body = struct.pack("<I", len(data)) + data
        out.append(body + crc(body))
    return b"".join(out)


def build_tlv(count: int, seed: int = 11) -> bytes:
    rng = random.Random(seed)
    out = [b"TCGE\x01\x00"]
    for i in range(count):
        data = rng.randbytes(rng.randrange(16, 512))
        body = struct.pack("<BI", 1 if i == 0 else 2, len(data)) + data
        out.append(body + crc(body))
    return b"".join(out)


def timed(fn, *args, repeat: int = 1) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=50_000, help="journal size in bytes")
    args = parser.parse_args()

    from draftvault._kernels import _scan_py

    impls = [("python", _scan_py)]
    try:
        from draftvault._kernels import _scan_c

        impls.insert(0, ("c", _scan_c))
    except ImportError:
        print("compiled kernels not built; benchmarking pure Python only")

    journal = build_journal(args.size)
    blocks = build_blocks(400)
    tlv = build_tlv(400)
    print(f"journal: {len(journal)} bytes; blob log: {len(blocks)}; envelope: {len(tlv)}\n")

    results: dict[str, dict[str, float]] = {}
    for name, impl in impls:
        def full_sweep():
            for cut in range(6, len(journal) + 1):
                impl.scan_journal_valid(journal, cut)

        results[name] = {
            "journal full parse": timed(impl.scan_journal, journal, repeat=5),
            "blob log parse": timed(impl.scan_blocks, blocks, repeat=5),
            "envelope parse": timed(impl.scan_tlv, tlv, repeat=5),
            "crash sweep (every offset)": timed(full_sweep),
        }

    width = max(len(k) for k in next(iter(results.values())))
    header = f"{'workload':<{width}}" + "".join(f"{name:>12}" for name, _ in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for key in next(iter(results.values())):
        row = f"{key:<{width}}"
        for name, _ in impls:
            row += f"{results[name][key] * 1000:>10.2f}ms"
        if len(impls) == 2:
            row += f"{results['python'][key] / results['c'][key]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
