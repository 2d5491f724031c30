#!/usr/bin/env python3
"""Deterministic stand-in for a video frame decoder.

Usage: fake_decoder.py INPUT TIMESTAMP QUALITY SHORT_SIDE OUTPUT

Writes an image whose pixels are a pure function of (input basename,
timestamp, quality), sized so the short side equals SHORT_SIDE. Rerunning
with the same arguments reproduces identical bytes, which is what manifest
determinism tests rely on. Uses a minimal stdlib PNG encoder to keep each
invocation fast; the harness sniffs image headers, not file extensions.
"""

import hashlib
import struct
import sys
import zlib
from pathlib import Path


def png_bytes(width: int, height: int, rgb: tuple[int, int, int], accent: tuple[int, int, int]) -> bytes:
    row = bytearray([0])  # filter byte
    for x in range(width):
        row += bytes(accent if x < 16 else rgb)
    top = bytes(row)
    plain = bytearray([0]) + bytes(rgb) * width
    raw = top * 16 + bytes(plain) * (height - 16)

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + tag
            + data
            + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(bytes(raw), 6))
        + chunk(b"IEND", b"")
    )


def main() -> int:
    if len(sys.argv) != 6:
        print("usage: fake_decoder.py INPUT TIMESTAMP QUALITY SHORT_SIDE OUTPUT", file=sys.stderr)
        return 2
    input_path, timestamp, quality, short_side, output = sys.argv[1:]
    if not Path(input_path).exists():
        print(f"no such input: {input_path}", file=sys.stderr)
        return 1
    seed = hashlib.sha256(f"{Path(input_path).name}|{timestamp}|{quality}".encode()).digest()
    side = int(short_side)
    data = png_bytes(side * 4 // 3, side, (seed[0], seed[1], seed[2]), (seed[3], seed[4], seed[5]))
    Path(output).write_bytes(data)
    return 0


if __name__ == "__main__":
    sys.exit(main())
