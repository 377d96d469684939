#!/usr/bin/env python3
"""Reference writer for the SIFLD1 field format, used to produce tests/fixtures.

Layout (little endian): b"SIFLD1", u16 version, u16 ndim, u32 dims[ndim],
u8 basis tag, f64 payload (row-major), u32 CRC-32 of the payload.
"""
import struct
import sys
import zlib
from pathlib import Path


def encode(dims, basis_tag, values):
    payload = struct.pack("<%dd" % len(values), *values)
    header = b"SIFLD1" + struct.pack("<HH", 1, len(dims))
    header += struct.pack("<%dI" % len(dims), *dims) + struct.pack("<B", basis_tag)
    return header + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def fixture():
    # Periodic 2D grid with n = 4, values j0 + j1 / 8 - 1.
    values = [j0 + j1 / 8.0 - 1.0 for j0 in range(4) for j1 in range(4)]
    return encode([4, 4], 1, values)


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    data = fixture()
    (out / "periodic_4x4.sifld").write_bytes(data)
    (out / "periodic_4x4.hex").write_text(data.hex() + "\n")


if __name__ == "__main__":
    main()
