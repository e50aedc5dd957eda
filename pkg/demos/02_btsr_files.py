"""
The BTSR tensor file format
===========================

One array per file: magic, version, dtype code, rank, dims, then raw
little-endian values. Written for exchange with external tools, so the
bytes matter more than the API.
"""

import os
import tempfile

import numpy as np

from bistream.btsr import read_btsr, write_btsr

workdir = tempfile.mkdtemp(prefix="btsr_demo_")
path = os.path.join(workdir, "example.btsr")

arr = np.arange(12, dtype=np.float32).reshape(3, 4)
write_btsr(path, arr)

back = read_btsr(path)
print("round trip equal:", np.array_equal(arr, back))
print("dtype preserved:", back.dtype)

# the header is fixed-layout; inspect the first bytes
with open(path, "rb") as fh:
    raw = fh.read()
print("\nfile size:", len(raw), "bytes (22 header + 48 payload)")
print("magic:", raw[:4])
print("header hex:", raw[:22].hex(" "))

# float64 and any rank work the same way
for shape in [(5,), (2, 2, 2), (1, 3, 1, 2)]:
    p = os.path.join(workdir, f"r{len(shape)}.btsr")
    a = np.random.default_rng(0).standard_normal(shape)
    write_btsr(p, a)
    assert np.array_equal(read_btsr(p), a)
    print(f"rank {len(shape)} {shape} ok, {os.path.getsize(p)} bytes")
