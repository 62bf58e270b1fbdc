"""Portable float map reader/writer.

PFM stores 32-bit float rasters with rows ordered bottom to top and the
byte order encoded in the sign of the scale line; everything written here
is little-endian (negative scale).  DSMs travel in the single-channel
variant, debug color dumps in the three-channel one.
"""

import numpy as np

from ..errors import DataError


def write_pfm(path, data):
    """Write (H, W) or (H, W, 3) float data as little-endian PFM."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        header = b"Pf\n"
        rows = arr[::-1]
    elif arr.ndim == 3 and arr.shape[2] == 3:
        header = b"PF\n"
        rows = arr[::-1]
    else:
        raise DataError("PFM data must be (H, W) or (H, W, 3), got %s"
                        % (arr.shape,))
    with open(path, "wb") as f:
        f.write(header)
        f.write(b"%d %d\n" % (arr.shape[1], arr.shape[0]))
        f.write(b"-1.0\n")
        f.write(np.ascontiguousarray(rows, dtype="<f4").tobytes())


def read_pfm(path):
    """Read a PFM file back as (H, W) or (H, W, 3) float32, top row first."""
    with open(path, "rb") as f:
        kind = f.readline().strip()
        if kind not in (b"Pf", b"PF"):
            raise DataError("%s: not a PFM file (header %r)" % (path, kind))
        dims = f.readline().split()
        if len(dims) != 2:
            raise DataError("%s: malformed PFM dimensions" % path)
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        n_chan = 3 if kind == b"PF" else 1
        count = width * height * n_chan
        raw = np.frombuffer(f.read(count * 4), dtype=dtype)
        if raw.size != count:
            raise DataError("%s: truncated PFM payload" % path)
    shape = (height, width, 3) if n_chan == 3 else (height, width)
    return np.ascontiguousarray(raw.reshape(shape)[::-1]).astype(np.float32)
