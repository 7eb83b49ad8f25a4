"""Pure-numpy versions of the compiled kernels."""

import numpy as np

CHUNK = 4096


def nearest(z, points):
    """Index of the closest row of ``points`` for every row of ``z`` (lowest index on ties)."""
    z = np.ascontiguousarray(z, dtype=complex)
    points = np.ascontiguousarray(points, dtype=complex)
    if z.shape[1] != points.shape[1]:
        raise ValueError("z and points disagree on dimension")
    out = np.empty(len(z), dtype=np.int64)
    for s in range(0, len(z), CHUNK):
        diff = z[s : s + CHUNK, None, :] - points[None, :, :]
        dist = np.sum(diff.real**2 + diff.imag**2, axis=2)
        out[s : s + CHUNK] = np.argmin(dist, axis=1)
    return out


def bit_errors(a, b):
    """Total number of differing bits between two label arrays."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise ValueError("label arrays differ in length")
    return int(np.bitwise_count(a ^ b).sum())
