"""Binary PGM (P5) reading and writing for 8-bit frames and label maps."""

from __future__ import annotations

import numpy as np


def write_pgm(path, image: np.ndarray) -> None:
    """Write a 2-D uint8 array as a binary PGM file."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("PGM output requires a 2-D array")
    if img.dtype != np.uint8:
        if img.min() < 0 or img.max() > 255:
            raise ValueError("values outside [0, 255] cannot be written as 8-bit PGM")
        img = img.astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM file into a 2-D uint8 array."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ValueError("%s: not a binary PGM (P5) file" % path)
    # Header: magic, width, height, maxval as whitespace-separated tokens,
    # possibly interleaved with '#' comment lines.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError("%s: only 8-bit PGM supported (maxval=%d)" % (path, maxval))
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    if pixels.size != w * h:
        raise ValueError("%s: truncated pixel data" % path)
    return pixels.reshape(h, w).copy()
