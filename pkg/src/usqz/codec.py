"""Bit-exact compressed container: chain-coded contours plus acquisition metadata.

Wire layout (all multi-byte integers big-endian):

    header:  magic "USQZ" | version u8 | acquisition_frequency_khz u32 |
             num_scan_lines u16 | samples_per_line u16 |
             cart_width u16 | cart_height u16 | num_contours u8
    contour: class_id u8 | start_radius u16 | num_moves u16 |
             packed 2-bit moves, MSB-first within each byte,
             padded with the stay symbol (01) to a byte boundary

Move alphabet: 00 -> dr=-1, 01 -> dr=0, 10 -> dr=+1, 11 -> dr=+2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (BadMagic, RangeViolation, TruncatedFile, UnencodableDelta,
                     UnsupportedVersion)
from .grid import ContourSet, ProbeGeometry

MAGIC = b"USQZ"
VERSION = 1
HEADER_FMT = ">4sBIHHHHB"
HEADER_SIZE = struct.calcsize(HEADER_FMT)  # 18 bytes

PAD_SYMBOL = 1  # "stay" move
_DELTA_TO_SYMBOL = {-1: 0, 0: 1, 1: 2, 2: 3}
_SYMBOL_TO_DELTA = np.array([-1, 0, 1, 2], dtype=np.int64)
ALPHABET_DELTAS = frozenset(_DELTA_TO_SYMBOL)


@dataclass(frozen=True)
class CompressedHeader:
    """Fixed-size file header carrying the acquisition metadata."""

    acquisition_frequency_khz: int
    num_scan_lines: int
    samples_per_line: int
    cart_width: int
    cart_height: int
    num_contours: int

    def __post_init__(self):
        for name in ("acquisition_frequency_khz", "num_scan_lines",
                     "samples_per_line", "cart_width", "cart_height"):
            if getattr(self, name) <= 0:
                raise ValueError("%s must be nonzero" % name)
        if not 0 <= self.num_contours <= 255:
            raise ValueError("num_contours must fit in one byte")

    def geometry(self, radial_step: float = 0.01) -> ProbeGeometry:
        return ProbeGeometry(self.num_scan_lines, self.samples_per_line,
                             self.cart_width, self.cart_height, radial_step)

    def pack(self) -> bytes:
        return struct.pack(HEADER_FMT, MAGIC, VERSION,
                           self.acquisition_frequency_khz,
                           self.num_scan_lines, self.samples_per_line,
                           self.cart_width, self.cart_height,
                           self.num_contours)


@dataclass
class ChainCode:
    """One contour as a start radius plus packed 2-bit radius deltas."""

    class_id: int
    start_radius: int
    num_moves: int
    moves: bytes  # packed symbols

    def __post_init__(self):
        if len(self.moves) != (2 * self.num_moves + 7) // 8:
            raise ValueError("packed move length inconsistent with num_moves")


def _pack_symbols(symbols: np.ndarray) -> bytes:
    n = symbols.size
    padded = np.full(((n + 3) // 4) * 4, PAD_SYMBOL, dtype=np.uint8)
    padded[:n] = symbols
    quads = padded.reshape(-1, 4)
    packed = (quads[:, 0] << 6) | (quads[:, 1] << 4) | (quads[:, 2] << 2) | quads[:, 3]
    return packed.astype(np.uint8).tobytes()


def _unpack_symbols(data: bytes, n: int) -> np.ndarray:
    packed = np.frombuffer(data, dtype=np.uint8)
    quads = np.empty((packed.size, 4), dtype=np.uint8)
    quads[:, 0] = packed >> 6
    quads[:, 1] = (packed >> 4) & 3
    quads[:, 2] = (packed >> 2) & 3
    quads[:, 3] = packed & 3
    return quads.reshape(-1)[:n]


def encode_contour(radius_fn, class_id: int = 0) -> ChainCode:
    """Losslessly encode per-scan-line radii as a chain code.

    All successive deltas, including the wrap-around from the last scan line
    back to the first, must lie in the move alphabet; the encoder never
    clamps (the segmenter guarantees encodability upstream).
    """
    radii = np.asarray(radius_fn, dtype=np.int64)
    if radii.ndim != 1 or radii.size < 2:
        raise ValueError("radius function must be a 1-D sequence of >= 2 radii")
    if radii.min() < 0:
        raise ValueError("negative radius")
    deltas = np.diff(radii)
    closure = int(radii[0] - radii[-1])
    bad = ~np.isin(deltas, list(ALPHABET_DELTAS))
    if bad.any():
        first = int(np.nonzero(bad)[0][0])
        raise UnencodableDelta("delta %+d at scan line %d outside alphabet {-1,0,+1,+2}"
                               % (int(deltas[first]), first + 1))
    if closure not in ALPHABET_DELTAS:
        raise UnencodableDelta("closure delta %+d outside alphabet" % closure)
    symbols = (deltas + 1).astype(np.uint8)  # alphabet is delta+1 by construction
    return ChainCode(class_id=class_id, start_radius=int(radii[0]),
                     num_moves=int(deltas.size), moves=_pack_symbols(symbols))


def decode_contour(code: ChainCode, geometry: ProbeGeometry) -> np.ndarray:
    """Exact inverse of :func:`encode_contour`: cumulative sum from the start."""
    symbols = _unpack_symbols(code.moves, code.num_moves)
    deltas = _SYMBOL_TO_DELTA[symbols]
    radii = code.start_radius + np.concatenate(([0], np.cumsum(deltas)))
    if radii.min() < 0 or radii.max() > geometry.samples_per_line - 1:
        raise RangeViolation("decoded radius leaves [0, %d]"
                             % (geometry.samples_per_line - 1))
    return radii


def contour_payload_bytes(num_moves: int) -> int:
    """On-wire size of one contour record."""
    return 1 + 2 + 2 + (2 * num_moves + 7) // 8


def write_file(header: CompressedHeader, contours) -> bytes:
    """Serialize header plus chain codes; read_file inverts byte-exactly."""
    contours = list(contours)
    if len(contours) != header.num_contours:
        raise ValueError("header declares %d contours, got %d"
                         % (header.num_contours, len(contours)))
    out = bytearray(header.pack())
    for code in contours:
        out += struct.pack(">BHH", code.class_id, code.start_radius, code.num_moves)
        out += code.moves
    return bytes(out)


def read_file(data: bytes):
    """Parse a compressed file into (header, list of ChainCode).

    Consumes exactly the bytes write_file produced; trailing garbage is an
    error so the format stays prefix-decodable.
    """
    if len(data) < HEADER_SIZE:
        raise TruncatedFile("file is %d bytes, header needs %d" % (len(data), HEADER_SIZE))
    magic, version, freq, n_t, n_r, w, h, n_c = struct.unpack_from(HEADER_FMT, data, 0)
    if magic != MAGIC:
        raise BadMagic("bad magic %r at offset 0" % magic)
    if version != VERSION:
        raise UnsupportedVersion("version %d at offset 4, expected %d" % (version, VERSION))
    header = CompressedHeader(freq, n_t, n_r, w, h, n_c)
    pos = HEADER_SIZE
    contours = []
    for i in range(n_c):
        if len(data) < pos + 5:
            raise TruncatedFile("contour %d header truncated at offset %d" % (i, pos))
        class_id, start, num_moves = struct.unpack_from(">BHH", data, pos)
        pos += 5
        nbytes = (2 * num_moves + 7) // 8
        if len(data) < pos + nbytes:
            raise TruncatedFile("contour %d moves truncated at offset %d" % (i, pos))
        contours.append(ChainCode(class_id, start, num_moves, data[pos:pos + nbytes]))
        pos += nbytes
    if pos != len(data):
        raise TruncatedFile("%d trailing bytes after offset %d" % (len(data) - pos, pos))
    return header, contours


def compress_contour_set(contour_set: ContourSet, geometry: ProbeGeometry,
                         acquisition_frequency_khz: int) -> bytes:
    """Convenience wrapper: ContourSet -> compressed file bytes."""
    codes = [encode_contour(contour_set.radii[k], int(cid))
             for k, cid in enumerate(contour_set.class_ids)]
    header = CompressedHeader(acquisition_frequency_khz,
                              geometry.num_scan_lines, geometry.samples_per_line,
                              geometry.cart_width, geometry.cart_height,
                              len(codes))
    return write_file(header, codes)


def decompress_contour_set(data: bytes, radial_step: float = 0.01):
    """Compressed file bytes -> (header, ContourSet)."""
    header, codes = read_file(data)
    geometry = header.geometry(radial_step)
    radii = np.stack([decode_contour(c, geometry) for c in codes]) if codes else \
        np.empty((0, header.num_scan_lines), dtype=np.int64)
    cset = ContourSet.with_clamping(tuple(c.class_id for c in codes), radii,
                                    header.samples_per_line)
    return header, cset


def compression_ratio(header: CompressedHeader, mode: str = "payload") -> float:
    """Raw-frame bits over compressed bits.

    mode="payload" counts only the contour payload: per contour a 16-bit
    start point stored twice plus 2 bits per remaining scan line, ignoring
    the header, class ids, move counts and padding.  mode="file" divides by
    the full file size in bits.
    """
    raw_bits = header.samples_per_line * header.num_scan_lines * 8
    if mode == "payload":
        if header.num_contours == 0:
            return float("inf")
        per_contour = 2 * 16 + 2 * (header.num_scan_lines - 1)
        return raw_bits / (header.num_contours * per_contour)
    if mode == "file":
        file_bytes = HEADER_SIZE + header.num_contours * \
            contour_payload_bytes(header.num_scan_lines - 1)
        return raw_bits / (8 * file_bytes)
    raise ValueError("mode must be 'payload' or 'file'")
