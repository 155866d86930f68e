"""Polar/Cartesian scan conversion, contour rasterization and frame containers.

Conventions (fixed here, used everywhere else):

* Polar arrays are indexed ``[r, theta]`` with shape ``(samples_per_line,
  num_scan_lines)``.
* The Cartesian center is at ``(cart_width / 2, cart_height / 2)``; theta = 0
  points up (decreasing row index) and increases counterclockwise as seen on
  screen.  One Cartesian pixel spans one radial sample.
* Intensities are resampled bilinearly; label maps only ever move through
  nearest-neighbor lookups so class ids are never blended.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CrossingContours

LUMEN = 0
MEDIA = 1
EXTERNAL = 2
BACKGROUND = 255

TISSUE_CLASSES = (LUMEN, MEDIA, EXTERNAL)
CLASS_NAMES = {LUMEN: "lumen", MEDIA: "media", EXTERNAL: "external"}


@dataclass(frozen=True)
class ProbeGeometry:
    """Acquisition geometry tying the polar grid to the Cartesian display."""

    num_scan_lines: int
    samples_per_line: int
    cart_width: int
    cart_height: int
    radial_step: float = 0.01  # mm per radial sample
    angular_span: float = 2.0 * math.pi

    def __post_init__(self):
        if self.num_scan_lines < 8 or self.samples_per_line < 8:
            raise ValueError("need at least 8 scan lines and 8 samples per line")
        if self.cart_width < 16 or self.cart_height < 16:
            raise ValueError("Cartesian frame must be at least 16x16")
        if self.radial_step <= 0:
            raise ValueError("radial_step must be positive")
        if not 0 < self.angular_span <= 2.0 * math.pi + 1e-12:
            raise ValueError("angular_span must be in (0, 2*pi]")

    @property
    def polar_shape(self):
        return (self.samples_per_line, self.num_scan_lines)


@dataclass
class PolarFrame:
    """8-bit B-mode samples on the polar acquisition grid."""

    geometry: ProbeGeometry
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.uint8)
        if self.samples.shape != self.geometry.polar_shape:
            raise ValueError("sample array shape %s does not match geometry %s"
                             % (self.samples.shape, self.geometry.polar_shape))


@dataclass
class CartesianFrame:
    """Scan-converted 8-bit frame with a validity mask for the scanned disc."""

    width: int
    height: int
    pixels: np.ndarray
    valid_mask: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.uint8)
        self.valid_mask = np.asarray(self.valid_mask, dtype=bool)
        if self.pixels.shape != (self.height, self.width):
            raise ValueError("pixel array shape does not match width/height")
        if self.valid_mask.shape != self.pixels.shape:
            raise ValueError("valid_mask shape does not match pixels")


@dataclass
class LabelMap:
    """Per-pixel tissue class ids on the polar grid."""

    geometry: ProbeGeometry
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.uint8)
        if self.labels.shape != self.geometry.polar_shape:
            raise ValueError("label array shape does not match geometry")
        known = set(TISSUE_CLASSES) | {BACKGROUND}
        present = set(np.unique(self.labels).tolist())
        if not present <= known:
            raise ValueError("unknown class ids in label map: %s" % sorted(present - known))


@dataclass
class ContourSet:
    """Single-valued, nested per-class boundary radii over scan lines.

    ``radii[k, t]`` is the outer boundary radius of class ``class_ids[k]`` at
    scan line ``t``; classes are ordered inner to outer.
    """

    class_ids: tuple
    radii: np.ndarray
    num_samples: int = field(default=0)
    crossing_clamped: bool = field(default=False, compare=False)

    @classmethod
    def with_clamping(cls, class_ids, radii, num_samples):
        """Decoder-side constructor: clamp crossing contours to the outer
        boundary and flag it instead of raising."""
        radii = np.asarray(radii, dtype=np.int64).copy()
        clamped = False
        for k in range(1, len(class_ids)):
            crossing = radii[k] < radii[k - 1]
            if np.any(crossing):
                clamped = True
                radii[k] = np.maximum(radii[k], radii[k - 1])
        return cls(class_ids, radii, num_samples, crossing_clamped=clamped)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=np.int64)
        if self.radii.ndim != 2 or self.radii.shape[0] != len(self.class_ids):
            raise ValueError("radii must be (num_classes, num_scan_lines)")
        if self.num_samples and self.radii.size:
            if self.radii.min() < 0 or self.radii.max() > self.num_samples - 1:
                raise ValueError("contour radii outside [0, samples_per_line-1]")
        for k in range(1, self.radii.shape[0]):
            if np.any(self.radii[k] < self.radii[k - 1]):
                raise CrossingContours("contour %d crosses contour %d" % (k, k - 1))

    @property
    def num_scan_lines(self):
        return self.radii.shape[1]


def _polar_coords(geometry: ProbeGeometry):
    """Per-Cartesian-pixel (r, theta-index) coordinates and validity."""
    g = geometry
    ys, xs = np.mgrid[0:g.cart_height, 0:g.cart_width]
    dx = xs - g.cart_width / 2.0
    dy = ys - g.cart_height / 2.0
    r = np.hypot(dx, dy)
    # theta = 0 up, counterclockwise on screen (up -> left -> down -> right)
    theta = np.arctan2(-dx, -dy) % (2.0 * math.pi)
    t_idx = theta / (g.angular_span / g.num_scan_lines)
    valid = (r <= g.samples_per_line - 1) & (t_idx <= g.num_scan_lines)
    return r, t_idx, valid


def _bilinear_polar(samples: np.ndarray, r: np.ndarray, t_idx: np.ndarray,
                    num_scan_lines: int) -> np.ndarray:
    """Bilinear lookup in a polar array, wrapping in theta, clamping in r."""
    n_r = samples.shape[0]
    r0 = np.clip(np.floor(r).astype(np.int64), 0, n_r - 1)
    r1 = np.minimum(r0 + 1, n_r - 1)
    fr = np.clip(r - r0, 0.0, 1.0)
    t0 = np.floor(t_idx).astype(np.int64) % num_scan_lines
    t1 = (t0 + 1) % num_scan_lines
    ft = t_idx - np.floor(t_idx)
    s = samples.astype(np.float64)
    return ((1 - fr) * (1 - ft) * s[r0, t0] + (1 - fr) * ft * s[r0, t1]
            + fr * (1 - ft) * s[r1, t0] + fr * ft * s[r1, t1])


def polar_to_cartesian(frame: PolarFrame) -> CartesianFrame:
    """Scan-convert a polar frame onto the Cartesian display grid."""
    g = frame.geometry
    r, t_idx, valid = _polar_coords(g)
    out = np.zeros((g.cart_height, g.cart_width), dtype=np.float64)
    vals = _bilinear_polar(frame.samples, r[valid], t_idx[valid], g.num_scan_lines)
    out[valid] = vals
    pixels = np.clip(np.rint(out), 0, 255).astype(np.uint8)
    pixels[~valid] = 0
    return CartesianFrame(g.cart_width, g.cart_height, pixels, valid)


def cartesian_to_polar(frame: CartesianFrame, geometry: ProbeGeometry) -> PolarFrame:
    """Resample a Cartesian frame back onto the polar acquisition grid."""
    g = geometry
    rr = np.arange(g.samples_per_line, dtype=np.float64)[:, None]
    tt = np.arange(g.num_scan_lines, dtype=np.float64)[None, :]
    theta = tt * (g.angular_span / g.num_scan_lines)
    x = g.cart_width / 2.0 - rr * np.sin(theta)
    y = g.cart_height / 2.0 - rr * np.cos(theta)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, g.cart_width - 1)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, g.cart_height - 1)
    x1 = np.minimum(x0 + 1, g.cart_width - 1)
    y1 = np.minimum(y0 + 1, g.cart_height - 1)
    fx = np.clip(x - x0, 0.0, 1.0)
    fy = np.clip(y - y0, 0.0, 1.0)
    p = frame.pixels.astype(np.float64)
    m = frame.valid_mask.astype(np.float64)
    # weight each bilinear neighbor by its validity so pixels outside the
    # scanned disc never bleed into edge samples
    num = np.zeros(x.shape)
    den = np.zeros(x.shape)
    for yy, xx, w in ((y0, x0, (1 - fy) * (1 - fx)),
                      (y0, x1, (1 - fy) * fx),
                      (y1, x0, fy * (1 - fx)),
                      (y1, x1, fy * fx)):
        wm = w * m[yy, xx]
        num += wm * p[yy, xx]
        den += wm
    vals = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    samples = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
    return PolarFrame(g, samples)


def rasterize_contours(contours: ContourSet, geometry: ProbeGeometry,
                       clamp_crossing: bool = False) -> LabelMap:
    """Fill a label map from nested boundary radii.

    For each scan line, radii split the ray into consecutive class bands:
    class k occupies ``prev_radius <= r < radii[k]`` (lumen starts at r=0),
    and everything beyond the last boundary is external.

    With ``clamp_crossing`` (decoder behavior) crossing contours are clamped
    to the outer boundary instead of raising :class:`CrossingContours`.
    """
    g = geometry
    radii = np.asarray(contours.radii, dtype=np.int64)
    if radii.shape[1] != g.num_scan_lines:
        raise ValueError("contour scan-line count does not match geometry")
    if radii.size and (radii.min() < 0 or radii.max() > g.samples_per_line - 1):
        raise ValueError("contour radii outside sample range")
    for k in range(1, radii.shape[0]):
        crossing = radii[k] < radii[k - 1]
        if np.any(crossing):
            if not clamp_crossing:
                raise CrossingContours(
                    "inner contour exceeds outer on %d scan lines" % int(crossing.sum()))
            radii = radii.copy()
            radii[k] = np.maximum(radii[k], radii[k - 1])
    labels = np.full(g.polar_shape, EXTERNAL, dtype=np.uint8)
    r_axis = np.arange(g.samples_per_line, dtype=np.int64)[:, None]
    prev = np.zeros(g.num_scan_lines, dtype=np.int64)[None, :]
    for k, cid in enumerate(contours.class_ids):
        bound = radii[k][None, :]
        labels[(r_axis >= prev) & (r_axis < bound)] = cid
        prev = np.maximum(prev, bound)
    return LabelMap(g, labels)


def boundary_radii(label_map: LabelMap, class_ids=(LUMEN, MEDIA)) -> np.ndarray:
    """Re-extract per-scan-line boundary radii from a nested-band label map.

    Inverse of :func:`rasterize_contours` on well-formed maps: the boundary
    for class_ids[:k+1] is one past the last sample belonging to those
    classes.  Rays with no inner-class sample yield radius 0.
    """
    labels = label_map.labels
    n_r, n_t = labels.shape
    radii = np.zeros((len(class_ids), n_t), dtype=np.int64)
    inner = np.zeros(labels.shape, dtype=bool)
    for k, cid in enumerate(class_ids):
        inner |= labels == cid
        has = inner.any(axis=0)
        last = (n_r - 1) - np.argmax(inner[::-1], axis=0)
        radii[k] = np.where(has, last + 1, 0)
    radii = np.minimum(radii, n_r - 1)
    return radii
