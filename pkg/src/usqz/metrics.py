"""Evaluation battery: Jensen-Shannon divergences over tissue histograms,
attenuation-slope maps and segmentation overlap metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (BinningMismatch, GeometryMismatch, InsufficientPixels)
from .grid import LabelMap, PolarFrame, TISSUE_CLASSES

DEFAULT_BINS = 64
TISSUE_PAIRS = ((0, 1), (1, 2), (0, 2))  # lumen-media, media-ext, lumen-ext
MIN_REGION_PIXELS = 100


@dataclass(frozen=True)
class Pmf:
    """Normalized histogram over a fixed binning."""

    probs: np.ndarray
    bin_edges: np.ndarray
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        object.__setattr__(self, "bin_edges", np.asarray(self.bin_edges, dtype=np.float64))
        if self.probs.ndim != 1 or self.bin_edges.size != self.probs.size + 1:
            raise ValueError("probs and bin_edges sizes inconsistent")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if self.probs.min() < 0 or abs(self.probs.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must be >= 0 and sum to 1")


def intensity_pmf(samples, bins: int = DEFAULT_BINS,
                  value_range=(0.0, 255.0), smoothing: float = 1.0) -> Pmf:
    """Histogram with add-one (by default) smoothing so KL terms stay finite."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 1:
        raise InsufficientPixels("empty sample set")
    counts, edges = np.histogram(x, bins=bins, range=value_range)
    weights = counts + smoothing
    return Pmf(weights / weights.sum(), edges, int(x.size))


def js_divergence(p: Pmf, q: Pmf) -> float:
    """Jensen-Shannon divergence in nats: (KL(p||m) + KL(q||m)) / 2."""
    if p.probs.size != q.probs.size or not np.allclose(p.bin_edges, q.bin_edges):
        raise BinningMismatch("operand histograms use different binnings")
    a, b = p.probs, q.probs
    m = 0.5 * (a + b)
    def kl(u, v):
        mask = u > 0
        return float(np.sum(u[mask] * np.log(u[mask] / v[mask])))
    return 0.5 * kl(a, m) + 0.5 * kl(b, m)


def _check_geometry(frame_geom, labels: LabelMap):
    if frame_geom != labels.geometry:
        raise GeometryMismatch("frame and label map geometries differ")


def _class_region(frame: PolarFrame, labels: LabelMap, class_id: int) -> np.ndarray:
    region = frame.samples[labels.labels == class_id]
    if region.size < MIN_REGION_PIXELS:
        raise InsufficientPixels("class %d has only %d pixels" % (class_id, region.size))
    return region


def inter_tissue_jsd(frame: PolarFrame, labels: LabelMap,
                     bins: int = DEFAULT_BINS) -> dict:
    """Per tissue pair JSD between class-region intensity histograms.

    Higher values mean better contrast between tissue types.
    """
    _check_geometry(frame.geometry, labels)
    pmfs = {cid: intensity_pmf(_class_region(frame, labels, cid), bins)
            for cid in TISSUE_CLASSES}
    return {pair: js_divergence(pmfs[pair[0]], pmfs[pair[1]])
            for pair in TISSUE_PAIRS}


def intra_tissue_jsd(frame_a: PolarFrame, frame_b: PolarFrame, labels: LabelMap,
                     bins: int = DEFAULT_BINS) -> dict:
    """Per class JSD between the same region of two frames.

    Lower values mean better preservation of speckle statistics.
    """
    _check_geometry(frame_a.geometry, labels)
    _check_geometry(frame_b.geometry, labels)
    out = {}
    for cid in TISSUE_CLASSES:
        pa = intensity_pmf(_class_region(frame_a, labels, cid), bins)
        pb = intensity_pmf(_class_region(frame_b, labels, cid), bins)
        out[cid] = js_divergence(pa, pb)
    return out


@dataclass
class AttenuationMap:
    """Windowed axial slopes of the log envelope, in dB per sample."""

    slopes: np.ndarray        # (num_windows, N_theta)
    window_centers: np.ndarray  # radial sample index per window row
    window: int

    def __post_init__(self):
        if self.window < 8:
            raise ValueError("window must be >= 8 samples")
        if not np.all(np.isfinite(self.slopes)):
            raise ValueError("slopes must be finite")


def attenuation_map(frame, window: int = 32, intensity_floor: float = 0.5) -> AttenuationMap:
    """Least-squares slope of 20*log10(intensity) vs r per axial window.

    Windows slide along each scan line with stride window // 2.  Intensities
    are floored before the log so zero samples stay finite.  Accepts a
    PolarFrame or a bare 2-D intensity array.
    """
    if window < 8:
        raise ValueError("window must be >= 8 samples")
    samples = frame.samples if isinstance(frame, PolarFrame) else np.asarray(frame)
    intens = np.maximum(samples.astype(np.float64), intensity_floor)
    log_env = 20.0 * np.log10(intens)
    n_r, n_t = log_env.shape
    stride = window // 2
    starts = np.arange(0, n_r - window + 1, stride)
    if starts.size == 0:
        raise ValueError("frame shorter than one window")
    r = np.arange(window, dtype=np.float64)
    r_c = r - r.mean()
    denom = float(np.sum(r_c * r_c))
    slopes = np.empty((starts.size, n_t))
    for i, s in enumerate(starts):
        seg = log_env[s:s + window, :]
        slopes[i] = (r_c[:, None] * (seg - seg.mean(axis=0))).sum(axis=0) / denom
    centers = starts + window // 2
    return AttenuationMap(slopes, centers, window)


def attenuation_jsd(frame_a, frame_b, labels: LabelMap, window: int = 32,
                    bins: int = DEFAULT_BINS) -> dict:
    """Per class JSD between the two frames' attenuation-slope histograms.

    Each slope window is assigned the class of the label at its center
    sample.  The two histograms share one binning spanning both slope sets.
    """
    amap_a = attenuation_map(frame_a, window)
    amap_b = attenuation_map(frame_b, window)
    win_labels = labels.labels[amap_a.window_centers, :]
    lo = min(amap_a.slopes.min(), amap_b.slopes.min())
    hi = max(amap_a.slopes.max(), amap_b.slopes.max())
    if hi <= lo:
        hi = lo + 1e-6
    out = {}
    for cid in TISSUE_CLASSES:
        mask = win_labels == cid
        sa, sb = amap_a.slopes[mask], amap_b.slopes[mask]
        if sa.size < 2:
            raise InsufficientPixels("class %d covers only %d slope windows"
                                     % (cid, sa.size))
        pa = intensity_pmf(sa, bins, (lo, hi))
        pb = intensity_pmf(sb, bins, (lo, hi))
        out[cid] = js_divergence(pa, pb)
    return out


@dataclass(frozen=True)
class ConfusionCounts:
    """One-vs-rest pixel confusion counts."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion_counts(pred: LabelMap, truth: LabelMap, class_id: int) -> ConfusionCounts:
    if pred.geometry != truth.geometry:
        raise GeometryMismatch("prediction and truth geometries differ")
    p = pred.labels == class_id
    t = truth.labels == class_id
    return ConfusionCounts(tp=int(np.sum(p & t)), fp=int(np.sum(p & ~t)),
                           tn=int(np.sum(~p & ~t)), fn=int(np.sum(~p & t)))


def overlap_metrics(pred: LabelMap, truth: LabelMap, class_id: int) -> dict:
    """Sensitivity, specificity, Dice and positive predictive value.

    0/0 resolves to 1.0 only when the class is absent from both maps
    (vacuously perfect); otherwise an empty denominator is an error.
    """
    c = confusion_counts(pred, truth, class_id)
    absent = (c.tp + c.fn == 0) and (c.tp + c.fp == 0)

    def ratio(num, den, name):
        if den == 0:
            if absent:
                return 1.0
            raise ZeroDivisionError("%s undefined: empty denominator" % name)
        return num / den

    return {
        "SE": ratio(c.tp, c.tp + c.fn, "sensitivity"),
        "SP": ratio(c.tn, c.tn + c.fp, "specificity"),
        "Dice": ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, "Dice"),
        "PPV": ratio(c.tp, c.tp + c.fp, "PPV"),
    }
