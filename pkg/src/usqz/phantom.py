"""Synthetic IVUS-like phantoms: harmonic ring contours with guaranteed
chain-code encodability, plus dataset generation with a train/test manifest."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .codec import ALPHABET_DELTAS, compress_contour_set
from .errors import InfeasibleSpec
from .grid import (ContourSet, LUMEN, MEDIA, LabelMap, ProbeGeometry,
                   rasterize_contours)
from .pgm import write_pgm
from .synth import PsfSpec, TissueEchoParams, simulate_bmode

# |d radius / d theta-index| above this cannot round into the {-1,0,+1,+2}
# move alphabet reliably
_MAX_SLOPE = 0.9


@dataclass(frozen=True)
class HarmonicPerturbation:
    amplitude: float
    angular_frequency: int
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0 or self.angular_frequency < 0:
            raise ValueError("amplitude and angular frequency must be >= 0")


@dataclass(frozen=True)
class PhantomSpec:
    """Ring phantom: per-class base radii plus harmonic boundary wobble."""

    geometry: ProbeGeometry
    base_radii: dict = field(default_factory=lambda: {LUMEN: 70, MEDIA: 110})
    harmonics: dict = field(default_factory=dict)  # class id -> tuple of HarmonicPerturbation
    dead_zone_radius: int = 20
    noise_level: float = 0.0  # fraction of label pixels flipped at random

    def __post_init__(self):
        if self.dead_zone_radius < 0:
            raise ValueError("dead_zone_radius must be >= 0")
        if not 0 <= self.noise_level < 1:
            raise ValueError("noise_level must be in [0, 1)")

    def max_slope(self, class_id: int) -> float:
        dtheta = self.geometry.angular_span / self.geometry.num_scan_lines
        return sum(h.amplitude * h.angular_frequency * dtheta
                   for h in self.harmonics.get(class_id, ()))


def _radius_profile(spec: PhantomSpec, class_id: int) -> np.ndarray:
    g = spec.geometry
    theta = np.arange(g.num_scan_lines) * (g.angular_span / g.num_scan_lines)
    r = np.full(g.num_scan_lines, float(spec.base_radii[class_id]))
    for h in spec.harmonics.get(class_id, ()):
        r += h.amplitude * np.sin(h.angular_frequency * theta + h.phase)
    return r


def _feasibility_pass(radii: np.ndarray, n_samples: int) -> np.ndarray:
    """Round to integers and spread over-budget deltas onto following lines."""
    r = np.rint(radii).astype(np.int64)
    np.clip(r, 0, n_samples - 1, out=r)
    n = r.size
    for _ in range(n):
        changed = False
        for i in range(n):
            j = (i + 1) % n
            v = min(max(int(r[j]), r[i] - 1), r[i] + 2)
            if v != r[j]:
                r[j] = v
                changed = True
        if not changed:
            break
    return r


def generate_phantom(spec: PhantomSpec, seed: int = 0):
    """Deterministic (ContourSet, LabelMap) for a phantom spec.

    Raises InfeasibleSpec when the harmonic content is too steep for the
    chain-code delta budget.
    """
    g = spec.geometry
    for cid in (LUMEN, MEDIA):
        if spec.max_slope(cid) > _MAX_SLOPE:
            raise InfeasibleSpec(
                "class %d boundary slope %.2f exceeds the delta budget"
                % (cid, spec.max_slope(cid)))
    profiles = {cid: _radius_profile(spec, cid) for cid in (LUMEN, MEDIA)}
    radii = np.empty((2, g.num_scan_lines), dtype=np.int64)
    for k, cid in enumerate((LUMEN, MEDIA)):
        r = _feasibility_pass(profiles[cid], g.samples_per_line)
        if np.max(np.abs(r - profiles[cid])) > 3.0:
            raise InfeasibleSpec("feasibility pass deviates from class %d profile" % cid)
        deltas = np.diff(np.append(r, r[0]))
        if not np.all(np.isin(deltas, list(ALPHABET_DELTAS))):
            raise InfeasibleSpec("class %d contour not encodable after capping" % cid)
        radii[k] = r
    radii[0] = np.maximum(radii[0], spec.dead_zone_radius)
    radii[1] = np.maximum(radii[1], radii[0])
    contours = ContourSet((LUMEN, MEDIA), radii, num_samples=g.samples_per_line)
    label_map = rasterize_contours(contours, g)
    if spec.noise_level > 0:
        rng = np.random.default_rng(seed)
        labels = label_map.labels.copy()
        flip = rng.random(labels.shape) < spec.noise_level
        labels[flip] = rng.integers(0, 3, size=int(flip.sum()), dtype=np.uint8)
        label_map = LabelMap(g, labels)
    return contours, label_map


def random_spec(geometry: ProbeGeometry, rng: np.random.Generator,
                dead_zone_radius: int = 20, noise_level: float = 0.0,
                max_harmonics: int = 3, max_frequency: int = 8) -> PhantomSpec:
    """Draw a vessel-like spec whose harmonic budget respects encodability."""
    n_r = geometry.samples_per_line
    base_lumen = int(rng.integers(max(dead_zone_radius + 10, n_r // 8), n_r // 3))
    base_media = int(rng.integers(base_lumen + n_r // 16, int(n_r * 0.55)))
    dtheta = geometry.angular_span / geometry.num_scan_lines
    harmonics = {}
    for cid in (LUMEN, MEDIA):
        terms = []
        budget = 0.8 * _MAX_SLOPE / dtheta  # total amplitude*frequency budget
        for _ in range(int(rng.integers(1, max_harmonics + 1))):
            k = int(rng.integers(1, max_frequency + 1))
            max_amp = budget / k
            if max_amp < 0.5:
                continue
            amp = float(rng.uniform(0.5, min(max_amp, n_r / 16)))
            terms.append(HarmonicPerturbation(amp, k, float(rng.uniform(0, 2 * math.pi))))
            budget -= amp * k
            if budget <= 0:
                break
        harmonics[cid] = tuple(terms)
    return PhantomSpec(geometry, {LUMEN: base_lumen, MEDIA: base_media},
                       harmonics, dead_zone_radius, noise_level)


def generate_dataset(out_dir, n: int, geometry: ProbeGeometry, seed: int = 0,
                     params: TissueEchoParams = None, psf: PsfSpec = None,
                     acquisition_frequency_khz: int = 20000,
                     train_fraction: float = 0.9) -> str:
    """Write n phantom items (frame, labels, compressed contours) + manifest.

    Returns the manifest path.  Item i is fully determined by (seed, i), so
    regeneration is byte-identical.
    """
    if n < 2:
        raise ValueError("need at least 2 items for a train/test split")
    if params is None:
        params = TissueEchoParams()
    if psf is None:
        psf = PsfSpec(center_frequency_mhz=acquisition_frequency_khz / 1000.0)
    os.makedirs(out_dir, exist_ok=True)
    n_train = max(1, min(n - 1, int(round(train_fraction * n))))
    lines = []
    for i in range(n):
        rng = np.random.default_rng((seed, i))
        spec = random_spec(geometry, rng)
        contours, labels = generate_phantom(spec, seed=int(rng.integers(2 ** 31)))
        frame = simulate_bmode(labels, params, psf, seed=int(rng.integers(2 ** 31)))
        stem = "phantom_%04d" % i
        write_pgm(os.path.join(out_dir, stem + "_frame.pgm"), frame.samples)
        write_pgm(os.path.join(out_dir, stem + "_labels.pgm"), labels.labels)
        blob = compress_contour_set(contours, geometry, acquisition_frequency_khz)
        with open(os.path.join(out_dir, stem + ".usqz"), "wb") as f:
            f.write(blob)
        role = "train" if i < n_train else "test"
        lines.append("%s %s %s_frame.pgm %s_labels.pgm %s.usqz"
                     % (stem, role, stem, stem, stem))
    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w") as f:
        f.write("\n".join(lines) + "\n")
    return manifest


def read_manifest(path):
    """Parse manifest lines into dicts with absolute file paths."""
    base = os.path.dirname(os.path.abspath(path))
    items = []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            stem, role, frame, labels, blob = line.split()
            items.append({"id": stem, "role": role,
                          "frame": os.path.join(base, frame),
                          "labels": os.path.join(base, labels),
                          "compressed": os.path.join(base, blob)})
    return items
