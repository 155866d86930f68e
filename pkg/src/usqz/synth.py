"""Pseudo B-mode synthesis: echogenicity maps, scatterer fields, PSF
convolution, envelope detection and log compression.

This is the decompressor's generator.  A label map rebuilt from the
transmitted contours is turned into an echogenicity map, populated with
Gaussian scatterers, convolved with a separable-geometry point spread
function (Gaussian-enveloped cosine axially, Gaussian laterally), envelope
detected along the axial direction and log-compressed to 8 bits.

A refiner hook sits between simulation and output so a learned
post-processor can be attached; the default is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import hilbert

from .errors import UnknownClass
from .grid import (BACKGROUND, EXTERNAL, LUMEN, MEDIA, CartesianFrame,
                   LabelMap, PolarFrame, ProbeGeometry, polar_to_cartesian,
                   rasterize_contours)
from .codec import decompress_contour_set

DEFAULT_DYN_RANGE_DB = 50.0
DEFAULT_SPEED_OF_SOUND_M_S = 1540.0


@dataclass(frozen=True)
class TissueClassParams:
    """Acoustic description of one tissue class."""

    echogenicity: float              # mean scatterer amplitude, linear scale
    attenuation_db_mhz_cm: float
    scatterer_density: float = 1.0   # fraction of occupied sites

    def __post_init__(self):
        if self.echogenicity < 0 or self.attenuation_db_mhz_cm < 0:
            raise ValueError("echogenicity and attenuation must be >= 0")
        if not 0 < self.scatterer_density <= 1:
            raise ValueError("scatterer_density must be in (0, 1]")


@dataclass(frozen=True)
class TissueEchoParams:
    """Per-class tissue parameters; background is implicitly anechoic."""

    classes: dict = field(default_factory=lambda: dict(DEFAULT_TISSUE_PARAMS))

    def require(self, class_id: int) -> TissueClassParams:
        if class_id == BACKGROUND:
            return TissueClassParams(0.0, 0.0, 1.0)
        try:
            return self.classes[class_id]
        except KeyError:
            raise UnknownClass("no tissue parameters for class id %d" % class_id) from None


# Defaults tuned once against the phantom acceptance thresholds, then frozen.
DEFAULT_TISSUE_PARAMS = {
    LUMEN: TissueClassParams(0.05, 0.1),
    MEDIA: TissueClassParams(0.6, 0.8),
    EXTERNAL: TissueClassParams(0.35, 0.6),
}


@dataclass(frozen=True)
class PsfSpec:
    """Point spread function: axial Gaussian-windowed cosine at the
    acquisition wavelength times a lateral Gaussian."""

    center_frequency_mhz: float
    speed_of_sound_m_s: float = DEFAULT_SPEED_OF_SOUND_M_S
    axial_sigma: float = 2.0    # samples
    lateral_sigma: float = 3.0  # scan lines

    def __post_init__(self):
        if self.center_frequency_mhz <= 0 or self.speed_of_sound_m_s <= 0:
            raise ValueError("frequency and speed of sound must be positive")
        if self.axial_sigma <= 0 or self.lateral_sigma <= 0:
            raise ValueError("PSF sigmas must be positive")

    def oscillation_period_samples(self, radial_step_mm: float) -> float:
        """Axial period: pulse-echo wavelength over two radial steps."""
        wavelength_mm = self.speed_of_sound_m_s / self.center_frequency_mhz / 1000.0
        return wavelength_mm / (2.0 * radial_step_mm)

    def kernel(self, radial_step_mm: float) -> np.ndarray:
        """Energy-normalized 2-D kernel with odd side lengths."""
        half_a = max(1, int(math.ceil(3.0 * self.axial_sigma)))
        half_l = max(1, int(math.ceil(3.0 * self.lateral_sigma)))
        dr = np.arange(-half_a, half_a + 1, dtype=np.float64)[:, None]
        dt = np.arange(-half_l, half_l + 1, dtype=np.float64)[None, :]
        period = self.oscillation_period_samples(radial_step_mm)
        k = (np.exp(-0.5 * (dr / self.axial_sigma) ** 2)
             * np.cos(2.0 * math.pi * dr / period)
             * np.exp(-0.5 * (dt / self.lateral_sigma) ** 2))
        return k / math.sqrt(np.sum(k * k))


def echogenicity_map(labels: LabelMap, params: TissueEchoParams) -> np.ndarray:
    """Pointwise class-id -> echogenicity lookup; background maps to 0."""
    lut = np.zeros(256, dtype=np.float64)
    for cid in np.unique(labels.labels):
        lut[cid] = params.require(int(cid)).echogenicity
    return lut[labels.labels]


def _per_class_lut(labels: LabelMap, params: TissueEchoParams, attr: str) -> np.ndarray:
    lut = np.zeros(256, dtype=np.float64)
    if attr == "scatterer_density":
        lut[:] = 1.0
    for cid in np.unique(labels.labels):
        lut[cid] = getattr(params.require(int(cid)), attr)
    return lut[labels.labels]


def attenuation_gain(labels: LabelMap, params: TissueEchoParams,
                     freq_mhz: float) -> np.ndarray:
    """Depth-dependent amplitude gain exp(-alpha_np * f * depth)."""
    alpha_db = _per_class_lut(labels, params, "attenuation_db_mhz_cm")
    g = labels.geometry
    depth_cm = (np.arange(g.samples_per_line, dtype=np.float64)[:, None]
                * g.radial_step / 10.0)
    return np.exp(-(math.log(10.0) / 20.0) * alpha_db * freq_mhz * depth_cm)


def scatterer_field(echo: np.ndarray, density, seed: int) -> np.ndarray:
    """Random scatterer amplitudes: site occupied with the given probability,
    amplitude Normal(0, echo^2).  Deterministic for a fixed seed."""
    echo = np.asarray(echo, dtype=np.float64)
    rng = np.random.default_rng(seed)
    occupied = rng.random(echo.shape) < density
    amp = rng.standard_normal(echo.shape) * echo
    return np.where(occupied, amp, 0.0)


def psf_convolve(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution, circular in theta (axis 1), zero-padded in r.

    Accumulates tap by tap in a fixed order, so the result commutes
    bit-exactly with circular shifts along theta.
    """
    field = np.asarray(field, dtype=np.float64)
    n_r = field.shape[0]
    ka, kl = kernel.shape
    ha, hl = ka // 2, kl // 2
    out = np.zeros_like(field)
    for a in range(ka):
        dr = a - ha
        for b in range(kl):
            w = kernel[a, b]
            if w == 0.0:
                continue
            shifted = np.roll(field, b - hl, axis=1)
            if dr >= 0:
                out[dr:, :] += w * shifted[:n_r - dr, :]
            else:
                out[:n_r + dr, :] += w * shifted[-dr:, :]
    return out


def envelope(rf: np.ndarray) -> np.ndarray:
    """Axial analytic-signal envelope, FFT zero-padded to a power of two."""
    n_r = rf.shape[0]
    n_fft = 1 << (n_r - 1).bit_length()
    analytic = hilbert(rf, N=n_fft, axis=0)[:n_r]
    return np.abs(analytic)


def log_compress(env: np.ndarray, dyn_range_db: float = DEFAULT_DYN_RANGE_DB) -> np.ndarray:
    """Map [max/10^(dyn/20), max] onto [0, 255]; all-zero input stays zero."""
    env = np.asarray(env, dtype=np.float64)
    peak = env.max()
    if peak <= 0:
        return np.zeros(env.shape, dtype=np.uint8)
    ratio = env / peak
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(ratio)
    db = np.clip(db, -dyn_range_db, 0.0)
    return np.rint((db + dyn_range_db) / dyn_range_db * 255.0).astype(np.uint8)


def identity_refiner(frame: PolarFrame) -> PolarFrame:
    """Default refiner: pass-through extension point for a learned model."""
    return frame


def simulate_bmode(labels: LabelMap, params: TissueEchoParams, psf: PsfSpec,
                   dyn_range_db: float = DEFAULT_DYN_RANGE_DB, seed: int = 0,
                   refiner=identity_refiner, return_envelope: bool = False):
    """Full Stage-0 pipeline from a label map to an 8-bit polar frame."""
    g = labels.geometry
    echo = echogenicity_map(labels, params)
    echo = echo * attenuation_gain(labels, params, psf.center_frequency_mhz)
    density = _per_class_lut(labels, params, "scatterer_density")
    field = scatterer_field(echo, density, seed)
    rf = psf_convolve(field, psf.kernel(g.radial_step))
    env = envelope(rf)
    frame = refiner(PolarFrame(g, log_compress(env, dyn_range_db)))
    if return_envelope:
        return frame, env
    return frame


def decompress_to_polar(data: bytes, params: TissueEchoParams = None,
                        psf: PsfSpec = None, seed: int = 0,
                        radial_step: float = 0.01,
                        dyn_range_db: float = DEFAULT_DYN_RANGE_DB,
                        refiner=identity_refiner):
    """Compressed bytes -> (header, rebuilt LabelMap, simulated PolarFrame)."""
    header, cset = decompress_contour_set(data, radial_step)
    geometry = header.geometry(radial_step)
    labels = rasterize_contours(cset, geometry, clamp_crossing=True)
    if params is None:
        params = TissueEchoParams()
    if psf is None:
        psf = PsfSpec(center_frequency_mhz=header.acquisition_frequency_khz / 1000.0)
    frame = simulate_bmode(labels, params, psf, dyn_range_db, seed, refiner)
    return header, labels, frame


def decompress(data: bytes, params: TissueEchoParams = None,
               psf: PsfSpec = None, seed: int = 0,
               radial_step: float = 0.01,
               dyn_range_db: float = DEFAULT_DYN_RANGE_DB,
               refiner=identity_refiner) -> CartesianFrame:
    """Compressed bytes -> scan-converted Cartesian frame at the header size."""
    _, _, frame = decompress_to_polar(data, params, psf, seed, radial_step,
                                      dyn_range_db, refiner)
    return polar_to_cartesian(frame)
