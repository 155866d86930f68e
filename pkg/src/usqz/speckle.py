"""Nakagami speckle-statistics estimation and sliding-window feature maps.

Feature maps drive the compressor's tissue classifier.  8-bit B-mode input
is mapped back to linear envelope amplitude (inverting the display log
compression) before any moments are taken; fitting on log-compressed data
would distort the shape parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DegenerateSample
from .grid import PolarFrame, ProbeGeometry

CHANNEL_NAMES = ("nakagami_m", "log_omega", "mean_amplitude")

# Relative variance below this is treated as a degenerate (constant) window.
_DEGENERATE_REL_VAR = 1e-12


@dataclass(frozen=True)
class NakagamiParams:
    """Nakagami amplitude-distribution parameters.

    m is the shape (m=1 is Rayleigh, fully developed speckle); omega is the
    mean squared amplitude.
    """

    m: float
    omega: float

    def __post_init__(self):
        if not (self.m > 0 and self.omega > 0):
            raise ValueError("Nakagami parameters must be positive")


@dataclass
class FeatureStack:
    """Per-pixel classifier features: (nakagami_m, log_omega, mean_amplitude)."""

    geometry: ProbeGeometry
    channels: np.ndarray  # (3, N_r, N_theta) float64
    window: int

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.float64)
        expected = (len(CHANNEL_NAMES),) + self.geometry.polar_shape
        if self.channels.shape != expected:
            raise ValueError("channel array shape %s, expected %s"
                             % (self.channels.shape, expected))
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if not np.all(np.isfinite(self.channels)):
            raise ValueError("feature channels must be finite everywhere")


def nakagami_fit(samples) -> NakagamiParams:
    """Moment-matched Nakagami fit: omega = E[x^2], m = E[x^2]^2 / Var[x^2]."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 8:
        raise DegenerateSample("need at least 8 samples, got %d" % x.size)
    if np.any(x < 0):
        raise ValueError("amplitudes must be non-negative")
    x2 = x * x
    omega = float(x2.mean())
    var = float(x2.var())
    if var <= _DEGENERATE_REL_VAR * max(omega * omega, np.finfo(float).tiny):
        raise DegenerateSample("zero variance of squared amplitude")
    return NakagamiParams(m=omega * omega / var, omega=omega)


def inverse_log_compression(samples: np.ndarray, dyn_range_db: float) -> np.ndarray:
    """Map 8-bit log-compressed display values back to linear amplitude.

    Inverse of the display mapping in :mod:`usqz.synth`: 255 -> 1.0 and
    0 -> 10^(-dyn/20), on a normalized amplitude scale.
    """
    v = np.asarray(samples, dtype=np.float64)
    return 10.0 ** (dyn_range_db * (v / 255.0 - 1.0) / 20.0)


def _impute_degenerate(m: np.ndarray, degenerate: np.ndarray) -> np.ndarray:
    """Replace degenerate-window shape estimates with a neighborhood median.

    Valid values within growing square neighborhoods (up to 9x9, wrap in
    theta, clamp in r) are used; pixels with no valid neighbor fall back to
    the global valid median, or to the Rayleigh value 1.0 if nothing is
    valid anywhere (uniform frame).
    """
    out = m.copy()
    valid = ~degenerate
    if not valid.any():
        out[:] = 1.0
        return out
    global_fill = float(np.median(m[valid]))
    n_r, n_t = m.shape
    ri, ti = np.nonzero(degenerate)
    filled = np.zeros(ri.shape, dtype=bool)
    values = np.full(ri.shape, global_fill)
    for half in (1, 2, 3, 4):
        todo = ~filled
        if not todo.any():
            break
        offsets = np.arange(-half, half + 1)
        rr = np.clip(ri[todo, None, None] + offsets[None, :, None], 0, n_r - 1)
        tt = (ti[todo, None, None] + offsets[None, None, :]) % n_t
        neigh = m[rr, tt]
        ok = valid[rr, tt]
        counts = ok.reshape(ok.shape[0], -1).sum(axis=1)
        flat = neigh.reshape(neigh.shape[0], -1)
        masked = np.where(ok.reshape(flat.shape), flat, np.nan)
        with np.errstate(all="ignore"):
            med = np.nanmedian(masked, axis=1)
        got = counts > 0
        idx = np.nonzero(todo)[0][got]
        values[idx] = med[got]
        filled[idx] = True
    out[ri, ti] = values
    return out


def feature_map(frame: PolarFrame, window: int = 9,
                dyn_range_db: float = 50.0) -> FeatureStack:
    """Sliding-window Nakagami parameters and local mean amplitude per pixel.

    Windows wrap around in theta and clamp at the radial ends.  Windows with
    degenerate (zero-variance) statistics get their shape estimate imputed
    from the neighborhood median rather than failing.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be odd and >= 3")
    amp = inverse_log_compression(frame.samples, dyn_range_db)
    s1, s2, s4 = backend.window_moment_sums(amp, window)
    n = float(window * window)
    mean_amp = s1 / n
    omega = s2 / n
    var = s4 / n - omega * omega
    floor = np.maximum(_DEGENERATE_REL_VAR * omega * omega, np.finfo(float).tiny)
    degenerate = var <= floor
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.where(degenerate, 1.0, omega * omega / np.maximum(var, floor))
    m = _impute_degenerate(m, degenerate)
    log_omega = np.log(np.maximum(omega, np.finfo(float).tiny))
    channels = np.stack([m, log_omega, mean_amp])
    return FeatureStack(frame.geometry, channels, window)


def write_feature_stack(stack: FeatureStack, path_base: str) -> None:
    """Dump a stack as raw 32-bit float planes plus a text sidecar."""
    raw = stack.channels.astype("<f4")
    with open(path_base + ".raw", "wb") as f:
        f.write(raw.tobytes())
    n_r, n_t = stack.geometry.polar_shape
    with open(path_base + ".txt", "w") as f:
        f.write("planes %d\n" % len(CHANNEL_NAMES))
        f.write("samples_per_line %d\n" % n_r)
        f.write("num_scan_lines %d\n" % n_t)
        f.write("window %d\n" % stack.window)
        f.write("dtype float32_le\n")
        f.write("channels %s\n" % " ".join(CHANNEL_NAMES))
