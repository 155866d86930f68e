import numpy as np
import pytest

from usqz.grid import ContourSet, LUMEN, MEDIA, ProbeGeometry


@pytest.fixture
def geometry():
    return ProbeGeometry(num_scan_lines=256, samples_per_line=384,
                         cart_width=512, cart_height=512)


@pytest.fixture
def small_geometry():
    return ProbeGeometry(num_scan_lines=64, samples_per_line=96,
                         cart_width=200, cart_height=200)


def ring_contours(geometry, r_lumen=50, r_media=90):
    radii = np.array([[r_lumen] * geometry.num_scan_lines,
                      [r_media] * geometry.num_scan_lines])
    return ContourSet((LUMEN, MEDIA), radii, num_samples=geometry.samples_per_line)


def random_encodable_radii(rng, n_theta, n_samples):
    """Random walk with circular deltas inside the chain-code alphabet."""
    while True:
        start = int(rng.integers(n_samples // 4, 3 * n_samples // 4))
        deltas = rng.choice([-1, 0, 1, 2], size=n_theta - 1, p=[0.35, 0.35, 0.2, 0.1])
        radii = start + np.concatenate(([0], np.cumsum(deltas)))
        if radii.min() < 0 or radii.max() > n_samples - 1:
            continue
        if int(radii[0] - radii[-1]) in (-1, 0, 1, 2):
            return radii
