import numpy as np
import pytest

from microspot.dataio import canonical_landmarks


@pytest.fixture
def layout64():
    return canonical_landmarks(64, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def smooth_texture(rng, height, width, smooth=3.0):
    """Full-contrast smoothed-noise texture; high-texture input for flow tests."""
    from scipy.ndimage import gaussian_filter

    tex = gaussian_filter(rng.standard_normal((height, width)), smooth)
    tex -= tex.min()
    tex /= np.ptp(tex)
    return tex


def shifted_pair(seed, size=128, d=1, smooth=3.0):
    """Two crops of one texture, the second displaced by +d px along x."""
    rng = np.random.default_rng(seed)
    big = smooth_texture(rng, size + 32, size + 64, smooth)
    a = big[16:16 + size, 32:32 + size].copy()
    b = big[16:16 + size, 32 - d:32 - d + size].copy()
    return a, b
