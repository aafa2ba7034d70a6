import numpy as np
import pytest

from bandlt import bandset


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def three_bands():
    """Gap ratio 0.5: max(1/2, 2/4)."""
    return bandset.validate([(1, 2), (3, 4), (6, 8)])


def sample_band_points(band_set, total):
    """Uniform sample of the band set, allocated proportionally to length.

    Returns a sorted 1D array; used as the dense brute-force distance
    oracle (nearest sample via searchsorted equals the min over all
    sampled points, since |z - t|^2 is quadratic in real t).
    """
    lengths = np.array([b - a for a, b in band_set.edges], dtype=float)
    weights = lengths / lengths.sum()
    pts = []
    for (a, b), w in zip(band_set.edges, weights):
        m = max(int(round(total * w)), 2)
        pts.append(np.linspace(a, b, m))
    return np.sort(np.concatenate(pts))


def nearest_sample_distance(z, samples):
    """min_i |z - samples_i| for sorted real samples; z complex array."""
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    idx = np.searchsorted(samples, zs.real)
    best = np.full(zs.shape, np.inf)
    for shift in (-1, 0):
        j = np.clip(idx + shift, 0, samples.size - 1)
        best = np.minimum(best, np.abs(zs - samples[j]))
    return best
