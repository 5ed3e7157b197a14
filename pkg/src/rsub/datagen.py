"""Seeded synthetic data: a noisy line with outliers, drifting frame stacks."""

import zlib

import numpy as np

from .geometry import as_points

# Outliers sit below the line y = x; entry j % 5 is used for the j-th one,
# shifted down by 0.1 per full cycle.
OUTLIER_BASE = np.array(
    [
        [1.0, -0.5],
        [0.9, -0.4],
        [0.8, -0.3],
        [0.7, -0.2],
        [0.6, -0.1],
    ]
)


def substream(seed, label):
    """Independent generator for one labeled random site under a run seed.

    Uses a counter-based Philox generator keyed by the seed and a CRC of the
    label, so streams do not depend on the order in which sites draw.
    """
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=(zlib.crc32(label.encode()),))
    return np.random.Generator(np.random.Philox(ss))


def gen_line_outliers(n_inliers=50, n_outliers=2, noise_sigma=0.01, seed=0):
    """Points near the segment from (0,0) to (1,1) plus fixed outliers below it."""
    if n_inliers < 0 or n_outliers < 0:
        raise ValueError("point counts must be nonnegative")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    t = np.linspace(0.0, 1.0, n_inliers)
    inliers = np.outer(t, [1.0, 1.0])
    if noise_sigma > 0 and n_inliers:
        rng = substream(seed, "gen_line_outliers/noise")
        inliers = inliers + noise_sigma * rng.standard_normal((n_inliers, 2))
    j = np.arange(n_outliers)
    outliers = OUTLIER_BASE[j % 5] - np.outer(j // 5, [0.0, 0.1])
    return np.vstack([inliers, outliers]).reshape(-1, 2)


def apply_drift(points):
    """Lighting drift ``x_i -> 3/4 x_i + i/(8N) (1 + x_i)`` with 1-based ``i``."""
    X = as_points(points)
    n = X.shape[0]
    i = np.arange(1, n + 1, dtype=float)[:, None]
    return 0.75 * X + (i / (8.0 * n)) * (1.0 + X)


def gen_frames(n_frames=60, shape=(8, 8), n_outliers=3, noise_sigma=0.01, seed=0):
    """Flattened noisy frames of a static scene.

    The last ``n_outliers`` frames carry a bright square in a corner that
    the other frames lack. Pass the result through :func:`apply_drift` for
    a slow brightness change. Returns ``(frames, outlier_mask)``.
    """
    if n_outliers > n_frames:
        raise ValueError("more outliers than frames")
    h, w = shape
    rng = substream(seed, "gen_frames/scene")
    scene = rng.uniform(0.2, 0.8, size=(h, w))
    frames = np.repeat(scene[None], n_frames, axis=0)
    noise = substream(seed, "gen_frames/noise")
    frames = frames + noise_sigma * noise.standard_normal(frames.shape)
    mask = np.zeros(n_frames, dtype=bool)
    if n_outliers:
        mask[-n_outliers:] = True
        frames[mask, : h // 2, : w // 2] += 1.0
    return frames.reshape(n_frames, h * w), mask
