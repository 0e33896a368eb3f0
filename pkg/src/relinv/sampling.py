"""Seeded random instances for property runs.

Points are uniform in [-1, 1]^2 and homographies are the identity plus a
uniform perturbation.  Instances that are degenerate or badly conditioned are
rejected so that relative-error contracts stay meaningful.
"""

import numpy as np

from .projective_core import Homography, PointConfig, apply_config, degeneracy

DEFAULT_SEED = 0xC0FFEE

PERTURBATION = 0.3
# Conditioning bounds applied on top of the general-position test.
MIN_DENOMINATOR = 1e-2
MAX_CONDITION = 1e3


def make_rng(seed=DEFAULT_SEED):
    return np.random.default_rng(seed)


def random_homography(rng, scale=PERTURBATION) -> Homography:
    while True:
        m = np.eye(3) + rng.uniform(-scale, scale, size=(3, 3))
        if np.linalg.cond(m) < MAX_CONDITION:
            return Homography(m)


def random_config(rng, n, min_denominator=MIN_DENOMINATOR) -> PointConfig:
    """Random general-position configuration of ``n`` points.

    Every determinant and invariant denominator exceeds ``min_denominator``
    in magnitude (for n >= 3).
    """
    while True:
        cfg = PointConfig(rng.uniform(-1.0, 1.0, size=(n, 2)))
        if n < 3 or degeneracy(cfg, rel=min_denominator) is None:
            return cfg


def random_pair(rng, n, scale=PERTURBATION):
    """A configuration together with a homography whose image is also well conditioned."""
    while True:
        cfg = random_config(rng, n)
        g = random_homography(rng, scale)
        moved = apply_config(g, cfg)
        if n < 3 or degeneracy(moved, rel=MIN_DENOMINATOR) is None:
            return g, cfg
