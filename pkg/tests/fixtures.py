"""Seed-fixed datasets shared by several test modules."""
from clusterkit.data import generate_rings

# Two rings, radii 1 and 5, 100 points each, radial noise sd 0.05.  With this
# seed the largest gap needed to walk around either ring is below 1.2 and the
# two rings are more than 3.7 apart, so eps = 2 separates them.
RINGS_SEED = 3
RINGS_EPS = 2.0
RINGS_MIN_NEAR = 3


def rings():
    return generate_rings(100, [1.0, 5.0], noise_sd=0.05, seed=RINGS_SEED)
