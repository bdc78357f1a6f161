import numpy as np

from noisymaps.maps import PiecewiseLinearMap


def random_pl_map(rng: np.random.Generator, max_interior: int = 6) -> PiecewiseLinearMap:
    """Random piecewise linear map for property tests."""
    k = int(rng.integers(0, max_interior + 1))
    interior = np.sort(rng.uniform(0.02, 0.98, size=k))
    # drop near-collisions so the constructor's strictness is never the test
    keep = np.concatenate(([True], np.diff(interior) > 1e-6)) if k else np.array([], bool)
    interior = interior[keep] if k else interior
    bp = np.concatenate(([0.0], interior, [1.0]))
    vals = rng.uniform(0.0, 1.0, size=bp.size)
    return PiecewiseLinearMap(tuple(bp), tuple(vals))
