import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def positive_compositions(D=None, min_part=1e-4):
    """Strategy for strictly positive compositions with D parts."""
    dims = st.just(D) if D else st.integers(2, 6)
    return dims.flatmap(lambda d: arrays(np.float64, d, elements=st.floats(min_part, 1.0))).map(
        lambda v: v / v.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_simplex(rng, n, D, zeros=False):
    X = rng.dirichlet(np.ones(D), size=n)
    if zeros:
        mask = rng.random((n, D)) < 0.3
        mask[np.arange(n), rng.integers(0, D, n)] = False
        X = np.where(mask, 0.0, X)
        X /= X.sum(axis=1, keepdims=True)
    return X


def iid_compositions(rng, preset, n):
    """Independent inverse-alpha0-IT Gaussian compositions for a scenario preset.

    Draws falling outside the alpha0 codomain (far Gaussian tails) are redrawn.
    """
    from alphait.simulate import ScenarioConfig
    from alphait.transforms import in_codomain, inverse_coordinates

    sc = ScenarioConfig.preset(preset)
    L = np.linalg.cholesky(sc.coregionalization)
    shift = np.asarray(sc.shift)
    Z = np.empty((0, sc.p))
    while Z.shape[0] < n:
        draw = sc.scale * (rng.standard_normal((n, sc.p)) @ L.T - shift)
        if sc.alpha0 > 0:
            draw = draw[np.atleast_1d(in_codomain(draw, sc.alpha0))]
        Z = np.vstack([Z, draw])
    return inverse_coordinates(Z[:n], sc.alpha0).composition
