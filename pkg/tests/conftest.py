import numpy as np
import pytest

from spinspec import BoundaryConditionSpec, aggregate, make_surface

BUILTIN_SCENARIOS = ("hemisphere", "cap:pi/3", "disk", "annulus:0.5,1.0",
                     "cylinder:2.0")


@pytest.fixture(scope="session")
def solved():
    """Session cache of aggregated spectra keyed by scenario parameters."""
    cache = {}

    def get(geometry, bc, k_max=2.5, N=128, n_fields=2, spin="antiperiodic"):
        key = (geometry, bc, float(k_max), int(N), spin)
        if key not in cache or cache[key][1] < n_fields:
            surface = make_surface(geometry, spin)
            sp = aggregate(surface, BoundaryConditionSpec(bc), k_max, N,
                           n_fields_per_mode=n_fields)
            cache[key] = (sp, n_fields)
        return cache[key][0]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
