"""Session-scoped fixtures backed by the acceptance module's cache.

The heavy artifacts (natural speed, the c = -0.1 optimal profile, the
Model-2 sandwich pipeline) are computed once per session and shared
between the acceptance tests and the module tests.
"""

from __future__ import annotations

import pytest

import travwave.acceptance as acc


@pytest.fixture(scope="session")
def weed():
    return acc._weed()


@pytest.fixture(scope="session")
def c_star_weed():
    return acc._c_star()


@pytest.fixture(scope="session")
def opt01(weed):
    return acc._optimal_01()


@pytest.fixture(scope="session")
def spatial01(opt01):
    return acc._spatial_01()


@pytest.fixture(scope="session")
def m2_pipeline():
    return acc._m2_pipeline()
