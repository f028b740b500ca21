"""
GField - shared test fixtures

    HYPOTHESIS_PROFILE=ci runs more examples
"""
# License: GPLv3, see License.txt

import os

import pytest

from hypothesis import HealthCheck, settings

from gfield.config import ToleranceConfig
from gfield.geometry import region_from_literal
from gfield.vartypes import GParams

settings.register_profile('dev', max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile('ci', max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.getenv('HYPOTHESIS_PROFILE', 'dev'))


def box(lo, hi, label=''):
    return region_from_literal({'box': {'lo': list(lo), 'hi': list(hi)}}, label)


@pytest.fixture
def ambiguous() -> GParams:
    return GParams(1.0, 4.0)


@pytest.fixture
def flat() -> GParams:
    return GParams(1.0, 1.0)


@pytest.fixture
def zero_floor() -> GParams:
    return GParams(0.0, 2.0)


@pytest.fixture
def tol() -> ToleranceConfig:
    return ToleranceConfig()


@pytest.fixture
def unit_interval():
    return box([0.0], [1.0], 'A')


@pytest.fixture
def unit_square():
    return box([0.0, 0.0], [1.0, 1.0], 'A')
