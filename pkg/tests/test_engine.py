"""
GField - expectation engines
"""
# License: GPLv3, see License.txt

import math

import numpy
import pytest

from gfield.config import ConfigException
from gfield.engine import ExpectationEngine
from gfield.geometry import GramLaw
from gfield.phi import parse
from gfield.vartypes import DpSpec


def test_unknown_engine():
    with pytest.raises(ConfigException):
        ExpectationEngine('mc')


@pytest.mark.parametrize('name', ['pde', 'oracle'])
def test_second_moment(name, ambiguous):
    engine = ExpectationEngine(name, dp=DpSpec(steps=50))
    value, descriptor = engine.law_expectation(GramLaw([[2.0]], ambiguous), parse('x1^2'))
    assert value.upper == pytest.approx(8.0, rel=1e-3)
    assert value.lower == pytest.approx(2.0, rel=1e-3)
    assert descriptor


def test_engines_agree_on_a_kink(ambiguous):
    law = GramLaw([[1.0]], ambiguous)
    phi = parse('abs(x1)')
    pde, _ = ExpectationEngine('pde').law_expectation(law, phi)
    oracle, _ = ExpectationEngine('oracle').law_expectation(law, phi)
    assert pde.upper == pytest.approx(oracle.upper, abs=5e-3)
    assert pde.lower == pytest.approx(oracle.lower, abs=5e-3)
    assert oracle.upper == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), abs=5e-3)


def test_point_mass(ambiguous):
    value, descriptor = ExpectationEngine('pde').law_expectation(GramLaw([[0.0]], ambiguous), parse('x1 + 3'))
    assert (value.upper, value.lower) == (3.0, 3.0)
    assert descriptor == 'pde point-mass'


@pytest.mark.parametrize('name', ['pde', 'oracle'])
def test_layer_integrator(name, ambiguous):
    engine = ExpectationEngine(name)
    integrator = engine.integrator([1.0, 0.0], ambiguous)
    assert integrator is engine.integrator([1.0, 0.0], ambiguous)
    assert integrator is not engine.integrator([2.0, 0.0], ambiguous)
    assert integrator.kept == [0]
    axis = integrator.axes[0]
    values = numpy.stack([axis ** 2, -(axis ** 2)])
    upper = integrator.upper(values)
    assert upper[0] == pytest.approx(4.0, rel=1e-3)
    assert upper[1] == pytest.approx(-1.0, rel=1e-3)
    assert integrator.describe()


def test_describe():
    assert ExpectationEngine('pde').describe() == 'pde radius_mult=8 M=auto'
    assert ExpectationEngine('pde', half_nodes=50).describe() == 'pde radius_mult=8 M=50'
    assert ExpectationEngine('oracle').describe().startswith('oracle ')
