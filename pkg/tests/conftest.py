import pytest

from popnc import parse_polynomial, parse_problem

EXAMPLE31 = """
# two-dimensional illustrative instance
vars: x1 x2
obj: x1^2 + 1
ineq: 1 - x2^2
ineq: x2^2 - 1/4
c: 2
"""

SEXTIC_DOC = """
vars: x1 x2
obj: x1^6 + x2^6 - x1^3*x2^3 + x1^4 - x2 + 1
x0: 0 0
margin: 1
"""


@pytest.fixture
def example31():
    return parse_problem(EXAMPLE31)


@pytest.fixture
def example31_rational():
    return parse_problem(EXAMPLE31, rational=True)


@pytest.fixture
def sextic_problem():
    return parse_problem(SEXTIC_DOC)


@pytest.fixture
def sextic():
    return parse_polynomial("x1^6 + x2^6 - x1^3*x2^3 + x1^4 - x2 + 1", ["x1", "x2"])
