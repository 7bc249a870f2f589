import math

import pytest

from chebmap.geo import GeoPoint, geodesic_cap, latlon_quadrangle

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cap30():
    return geodesic_cap(GeoPoint(0.0, 0.0), math.radians(30.0), 256, name="cap30")


@pytest.fixture(scope="session")
def quad():
    return latlon_quadrangle(*map(math.radians, (-20.0, 20.0, 30.0, 50.0)), name="quad")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
