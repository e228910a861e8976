import pytest

from bogopath.params import MeasureParams


@pytest.fixture
def p111() -> MeasureParams:
    return MeasureParams(m=1.0, omega=1.0, beta=1.0)


@pytest.fixture
def p112() -> MeasureParams:
    return MeasureParams(m=1.0, omega=1.0, beta=2.0)
