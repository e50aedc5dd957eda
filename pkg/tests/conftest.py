import pytest

from bistream import tensor as T


@pytest.fixture(autouse=True)
def finite_checks():
    # every op output is asserted finite while tests run
    T.set_finite_checks(True)
    yield
    T.set_finite_checks(False)
