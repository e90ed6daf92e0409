import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hermitian(rng, n):
    A = crandn(rng, n, n)
    return (A + A.conj().T) / 2


# acceptance criteria report lines, printed after the test session
ACCEPTANCE = []


def record_criterion(number, name, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE, key=lambda x: x[0]):
            terminalreporter.write_line(line)
