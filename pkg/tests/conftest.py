import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from coalsel.dataset import make_rng

settings.register_profile(
    "default", deadline=None, derandomize=True, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return make_rng(12345)


def has_cython() -> bool:
    try:
        from coalsel import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True


BACKENDS = ["python"] + (["cython"] if has_cython() else [])


def relative_error(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
