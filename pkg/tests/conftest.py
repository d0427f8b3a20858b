import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qcader.mesh import generate_rect_mesh

settings.register_profile("qcader", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("qcader")


@pytest.fixture(scope="session")
def square_mesh():
    return generate_rect_mesh((0.0, 1.0, 0.0, 1.0), 0.25, perturb=0.2, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_states(rng, n, chi=(1.0, 1.0)):
    """Admissible primitive states with moderate ranges."""
    return np.column_stack([rng.uniform(0.1, 5.0, n), rng.normal(0, 2, n), rng.normal(0, 2, n),
                            rng.uniform(0.1, 10.0, n), rng.uniform(chi[0], chi[1], n)])


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Print one PASS/FAIL line per criterion and repeat it in the terminal summary."""
    def report(number, title, ok, detail=""):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
        print(line)
        _ACCEPTANCE_LINES.append((number, line))
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES, key=lambda x: x[0]):
            terminalreporter.write_line(line)
