import numpy as np
import pytest

from freightej.demo import write_demo


def random_star(rng, n_vertices=12, radius=1.0, cx=0.0, cy=0.0):
    """Star-shaped (hence simple) polygon ring, counter-clockwise."""
    t = np.sort(rng.uniform(0, 2 * np.pi, n_vertices))
    # strictly increasing angles keep the ring simple
    t = t + np.arange(n_vertices) * 1e-9
    r = radius * rng.uniform(0.3, 1.0, n_vertices)
    return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo")
    write_demo(d)
    return d


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, report_line
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in RESULTS.items():
        terminalreporter.write_line(report_line(name, ok, detail))
