import pytest
from hypothesis import strategies as st

from indexrate.generators import load_fixture
from indexrate.instance import BitSpec, Instance

# acceptance outcomes keyed by criterion number, filled in by the report hook
_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE[number] = ("PASS" if rep.passed else "FAIL", title)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        verdict, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"AC{number:<3} {verdict}  {title}")


@pytest.fixture
def example1():
    return load_fixture("capm_example1")


@st.composite
def instances(draw, max_m=5, max_s=7, min_m=1):
    """Random valid instances: each bit gets a nonempty demand set and a disjoint holder set."""
    m = draw(st.integers(min_m, max_m))
    s = draw(st.integers(0, max_s))
    bits = []
    for k in range(1, s + 1):
        need = draw(st.integers(1, (1 << m) - 1))
        has = draw(st.integers(0, (1 << m) - 1)) & ~need
        bits.append(BitSpec(f"b{k}", need, has))
    return Instance(m, tuple(bits))
