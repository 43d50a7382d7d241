import numpy as np
import pytest

from qexclusion.numerics import RngStream

_acceptance_lines = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and rep.when == "call":
        num, title = marker.args
        status = "PASS" if rep.passed else "FAIL"
        _acceptance_lines.append((num, f"[{status}] criterion {num:>2}: {title}"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_acceptance_lines):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return RngStream(20240601).generator()


def random_hermitian(gen, d):
    Z = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    return (Z + Z.conj().T) / 2
