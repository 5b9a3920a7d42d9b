import numpy as np
import pytest

from varframe.packed import FeatureSequence


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_seqs(rng, lengths, dim, labels=None):
    labels = labels if labels is not None else [i % 2 for i in range(len(lengths))]
    return [FeatureSequence(f"v{i}", labels[i], rng.standard_normal((t, dim))) for i, t in enumerate(lengths)]


# ---------------------------------------------------------------- acceptance summary

_acceptance: list[tuple[int, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        title = marker.args[1]
        if hasattr(item, "callspec"):
            title += f" [{item.callspec.id}]"
        _acceptance.append((marker.args[0], title, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome in sorted(_acceptance):
        status = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {title}")
