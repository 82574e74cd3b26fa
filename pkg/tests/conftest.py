import shutil

import pytest

from stratsynth.catalog import builtin_catalog

_acceptance: dict[str, tuple[str, str]] = {}
_setup_time: dict[str, float] = {}


@pytest.fixture(scope="session")
def qf_bv():
    return builtin_catalog("QF_BV")


@pytest.fixture(scope="session")
def qf_nia():
    return builtin_catalog("QF_NIA")


@pytest.fixture(scope="session")
def z3_path():
    path = shutil.which("z3")
    if path is None:
        pytest.skip("no z3 binary on PATH")
    return path


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "setup":
        # fixture work (shared end-to-end runs, say) counts toward the criterion
        _setup_time[label] = rep.duration
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        took = rep.duration + (_setup_time.get(label, 0.0) if rep.when == "call" else 0.0)
        _acceptance[label] = (status, f"{took:.2f}s")


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance, key=lambda s: int(s.split(".")[0])):
        status, took = _acceptance[label]
        terminalreporter.write_line(f"[{status}] {label} ({took})")
