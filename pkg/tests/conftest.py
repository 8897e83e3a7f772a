import pytest

_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion with a pass/fail summary line")
    config.stash[_CRITERIA] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    item.config.stash[_CRITERIA].append((number, title, rep.passed, rep.duration))


def pytest_terminal_summary(terminalreporter, config):
    rows = sorted(config.stash[_CRITERIA])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, duration in rows:
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  ({duration:.1f} s)")
