import pytest

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k, text): acceptance criterion number k")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None or (report.when != "call" and not report.failed):
        return
    k, text = crit
    prev = _criteria.get(k, (text, "PASS"))[1]
    # a criterion with several parametrized cases fails if any case fails
    _criteria[k] = (text, "FAIL" if report.failed or prev == "FAIL" else "PASS")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(_criteria):
        text, status = _criteria[k]
        tr.write_line(f"criterion {k:2d}: {status}  {text}")
    passed = sum(1 for _, s in _criteria.values() if s == "PASS")
    tr.write_line(f"{passed}/{len(_criteria)} criteria pass")
