import pytest

ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion; the outcome is set from the test report."""
    entry = {"name": None, "nodeid": request.node.nodeid, "detail": ""}
    ACCEPTANCE_RESULTS.append(entry)
    return entry


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    for entry in ACCEPTANCE_RESULTS:
        if entry["nodeid"] == item.nodeid:
            entry["passed"] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for entry in ACCEPTANCE_RESULTS:
        status = "PASS" if entry.get("passed") else "FAIL"
        terminalreporter.write_line(f"[{status}] {entry['name']}  {entry['detail']}")
