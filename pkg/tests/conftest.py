"""Collects acceptance outcomes and prints one line per criterion."""
from collections import defaultdict

_outcomes = defaultdict(list)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _outcomes[marker.args[0]].append((item.name, call.excinfo is None))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        results = _outcomes[n]
        failed = [name for name, ok in results if not ok]
        status = "FAIL" if failed else "PASS"
        note = f" ({len(results) - len(failed)}/{len(results)} checks; failing: {', '.join(failed)})" if failed \
            else f" ({len(results)} checks)"
        terminalreporter.write_line(f"criterion {n}: {status}{note}")
