import re

ACCEPTANCE_FILE = "test_acceptance.py"
_results: dict[int, tuple[str, str, str]] = {}


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    n, title = int(m.group(1)), m.group(2).replace("_", " ")
    detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
    if report.when == "call" or report.failed:
        if report.failed or n not in _results:
            _results[n] = (title, "FAIL" if report.failed else "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        title, status, detail = _results[n]
        line = f"criterion {n} {title}: {status}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
