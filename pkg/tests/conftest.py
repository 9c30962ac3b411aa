"""Collects one verdict line per acceptance criterion and prints them at the end."""

_VERDICTS = {}


def pytest_runtest_makereport(item, call):
    # the first docstring line names the criterion in the summary
    if call.when == "setup" and "test_criterion_" in item.name and item.function.__doc__:
        item.user_properties.append(("criterion", item.function.__doc__.strip().splitlines()[0]))


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.failed:
        doc = dict(report.user_properties).get("criterion", report.nodeid.rsplit("::", 1)[1])
        _VERDICTS[report.nodeid] = ("PASS" if report.passed else "FAIL", doc)


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, doc in _VERDICTS.values():
        terminalreporter.write_line(f"{verdict}  {doc}")
